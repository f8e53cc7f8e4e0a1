#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "pggact/lattice.hpp"

using namespace pggact;

TEST_CASE("wrap-around neighbors of the corner agent on a 3x3 grid") {
  const Lattice lat = build_lattice(3);
  CHECK(lat.agents == 9);
  const auto& nb = lat.neighbors[0];  // (up, down, left, right)
  CHECK(nb[0] == 6);
  CHECK(nb[1] == 3);
  CHECK(nb[2] == 2);
  CHECK(nb[3] == 1);
}

TEST_CASE("group members keep the (center, up, down, left, right) order") {
  const Lattice lat = build_lattice(3);
  CHECK(group_members(lat, 4) == std::array<int, 5>{4, 1, 7, 3, 5});
  CHECK(group_members(lat, 0) == std::array<int, 5>{0, 6, 3, 2, 1});
}

TEST_CASE("neighbor relation is symmetric and neighbors are distinct") {
  for (int side : {3, 4, 5, 7}) {
    const Lattice lat = build_lattice(side);
    for (int i = 0; i < lat.agents; ++i) {
      std::set<int> unique;
      for (int j : lat.neighbors[static_cast<std::size_t>(i)]) {
        unique.insert(j);
        bool back = false;
        for (int k : lat.neighbors[static_cast<std::size_t>(j)]) {
          back = back || k == i;
        }
        CHECK(back);
      }
      CHECK(unique.size() == 4);
      CHECK(unique.count(i) == 0);
    }
  }
}

TEST_CASE("every agent appears in exactly five groups") {
  for (int side : {3, 5}) {
    const Lattice lat = build_lattice(side);
    std::vector<int> memberships(static_cast<std::size_t>(lat.agents), 0);
    long total = 0;
    for (int center = 0; center < lat.agents; ++center) {
      const auto members = group_members(lat, center);
      total += static_cast<long>(members.size());
      for (int m : members) memberships[static_cast<std::size_t>(m)] += 1;
    }
    CHECK(total == 5L * lat.agents);
    for (int count : memberships) CHECK(count == 5);
  }
}

TEST_CASE("group membership contains the center exactly once") {
  const Lattice lat = build_lattice(6);
  for (int i = 0; i < lat.agents; ++i) {
    const auto members = group_members(lat, i);
    int hits = 0;
    for (int m : members) hits += m == i;
    CHECK(hits == 1);
  }
}

TEST_CASE("paper-scale lattice has the expected counts") {
  const Lattice lat = build_lattice(200);
  CHECK(lat.agents == 40000);
  CHECK(lat.neighbors.size() == 40000);
  // one group per agent, five members each
  CHECK(group_members(lat, 39999).size() == 5);
}

TEST_CASE("construction is a pure function of the side length") {
  const Lattice a = build_lattice(5);
  const Lattice b = build_lattice(5);
  CHECK(a.neighbors == b.neighbors);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(build_lattice(2), std::invalid_argument);
  CHECK_THROWS_AS(build_lattice(0), std::invalid_argument);
  const Lattice lat = build_lattice(3);
  CHECK_THROWS_AS(group_members(lat, -1), std::out_of_range);
  CHECK_THROWS_AS(group_members(lat, 9), std::out_of_range);
}
