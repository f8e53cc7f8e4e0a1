#pragma once

#include <array>
#include <vector>

namespace pggact {

// Periodic L x L grid with von Neumann neighborhoods. Agent ids are
// row-major (id = row * L + col) and the neighbor order is fixed as
// (up, down, left, right); everything downstream relies on that order for
// deterministic RNG consumption and payoff accumulation.
struct Lattice {
  static constexpr int kDegree = 4;          // von Neumann neighbors
  static constexpr int kGroupSize = 5;       // center + its neighbors
  static constexpr int kGroupsPerAgent = 5;  // own group + the neighbors' groups

  int side = 0;    // L
  int agents = 0;  // N = L * L
  std::vector<std::array<int, kDegree>> neighbors;

  int row_of(int agent) const { return agent / side; }
  int col_of(int agent) const { return agent % side; }
};

// Builds the grid; requires side >= 3 so the four wrapped neighbors of every
// agent are distinct.
Lattice build_lattice(int side);

// Members of the game group centered at `center`, in the stable order
// (center, up, down, left, right).
std::array<int, Lattice::kGroupSize> group_members(const Lattice& lat, int center);

}  // namespace pggact
