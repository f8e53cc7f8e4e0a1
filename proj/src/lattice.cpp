#include "pggact/lattice.hpp"

#include <stdexcept>
#include <string>

namespace pggact {

Lattice build_lattice(int side) {
  if (side < 3) {
    throw std::invalid_argument("lattice side must be >= 3, got " +
                                std::to_string(side));
  }
  Lattice lat;
  lat.side = side;
  lat.agents = side * side;
  lat.neighbors.resize(static_cast<std::size_t>(lat.agents));
  for (int row = 0; row < side; ++row) {
    const int up = (row == 0) ? side - 1 : row - 1;
    const int down = (row == side - 1) ? 0 : row + 1;
    for (int col = 0; col < side; ++col) {
      const int left = (col == 0) ? side - 1 : col - 1;
      const int right = (col == side - 1) ? 0 : col + 1;
      lat.neighbors[static_cast<std::size_t>(row * side + col)] = {
          up * side + col, down * side + col, row * side + left,
          row * side + right};
    }
  }
  return lat;
}

std::array<int, Lattice::kGroupSize> group_members(const Lattice& lat,
                                                   int center) {
  if (center < 0 || center >= lat.agents) {
    throw std::out_of_range("agent id " + std::to_string(center) +
                            " outside lattice of " +
                            std::to_string(lat.agents) + " agents");
  }
  const auto& nb = lat.neighbors[static_cast<std::size_t>(center)];
  return {center, nb[0], nb[1], nb[2], nb[3]};
}

}  // namespace pggact
