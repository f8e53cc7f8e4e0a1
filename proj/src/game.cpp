#include "pggact/game.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace pggact {

namespace {

void check_field(const StrategyField& field, const Lattice& lat) {
  if (static_cast<int>(field.strategies.size()) != lat.agents) {
    throw std::invalid_argument("strategy field size does not match lattice");
  }
}

void check_r(double r) {
  if (!(r > 1.0)) {
    throw std::invalid_argument("enhancement factor must exceed 1");
  }
}

inline double member_payoff(double share, bool cooperator) {
  return cooperator ? share - 1.0 : share;
}

}  // namespace

InitScheme InitScheme::parse(const std::string& name, double p) {
  if (name == "half-half") return half_half();
  if (name == "bernoulli") {
    if (p < 0.0 || p > 1.0) {
      throw std::invalid_argument("bernoulli probability must lie in [0,1]");
    }
    return bernoulli(p);
  }
  if (name == "all-defect") return all_defect();
  if (name == "all-coop" || name == "all-cooperate") return all_cooperate();
  throw std::invalid_argument("unknown init scheme: " + name);
}

std::string InitScheme::name() const {
  switch (kind) {
    case Kind::HalfHalf: return "half-half";
    case Kind::Bernoulli: return "bernoulli";
    case Kind::AllDefect: return "all-defect";
    case Kind::AllCooperate: return "all-cooperate";
  }
  return "?";
}

StrategyField init_strategies(const InitScheme& scheme, const Lattice& lat,
                              Rng& rng) {
  StrategyField field;
  field.strategies.assign(static_cast<std::size_t>(lat.agents), 0);
  switch (scheme.kind) {
    case InitScheme::Kind::HalfHalf: {
      // Defectors occupy the upper ceil(L/2) rows.
      const int first_coop_row = (lat.side + 1) / 2;
      for (int i = 0; i < lat.agents; ++i) {
        field.strategies[static_cast<std::size_t>(i)] =
            lat.row_of(i) >= first_coop_row ? 1 : 0;
      }
      break;
    }
    case InitScheme::Kind::Bernoulli: {
      if (scheme.p < 0.0 || scheme.p > 1.0) {
        throw std::invalid_argument("bernoulli probability must lie in [0,1]");
      }
      for (int i = 0; i < lat.agents; ++i) {
        field.strategies[static_cast<std::size_t>(i)] =
            rng.bernoulli(scheme.p) ? 1 : 0;
      }
      break;
    }
    case InitScheme::Kind::AllDefect:
      break;
    case InitScheme::Kind::AllCooperate:
      std::fill(field.strategies.begin(), field.strategies.end(), 1);
      break;
  }
  return field;
}

std::array<double, Lattice::kGroupSize> group_payoffs(
    const StrategyField& field,
    const std::array<int, Lattice::kGroupSize>& members, double r) {
  check_r(r);
  int n_coop = 0;
  for (int m : members) n_coop += field.strategies[static_cast<std::size_t>(m)];
  const double share = r * n_coop / Lattice::kGroupSize;
  std::array<double, Lattice::kGroupSize> result{};
  for (int k = 0; k < Lattice::kGroupSize; ++k) {
    result[static_cast<std::size_t>(k)] = member_payoff(
        share, field.strategies[static_cast<std::size_t>(members[k])] != 0);
  }
  return result;
}

PayoffField cumulative_payoffs(const StrategyField& field, const Lattice& lat,
                               double r) {
  check_field(field, lat);
  check_r(r);
  PayoffField out;
  out.payoffs.assign(static_cast<std::size_t>(lat.agents), 0.0);
  for (int center = 0; center < lat.agents; ++center) {
    const auto& nb = lat.neighbors[static_cast<std::size_t>(center)];
    int n_coop = field.strategies[static_cast<std::size_t>(center)];
    for (int j : nb) n_coop += field.strategies[static_cast<std::size_t>(j)];
    const double share = r * n_coop / Lattice::kGroupSize;
    out.payoffs[static_cast<std::size_t>(center)] += member_payoff(
        share, field.strategies[static_cast<std::size_t>(center)] != 0);
    for (int j : nb) {
      out.payoffs[static_cast<std::size_t>(j)] += member_payoff(
          share, field.strategies[static_cast<std::size_t>(j)] != 0);
    }
  }
  return out;
}

double agent_payoff(const StrategyField& field, const Lattice& lat, double r,
                    int agent) {
  check_r(r);
  auto centers = group_members(lat, agent);
  std::sort(centers.begin(), centers.end());  // ascending, as cumulative_payoffs
  const bool coop = field.strategies[static_cast<std::size_t>(agent)] != 0;
  double total = 0.0;
  for (int center : centers) {
    const auto& nb = lat.neighbors[static_cast<std::size_t>(center)];
    int n_coop = field.strategies[static_cast<std::size_t>(center)];
    for (int j : nb) n_coop += field.strategies[static_cast<std::size_t>(j)];
    total += member_payoff(r * n_coop / Lattice::kGroupSize, coop);
  }
  return total;
}

double cooperation_fraction(const StrategyField& field) {
  if (field.strategies.empty()) return 0.0;
  long count = 0;
  for (std::uint8_t s : field.strategies) count += s;
  return static_cast<double>(count) /
         static_cast<double>(field.strategies.size());
}

void write_pgm(const StrategyField& field, const Lattice& lat,
               const std::string& path) {
  check_field(field, lat);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P5\n" << lat.side << " " << lat.side << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(lat.side));
  for (int r = 0; r < lat.side; ++r) {
    for (int c = 0; c < lat.side; ++c) {
      row[static_cast<std::size_t>(c)] =
          field.strategies[static_cast<std::size_t>(r * lat.side + c)] ? 255 : 0;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pggact
