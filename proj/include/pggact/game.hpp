#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pggact/lattice.hpp"
#include "pggact/rng.hpp"

namespace pggact {

// Binary strategy per agent: 1 = cooperate, 0 = defect.
struct StrategyField {
  std::vector<std::uint8_t> strategies;
  long step = 0;
};

struct PayoffField {
  std::vector<double> payoffs;
};

struct InitScheme {
  enum class Kind { HalfHalf, Bernoulli, AllDefect, AllCooperate };

  Kind kind = Kind::Bernoulli;
  double p = 0.5;  // cooperation probability, Bernoulli only

  static InitScheme half_half() { return {Kind::HalfHalf, 0.0}; }
  static InitScheme bernoulli(double p) { return {Kind::Bernoulli, p}; }
  static InitScheme all_defect() { return {Kind::AllDefect, 0.0}; }
  static InitScheme all_cooperate() { return {Kind::AllCooperate, 0.0}; }

  // Accepts "half-half", "bernoulli", "all-defect", "all-coop"/"all-cooperate".
  static InitScheme parse(const std::string& name, double p = 0.5);
  std::string name() const;
};

// HalfHalf places defectors in the upper ceil(L/2) rows and cooperators
// below; Bernoulli draws each cell independently (one uniform per agent in
// ascending id order).
StrategyField init_strategies(const InitScheme& scheme, const Lattice& lat,
                              Rng& rng);

// Payoffs of the five members of one group under enhancement factor r > 1:
// everyone receives r * n_coop / 5, cooperators additionally pay their unit
// contribution.
std::array<double, Lattice::kGroupSize> group_payoffs(
    const StrategyField& field, const std::array<int, Lattice::kGroupSize>& members,
    double r);

// Per-agent payoff accumulated over the five groups the agent belongs to.
// Iterates group centers in ascending id order, which fixes the
// floating-point accumulation order per agent.
PayoffField cumulative_payoffs(const StrategyField& field, const Lattice& lat,
                               double r);

// Payoff of a single agent, identical (bitwise) to the corresponding entry
// of cumulative_payoffs.
double agent_payoff(const StrategyField& field, const Lattice& lat, double r,
                    int agent);

double cooperation_fraction(const StrategyField& field);

// Binary PGM (P5), one byte per cell, row-major: 0 = defector (black),
// 255 = cooperator (white).
void write_pgm(const StrategyField& field, const Lattice& lat,
               const std::string& path);

}  // namespace pggact
