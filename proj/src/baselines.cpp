#include "pggact/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace pggact {

QTables QTables::zeros(int agents) {
  QTables t;
  t.agents = agents;
  t.q.assign(static_cast<std::size_t>(agents) * kStates * kActions, 0.0);
  return t;
}

double& QTables::at(int agent, int state, int action) {
  return q[(static_cast<std::size_t>(agent) * kStates + state) * kActions +
           action];
}

double QTables::at(int agent, int state, int action) const {
  return q[(static_cast<std::size_t>(agent) * kStates + state) * kActions +
           action];
}

int q_state_index(const StrategyField& field, const Lattice& lat, int agent) {
  const auto& nb = lat.neighbors[static_cast<std::size_t>(agent)];
  int coop = 0;
  for (int j : nb) coop += field.strategies[static_cast<std::size_t>(j)];
  return field.strategies[static_cast<std::size_t>(agent)] * 5 + coop;
}

double qlearning_iteration(StrategyField& field, QTables& tables,
                           const Lattice& lat, double r,
                           const QLearnConfig& cfg, Rng& rng) {
  if (tables.agents != lat.agents) {
    throw std::invalid_argument("Q tables do not match lattice");
  }
  if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0) {
    throw std::invalid_argument("exploration rate must lie in [0,1]");
  }
  const int n = lat.agents;
  std::vector<int> states(static_cast<std::size_t>(n));
  std::vector<int> actions(static_cast<std::size_t>(n));
  StrategyField next = field;
  next.step = field.step + 1;
  for (int i = 0; i < n; ++i) {
    const int s = q_state_index(field, lat, i);
    states[static_cast<std::size_t>(i)] = s;
    int a;
    if (rng.uniform01() < cfg.epsilon) {
      a = static_cast<int>(rng.uniform_int(2));
    } else {
      const double q0 = tables.at(i, s, 0);
      const double q1 = tables.at(i, s, 1);
      if (q1 > q0) {
        a = 1;
      } else if (q0 > q1) {
        a = 0;
      } else {
        a = static_cast<int>(rng.uniform_int(2));
      }
    }
    actions[static_cast<std::size_t>(i)] = a;
    next.strategies[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(a);
  }
  field = std::move(next);
  const PayoffField payoffs = cumulative_payoffs(field, lat, r);
  for (int i = 0; i < n; ++i) {
    const int s = states[static_cast<std::size_t>(i)];
    const int a = actions[static_cast<std::size_t>(i)];
    const int s_next = q_state_index(field, lat, i);
    const double best_next =
        std::max(tables.at(i, s_next, 0), tables.at(i, s_next, 1));
    double& q = tables.at(i, s, a);
    q += cfg.alpha * (payoffs.payoffs[static_cast<std::size_t>(i)] +
                      cfg.gamma * best_next - q);
  }
  return cooperation_fraction(field);
}

double fermi_adoption_probability(double own_payoff, double other_payoff,
                                  double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("Fermi temperature must be positive");
  }
  return 1.0 / (1.0 + std::exp((own_payoff - other_payoff) / temperature));
}

double fermi_iteration(StrategyField& field, const Lattice& lat, double r,
                       const FermiConfig& cfg, Rng& rng) {
  if (!(cfg.temperature > 0.0)) {
    throw std::invalid_argument("Fermi temperature must be positive");
  }
  const int n = lat.agents;
  if (cfg.synchronous) {
    const PayoffField payoffs = cumulative_payoffs(field, lat, r);
    StrategyField next = field;
    next.step = field.step + 1;
    for (int i = 0; i < n; ++i) {
      const int j = lat.neighbors[static_cast<std::size_t>(i)]
                                 [rng.uniform_int(Lattice::kDegree)];
      const double p = fermi_adoption_probability(
          payoffs.payoffs[static_cast<std::size_t>(i)],
          payoffs.payoffs[static_cast<std::size_t>(j)], cfg.temperature);
      if (rng.uniform01() < p) {
        next.strategies[static_cast<std::size_t>(i)] =
            field.strategies[static_cast<std::size_t>(j)];
      }
    }
    field = std::move(next);
  } else {
    // Asynchronous variant: N random single-site updates against the live
    // field, payoffs recomputed locally.
    for (int step = 0; step < n; ++step) {
      const int i = static_cast<int>(rng.uniform_int(n));
      const int j = lat.neighbors[static_cast<std::size_t>(i)]
                                 [rng.uniform_int(Lattice::kDegree)];
      const double p =
          fermi_adoption_probability(agent_payoff(field, lat, r, i),
                            agent_payoff(field, lat, r, j), cfg.temperature);
      if (rng.uniform01() < p) {
        field.strategies[static_cast<std::size_t>(i)] =
            field.strategies[static_cast<std::size_t>(j)];
      }
    }
    field.step += 1;
  }
  return cooperation_fraction(field);
}

}  // namespace pggact
