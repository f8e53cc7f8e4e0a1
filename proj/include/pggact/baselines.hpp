#pragma once

#include <vector>

#include "pggact/game.hpp"
#include "pggact/lattice.hpp"
#include "pggact/rng.hpp"

namespace pggact {

// Tabular Q-learning over the discretized agent state
// (own strategy in {0,1}) x (cooperating neighbors in 0..4) -> 10 states,
// 2 actions. One table per agent.
struct QLearnConfig {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon = 0.02;  // exploration rate
};

struct QTables {
  static constexpr int kStates = 10;
  static constexpr int kActions = 2;
  std::vector<double> q;  // agent-major: [agent * 20 + state * 2 + action]
  int agents = 0;

  static QTables zeros(int agents);
  double& at(int agent, int state, int action);
  double at(int agent, int state, int action) const;
};

int q_state_index(const StrategyField& field, const Lattice& lat, int agent);

// One synchronous iteration: epsilon-greedy actions from the current tables,
// field updates at once, every agent applies
// q[s][a] += alpha * (reward + gamma * max_a' q[s'][a'] - q[s][a]).
// Returns the cooperation fraction of the updated field.
double qlearning_iteration(StrategyField& field, QTables& tables,
                           const Lattice& lat, double r,
                           const QLearnConfig& cfg, Rng& rng);

// Fermi imitation rule: agent i adopts a uniformly random neighbor j's
// strategy with probability 1 / (1 + exp((payoff_i - payoff_j) / k)).
struct FermiConfig {
  double temperature = 0.5;  // selection noise K
  bool synchronous = true;   // false: N random single-site updates per iteration
};

double fermi_adoption_probability(double own_payoff, double other_payoff,
                                  double temperature);

double fermi_iteration(StrategyField& field, const Lattice& lat, double r,
                       const FermiConfig& cfg, Rng& rng);

}  // namespace pggact
