#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "pggact/game.hpp"
#include "pggact/lattice.hpp"
#include "pggact/nn.hpp"
#include "pggact/rng.hpp"

namespace pggact {

// Policy input per agent: own current strategy, fraction of cooperating
// neighbors, and last payoff normalized by G*(r-1), clamped to [-1, 1].
inline constexpr int kStateDim = 3;

Eigen::Vector3d encode_state(const StrategyField& field,
                             const PayoffField& payoffs, const Lattice& lat,
                             int agent, double r);

// All agents at once, one column per agent.
Eigen::MatrixXd encode_states(const StrategyField& field,
                              const PayoffField& payoffs, const Lattice& lat,
                              double r);

// Trajectories of the whole population over one rollout segment, time-major:
// sample index = step * agents + agent.
struct RolloutBuffer {
  int agents = 0;
  int steps = 0;
  Eigen::MatrixXd states;  // (kStateDim, steps * agents)
  std::vector<int> actions;
  Eigen::VectorXd log_probs;
  Eigen::VectorXd values;
  Eigen::VectorXd rewards;
  Eigen::RowVectorXd bootstrap_values;  // critic value of the post-segment state
  Eigen::VectorXd advantages;           // filled by compute_advantages
  Eigen::VectorXd value_targets;
  bool complete = false;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(steps) * agents;
  }
};

struct RolloutResult {
  RolloutBuffer buffer;
  StrategyField field;            // after the last step
  PayoffField payoffs;            // payoffs of that field
  std::vector<double> fractions;  // cooperation fraction after each step
};

using StepCallback =
    std::function<void(int step, double fraction, const StrategyField&)>;

// Runs `horizon` synchronous environment steps: every agent samples an
// action from the shared policy (one uniform per agent in id order), the
// field updates at once, payoffs become the rewards. `payoffs` must belong
// to `field`.
RolloutResult collect_rollout(const StrategyField& field,
                              const PayoffField& payoffs, const Lattice& lat,
                              const nn::PolicyParams& params, double r,
                              int horizon, Rng& rng,
                              const StepCallback& on_step = {});

// Generalized advantage estimation over one series via the backward
// recursion a_t = psi_t + gamma*lambda*a_{t+1} with
// psi_t = r_t + gamma*v_{t+1} - v_t; the bootstrap value stands in for
// v_T. Returns (advantages, value targets).
std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    double bootstrap_value, double gamma, double lambda);

// Per-agent GAE over the buffer; marks it complete.
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda);

struct PpoConfig {
  double clip_eps = 0.2;
  double value_weight = 0.5;
  double entropy_weight = 1e-3;
  int update_epochs = 4;
  int minibatch_size = 4096;
  bool normalize_advantages = true;
};

struct UpdateReport {
  nn::LossStats stats;  // averaged over all minibatches of the update
  double learning_rate = 0.0;
  long minibatches = 0;
};

// Minimizes the negated clipped objective over shuffled minibatches for the
// configured number of epochs. A non-finite loss aborts the whole update and
// restores the incoming parameters and optimizer state.
UpdateReport ppo_update(nn::PolicyParams& params, nn::AdamState& opt,
                        const RolloutBuffer& buffer, const PpoConfig& cfg,
                        Rng& rng);

}  // namespace pggact
