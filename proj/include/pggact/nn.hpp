#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "pggact/rng.hpp"

namespace pggact::nn {

// Actor-critic network: two shared ReLU layers feeding a 2-logit actor head
// and a scalar critic head. Biases are stored as single-column matrices so
// that optimizer state and checkpoints can treat all eight tensors uniformly.
struct PolicyParams {
  Eigen::MatrixXd w1, b1;            // input -> hidden
  Eigen::MatrixXd w2, b2;            // hidden -> hidden
  Eigen::MatrixXd w_actor, b_actor;  // hidden -> 2 logits
  Eigen::MatrixXd w_critic, b_critic;  // hidden -> 1 value

  int state_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }

  std::array<Eigen::MatrixXd*, 8> tensors();
  std::array<const Eigen::MatrixXd*, 8> tensors() const;
  static const std::array<const char*, 8>& tensor_names();

  // Weights and biases uniform in +-1/sqrt(fan_in), drawn from `rng` in
  // tensor order, column-major within each tensor.
  static PolicyParams init(int state_dim, int hidden_dim, Rng& rng);
};

// Activations of one batched forward pass; states are columns.
struct ForwardPass {
  Eigen::MatrixXd z1, h1, z2, h2;
  Eigen::MatrixXd logits;     // (2, B)
  Eigen::MatrixXd probs;      // (2, B), softmax per column (max-subtracted)
  Eigen::MatrixXd log_probs;  // (2, B)
  Eigen::RowVectorXd values;  // (B)
};

ForwardPass forward(const PolicyParams& params, const Eigen::MatrixXd& states);

// Training samples for one update step.
struct Batch {
  Eigen::MatrixXd states;  // (state_dim, B)
  std::vector<int> actions;
  Eigen::VectorXd log_probs_old;
  Eigen::VectorXd advantages;
  Eigen::VectorXd value_targets;

  Eigen::Index size() const { return states.cols(); }
};

struct Gradients {
  Eigen::MatrixXd w1, b1, w2, b2, w_actor, b_actor, w_critic, b_critic;

  Gradients() = default;
  explicit Gradients(const PolicyParams& shape);
  std::array<Eigen::MatrixXd*, 8> tensors();
  std::array<const Eigen::MatrixXd*, 8> tensors() const;
};

// Batch means of the objective pieces. objective = clip_term
// - value_weight * value_term + entropy_weight * entropy_term; the update
// minimizes its negation.
struct LossStats {
  double clip_term = 0.0;
  double value_term = 0.0;
  double entropy_term = 0.0;
  double objective = 0.0;
  double mean_ratio = 0.0;
  double clip_fraction = 0.0;  // fraction of samples with ratio outside the clip band
};

// Scalar objective for a fixed batch (used by finite-difference checks).
double objective(const PolicyParams& params, const Batch& batch,
                 double clip_eps, double value_weight, double entropy_weight);

// Exact gradient of the negated objective, averaged over the batch. Clipped
// samples contribute zero policy gradient; the ReLU subgradient at 0 is 0.
LossStats backward(const PolicyParams& params, const Batch& batch,
                   double clip_eps, double value_weight, double entropy_weight,
                   Gradients& out);

// Adaptive moment estimation with bias correction and a step learning-rate
// schedule (alpha halves every 1000 iterations).
struct AdamState {
  std::vector<Eigen::MatrixXd> m, v;
  long step = 0;
  double alpha0 = 1e-3;
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(const PolicyParams& shape, double alpha0);
  // Fresh moments and schedule with a new base learning rate.
  void reset(const PolicyParams& shape, double new_alpha0);
};

// One update; rejects non-finite gradients without touching the parameters.
void adam_step(AdamState& opt, PolicyParams& params, const Gradients& grads);

// alpha = alpha0 * 0.5^(iteration / 1000)
void lr_schedule(AdamState& opt, long iteration);

// Versioned little-endian checkpoint of the parameter tensors; round-trips
// bit-exactly.
void save_checkpoint(const PolicyParams& params, const std::string& path);
PolicyParams load_checkpoint(const std::string& path);

}  // namespace pggact::nn
