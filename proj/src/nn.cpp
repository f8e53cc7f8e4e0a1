#include "pggact/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pggact::nn {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x50474143;  // "PGAC"
constexpr std::uint32_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                               double limit, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = (2.0 * rng.uniform01() - 1.0) * limit;
  }
  return m;
}

void check_batch(const PolicyParams& params, const Batch& batch) {
  const Eigen::Index b = batch.size();
  if (b == 0) throw std::invalid_argument("empty batch");
  if (batch.states.rows() != params.state_dim()) {
    throw std::invalid_argument("batch state dimension mismatch");
  }
  if (static_cast<Eigen::Index>(batch.actions.size()) != b ||
      batch.log_probs_old.size() != b || batch.advantages.size() != b ||
      batch.value_targets.size() != b) {
    throw std::invalid_argument("batch field lengths disagree");
  }
  if (!batch.states.allFinite() || !batch.log_probs_old.allFinite() ||
      !batch.advantages.allFinite() || !batch.value_targets.allFinite()) {
    throw std::invalid_argument("non-finite values in batch");
  }
  for (int a : batch.actions) {
    if (a != 0 && a != 1) throw std::invalid_argument("action must be 0 or 1");
  }
}

}  // namespace

std::array<Eigen::MatrixXd*, 8> PolicyParams::tensors() {
  return {&w1, &b1, &w2, &b2, &w_actor, &b_actor, &w_critic, &b_critic};
}

std::array<const Eigen::MatrixXd*, 8> PolicyParams::tensors() const {
  return {&w1, &b1, &w2, &b2, &w_actor, &b_actor, &w_critic, &b_critic};
}

const std::array<const char*, 8>& PolicyParams::tensor_names() {
  static const std::array<const char*, 8> names = {
      "w1", "b1", "w2", "b2", "w_actor", "b_actor", "w_critic", "b_critic"};
  return names;
}

PolicyParams PolicyParams::init(int state_dim, int hidden_dim, Rng& rng) {
  if (state_dim < 1 || hidden_dim < 1) {
    throw std::invalid_argument("network dimensions must be positive");
  }
  PolicyParams p;
  const double lim1 = 1.0 / std::sqrt(static_cast<double>(state_dim));
  const double lim2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  p.w1 = uniform_matrix(hidden_dim, state_dim, lim1, rng);
  p.b1 = uniform_matrix(hidden_dim, 1, lim1, rng);
  p.w2 = uniform_matrix(hidden_dim, hidden_dim, lim2, rng);
  p.b2 = uniform_matrix(hidden_dim, 1, lim2, rng);
  p.w_actor = uniform_matrix(2, hidden_dim, lim2, rng);
  p.b_actor = uniform_matrix(2, 1, lim2, rng);
  p.w_critic = uniform_matrix(1, hidden_dim, lim2, rng);
  p.b_critic = uniform_matrix(1, 1, lim2, rng);
  return p;
}

ForwardPass forward(const PolicyParams& params, const Eigen::MatrixXd& states) {
  if (states.rows() != params.state_dim()) {
    throw std::invalid_argument("state dimension mismatch");
  }
  ForwardPass f;
  f.z1.noalias() = params.w1 * states;
  f.z1.colwise() += params.b1.col(0);
  f.h1 = f.z1.cwiseMax(0.0);
  f.z2.noalias() = params.w2 * f.h1;
  f.z2.colwise() += params.b2.col(0);
  f.h2 = f.z2.cwiseMax(0.0);
  f.logits.noalias() = params.w_actor * f.h2;
  f.logits.colwise() += params.b_actor.col(0);

  const Eigen::Index b = states.cols();
  f.probs.resize(2, b);
  f.log_probs.resize(2, b);
  for (Eigen::Index j = 0; j < b; ++j) {
    const double z0 = f.logits(0, j);
    const double z1 = f.logits(1, j);
    const double m = std::max(z0, z1);
    const double e0 = std::exp(z0 - m);
    const double e1 = std::exp(z1 - m);
    const double sum = e0 + e1;
    const double log_sum = std::log(sum);
    f.probs(0, j) = e0 / sum;
    f.probs(1, j) = e1 / sum;
    f.log_probs(0, j) = (z0 - m) - log_sum;
    f.log_probs(1, j) = (z1 - m) - log_sum;
  }
  Eigen::MatrixXd value_row = params.w_critic * f.h2;
  f.values = value_row.row(0);
  f.values.array() += params.b_critic(0, 0);
  return f;
}

Gradients::Gradients(const PolicyParams& shape) {
  auto src = shape.tensors();
  auto dst = tensors();
  for (std::size_t k = 0; k < src.size(); ++k) {
    *dst[k] = Eigen::MatrixXd::Zero(src[k]->rows(), src[k]->cols());
  }
}

std::array<Eigen::MatrixXd*, 8> Gradients::tensors() {
  return {&w1, &b1, &w2, &b2, &w_actor, &b_actor, &w_critic, &b_critic};
}

std::array<const Eigen::MatrixXd*, 8> Gradients::tensors() const {
  return {&w1, &b1, &w2, &b2, &w_actor, &b_actor, &w_critic, &b_critic};
}

double objective(const PolicyParams& params, const Batch& batch,
                 double clip_eps, double value_weight, double entropy_weight) {
  check_batch(params, batch);
  const ForwardPass f = forward(params, batch.states);
  const Eigen::Index b = batch.size();
  double clip_sum = 0.0, value_sum = 0.0, entropy_sum = 0.0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const int a = batch.actions[static_cast<std::size_t>(j)];
    const double ratio = std::exp(f.log_probs(a, j) - batch.log_probs_old(j));
    const double adv = batch.advantages(j);
    const double clamped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    clip_sum += std::min(ratio * adv, clamped * adv);
    const double verr = f.values(j) - batch.value_targets(j);
    value_sum += verr * verr;
    entropy_sum -= f.probs(0, j) * f.log_probs(0, j) +
                   f.probs(1, j) * f.log_probs(1, j);
  }
  const double n = static_cast<double>(b);
  return clip_sum / n - value_weight * value_sum / n +
         entropy_weight * entropy_sum / n;
}

LossStats backward(const PolicyParams& params, const Batch& batch,
                   double clip_eps, double value_weight, double entropy_weight,
                   Gradients& out) {
  check_batch(params, batch);
  if (!(clip_eps > 0.0)) {
    throw std::invalid_argument("clip epsilon must be positive");
  }
  const ForwardPass f = forward(params, batch.states);
  const Eigen::Index b = batch.size();
  const double n = static_cast<double>(b);

  Eigen::MatrixXd g_logits(2, b);
  Eigen::MatrixXd g_value(1, b);
  LossStats stats;
  long clipped = 0;
  for (Eigen::Index j = 0; j < b; ++j) {
    const int a = batch.actions[static_cast<std::size_t>(j)];
    const double log_p = f.log_probs(a, j);
    const double ratio = std::exp(log_p - batch.log_probs_old(j));
    const double adv = batch.advantages(j);
    const double clamped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double surr_raw = ratio * adv;
    const double surr_clamped = clamped * adv;
    stats.clip_term += std::min(surr_raw, surr_clamped);
    stats.mean_ratio += ratio;
    if (ratio < 1.0 - clip_eps || ratio > 1.0 + clip_eps) ++clipped;

    const double verr = f.values(j) - batch.value_targets(j);
    stats.value_term += verr * verr;
    const double entropy = -(f.probs(0, j) * f.log_probs(0, j) +
                             f.probs(1, j) * f.log_probs(1, j));
    stats.entropy_term += entropy;

    // Minimized loss F = -(surr - w_v*verr^2 + w_e*H). The surrogate only
    // passes gradient when the unclipped branch attains the min; otherwise
    // the clamp is active and the branch is constant in theta.
    const double d_surr_d_ratio = (surr_raw <= surr_clamped) ? adv : 0.0;
    const double g_logp = -d_surr_d_ratio * ratio;
    for (int k = 0; k < 2; ++k) {
      const double indicator = (k == a) ? 1.0 : 0.0;
      // dH/dz_k = -p_k (log p_k + H); contributes -w_e * dH/dz to F.
      g_logits(k, j) =
          g_logp * (indicator - f.probs(k, j)) +
          entropy_weight * f.probs(k, j) * (f.log_probs(k, j) + entropy);
    }
    g_value(0, j) = 2.0 * value_weight * verr;
  }
  g_logits /= n;
  g_value /= n;

  stats.clip_term /= n;
  stats.value_term /= n;
  stats.entropy_term /= n;
  stats.mean_ratio /= n;
  stats.clip_fraction = static_cast<double>(clipped) / n;
  stats.objective = stats.clip_term - value_weight * stats.value_term +
                    entropy_weight * stats.entropy_term;

  out.w_actor.noalias() = g_logits * f.h2.transpose();
  out.b_actor = g_logits.rowwise().sum();
  out.w_critic.noalias() = g_value * f.h2.transpose();
  out.b_critic = g_value.rowwise().sum();

  Eigen::MatrixXd d_h2 = params.w_actor.transpose() * g_logits;
  d_h2.noalias() += params.w_critic.transpose() * g_value;
  const Eigen::MatrixXd d_z2 =
      (f.z2.array() > 0.0).select(d_h2, Eigen::MatrixXd::Zero(d_h2.rows(), d_h2.cols()));
  out.w2.noalias() = d_z2 * f.h1.transpose();
  out.b2 = d_z2.rowwise().sum();

  Eigen::MatrixXd d_h1 = params.w2.transpose() * d_z2;
  const Eigen::MatrixXd d_z1 =
      (f.z1.array() > 0.0).select(d_h1, Eigen::MatrixXd::Zero(d_h1.rows(), d_h1.cols()));
  out.w1.noalias() = d_z1 * batch.states.transpose();
  out.b1 = d_z1.rowwise().sum();
  return stats;
}

AdamState AdamState::init(const PolicyParams& shape, double alpha0) {
  AdamState opt;
  opt.reset(shape, alpha0);
  return opt;
}

void AdamState::reset(const PolicyParams& shape, double new_alpha0) {
  if (!(new_alpha0 > 0.0)) {
    throw std::invalid_argument("learning rate must be positive");
  }
  m.clear();
  v.clear();
  for (const auto* t : shape.tensors()) {
    m.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
    v.push_back(Eigen::MatrixXd::Zero(t->rows(), t->cols()));
  }
  step = 0;
  alpha0 = new_alpha0;
  alpha = new_alpha0;
}

void adam_step(AdamState& opt, PolicyParams& params, const Gradients& grads) {
  auto g = grads.tensors();
  auto p = params.tensors();
  if (opt.m.size() != g.size()) {
    throw std::invalid_argument("optimizer state not initialized for params");
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g[k]->rows() != p[k]->rows() || g[k]->cols() != p[k]->cols()) {
      throw std::invalid_argument("gradient shape mismatch");
    }
    if (!g[k]->allFinite()) {
      throw std::runtime_error("non-finite gradient; parameters unchanged");
    }
  }
  opt.step += 1;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto& m = opt.m[k];
    auto& v = opt.v[k];
    m = opt.beta1 * m + (1.0 - opt.beta1) * (*g[k]);
    v = opt.beta2 * v + (1.0 - opt.beta2) * g[k]->cwiseProduct(*g[k]);
    p[k]->array() -= opt.alpha * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + opt.eps);
  }
}

void lr_schedule(AdamState& opt, long iteration) {
  if (iteration < 0) throw std::invalid_argument("iteration must be >= 0");
  const long halvings = iteration / 1000;
  opt.alpha = opt.alpha0 * std::pow(0.5, static_cast<double>(halvings));
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return value;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_pod(out, kCheckpointMagic);
  write_pod(out, kCheckpointVersion);
  auto tensors = params.tensors();
  const auto& names = PolicyParams::tensor_names();
  write_pod(out, static_cast<std::uint32_t>(tensors.size()));
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const std::uint32_t name_len =
        static_cast<std::uint32_t>(std::strlen(names[k]));
    write_pod(out, name_len);
    out.write(names[k], name_len);
    write_pod(out, static_cast<std::uint64_t>(tensors[k]->rows()));
    write_pod(out, static_cast<std::uint64_t>(tensors[k]->cols()));
    out.write(reinterpret_cast<const char*>(tensors[k]->data()),
              static_cast<std::streamsize>(tensors[k]->size() *
                                           sizeof(double)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  if (read_pod<std::uint32_t>(in) != kCheckpointMagic) {
    throw std::runtime_error(path + " is not a parameter checkpoint");
  }
  if (read_pod<std::uint32_t>(in) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path);
  }
  PolicyParams params;
  auto tensors = params.tensors();
  const auto& names = PolicyParams::tensor_names();
  const std::uint32_t count = read_pod<std::uint32_t>(in);
  if (count != tensors.size()) {
    throw std::runtime_error("unexpected tensor count in " + path);
  }
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    const std::uint32_t name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in || name != names[k]) {
      throw std::runtime_error("unexpected tensor name in " + path);
    }
    const auto rows = read_pod<std::uint64_t>(in);
    const auto cols = read_pod<std::uint64_t>(in);
    tensors[k]->resize(static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(cols));
    in.read(reinterpret_cast<char*>(tensors[k]->data()),
            static_cast<std::streamsize>(tensors[k]->size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated checkpoint " + path);
  }
  if (params.w1.rows() != params.w2.rows() || params.w_actor.rows() != 2 ||
      params.w_critic.rows() != 1) {
    throw std::runtime_error("inconsistent tensor shapes in " + path);
  }
  return params;
}

}  // namespace pggact::nn
