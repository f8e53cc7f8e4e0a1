#include "pggact/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pggact {

namespace {

double normalized_payoff(double payoff, double r) {
  const double scale = Lattice::kGroupsPerAgent * (r - 1.0);
  return std::clamp(payoff / scale, -1.0, 1.0);
}

}  // namespace

Eigen::Vector3d encode_state(const StrategyField& field,
                             const PayoffField& payoffs, const Lattice& lat,
                             int agent, double r) {
  const auto& nb = lat.neighbors[static_cast<std::size_t>(agent)];
  int coop = 0;
  for (int j : nb) coop += field.strategies[static_cast<std::size_t>(j)];
  Eigen::Vector3d s;
  s[0] = static_cast<double>(field.strategies[static_cast<std::size_t>(agent)]);
  s[1] = static_cast<double>(coop) / Lattice::kDegree;
  s[2] = normalized_payoff(payoffs.payoffs[static_cast<std::size_t>(agent)], r);
  return s;
}

Eigen::MatrixXd encode_states(const StrategyField& field,
                              const PayoffField& payoffs, const Lattice& lat,
                              double r) {
  Eigen::MatrixXd states(kStateDim, lat.agents);
  for (int i = 0; i < lat.agents; ++i) {
    states.col(i) = encode_state(field, payoffs, lat, i, r);
  }
  return states;
}

RolloutResult collect_rollout(const StrategyField& start_field,
                              const PayoffField& start_payoffs,
                              const Lattice& lat,
                              const nn::PolicyParams& params, double r,
                              int horizon, Rng& rng,
                              const StepCallback& on_step) {
  if (horizon < 1) throw std::invalid_argument("rollout horizon must be >= 1");
  const int n = lat.agents;
  RolloutResult out;
  RolloutBuffer& buf = out.buffer;
  buf.agents = n;
  buf.steps = horizon;
  const Eigen::Index total = buf.size();
  buf.states.resize(kStateDim, total);
  buf.actions.resize(static_cast<std::size_t>(total));
  buf.log_probs.resize(total);
  buf.values.resize(total);
  buf.rewards.resize(total);

  StrategyField field = start_field;
  PayoffField payoffs = start_payoffs;
  out.fractions.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    const Eigen::Index base = static_cast<Eigen::Index>(t) * n;
    buf.states.middleCols(base, n) = encode_states(field, payoffs, lat, r);
    const nn::ForwardPass fwd =
        nn::forward(params, buf.states.middleCols(base, n));
    StrategyField next = field;
    next.step = field.step + 1;
    for (int i = 0; i < n; ++i) {
      const int action = rng.uniform01() < fwd.probs(1, i) ? 1 : 0;
      next.strategies[static_cast<std::size_t>(i)] =
          static_cast<std::uint8_t>(action);
      buf.actions[static_cast<std::size_t>(base + i)] = action;
      buf.log_probs(base + i) = fwd.log_probs(action, i);
      buf.values(base + i) = fwd.values(i);
    }
    field = std::move(next);
    payoffs = cumulative_payoffs(field, lat, r);
    for (int i = 0; i < n; ++i) {
      buf.rewards(base + i) = payoffs.payoffs[static_cast<std::size_t>(i)];
    }
    const double frac = cooperation_fraction(field);
    out.fractions.push_back(frac);
    if (on_step) on_step(t, frac, field);
  }
  buf.bootstrap_values =
      nn::forward(params, encode_states(field, payoffs, lat, r)).values;
  out.field = std::move(field);
  out.payoffs = std::move(payoffs);
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> compute_gae(
    const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
    double bootstrap_value, double gamma, double lambda) {
  const Eigen::Index t_max = rewards.size();
  if (t_max < 1) throw std::invalid_argument("empty reward series");
  if (values.size() != t_max) {
    throw std::invalid_argument("reward/value series lengths differ");
  }
  if (gamma < 0.0 || gamma >= 1.0 || lambda < 0.0 || lambda >= 1.0) {
    throw std::invalid_argument("gamma and lambda must lie in [0, 1)");
  }
  Eigen::VectorXd advantages(t_max);
  Eigen::VectorXd targets(t_max);
  double acc = 0.0;
  for (Eigen::Index t = t_max - 1; t >= 0; --t) {
    const double v_next = (t == t_max - 1) ? bootstrap_value : values(t + 1);
    const double psi = rewards(t) + gamma * v_next - values(t);
    acc = psi + gamma * lambda * acc;
    advantages(t) = acc;
    targets(t) = acc + values(t);
  }
  return {std::move(advantages), std::move(targets)};
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda) {
  const int n = buffer.agents;
  const int steps = buffer.steps;
  if (n < 1 || steps < 1) throw std::invalid_argument("empty rollout buffer");
  if (buffer.bootstrap_values.size() != n) {
    throw std::invalid_argument("bootstrap values missing");
  }
  if (gamma < 0.0 || gamma >= 1.0 || lambda < 0.0 || lambda >= 1.0) {
    throw std::invalid_argument("gamma and lambda must lie in [0, 1)");
  }
  buffer.advantages.resize(buffer.size());
  buffer.value_targets.resize(buffer.size());
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int t = steps - 1; t >= 0; --t) {
      const Eigen::Index idx = static_cast<Eigen::Index>(t) * n + i;
      const double v_next = (t == steps - 1)
                                ? buffer.bootstrap_values(i)
                                : buffer.values(static_cast<Eigen::Index>(t + 1) * n + i);
      const double psi = buffer.rewards(idx) + gamma * v_next - buffer.values(idx);
      acc = psi + gamma * lambda * acc;
      buffer.advantages(idx) = acc;
      buffer.value_targets(idx) = acc + buffer.values(idx);
    }
  }
  buffer.complete = true;
}

UpdateReport ppo_update(nn::PolicyParams& params, nn::AdamState& opt,
                        const RolloutBuffer& buffer, const PpoConfig& cfg,
                        Rng& rng) {
  if (!buffer.complete) {
    throw std::invalid_argument("rollout buffer has no advantages/targets");
  }
  if (cfg.update_epochs < 1 || cfg.minibatch_size < 1) {
    throw std::invalid_argument("invalid update configuration");
  }
  const Eigen::Index total = buffer.size();

  Eigen::VectorXd adv = buffer.advantages;
  if (cfg.normalize_advantages) {
    const double mean = adv.mean();
    const double var =
        (adv.array() - mean).square().sum() / static_cast<double>(total);
    adv = (adv.array() - mean) / (std::sqrt(var) + 1e-8);
  }

  const nn::PolicyParams params_in = params;
  const nn::AdamState opt_in = opt;

  std::vector<Eigen::Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), 0);

  UpdateReport report;
  report.learning_rate = opt.alpha;
  nn::Gradients grads(params);
  nn::Batch batch;
  for (int epoch = 0; epoch < cfg.update_epochs; ++epoch) {
    rng.shuffle(order);
    for (Eigen::Index start = 0; start < total; start += cfg.minibatch_size) {
      const Eigen::Index count =
          std::min<Eigen::Index>(cfg.minibatch_size, total - start);
      batch.states.resize(kStateDim, count);
      batch.actions.resize(static_cast<std::size_t>(count));
      batch.log_probs_old.resize(count);
      batch.advantages.resize(count);
      batch.value_targets.resize(count);
      for (Eigen::Index j = 0; j < count; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
        batch.states.col(j) = buffer.states.col(src);
        batch.actions[static_cast<std::size_t>(j)] =
            buffer.actions[static_cast<std::size_t>(src)];
        batch.log_probs_old(j) = buffer.log_probs(src);
        batch.advantages(j) = adv(src);
        batch.value_targets(j) = buffer.value_targets(src);
      }
      nn::LossStats stats;
      try {
        stats = nn::backward(params, batch, cfg.clip_eps, cfg.value_weight,
                             cfg.entropy_weight, grads);
      } catch (const std::exception&) {
        params = params_in;
        opt = opt_in;
        throw;
      }
      if (!std::isfinite(stats.objective)) {
        params = params_in;
        opt = opt_in;
        throw std::runtime_error("non-finite PPO loss; update aborted");
      }
      nn::adam_step(opt, params, grads);
      report.stats.clip_term += stats.clip_term;
      report.stats.value_term += stats.value_term;
      report.stats.entropy_term += stats.entropy_term;
      report.stats.objective += stats.objective;
      report.stats.mean_ratio += stats.mean_ratio;
      report.stats.clip_fraction += stats.clip_fraction;
      report.minibatches += 1;
    }
  }
  const double n_batches = static_cast<double>(report.minibatches);
  report.stats.clip_term /= n_batches;
  report.stats.value_term /= n_batches;
  report.stats.entropy_term /= n_batches;
  report.stats.objective /= n_batches;
  report.stats.mean_ratio /= n_batches;
  report.stats.clip_fraction /= n_batches;
  return report;
}

}  // namespace pggact
