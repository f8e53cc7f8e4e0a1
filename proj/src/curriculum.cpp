#include "pggact/curriculum.hpp"

#include <algorithm>
#include <stdexcept>

namespace pggact {

void PhaseConfig::validate() const {
  if (!(r > 1.0)) throw std::invalid_argument("enhancement factor must exceed 1");
  if (epochs < 1) throw std::invalid_argument("phase epochs must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("gamma must lie in [0, 1)");
  if (lambda < 0.0 || lambda >= 1.0) throw std::invalid_argument("lambda must lie in [0, 1)");
  if (!(clip_eps > 0.0)) throw std::invalid_argument("clip epsilon must be positive");
  if (value_weight < 0.0) throw std::invalid_argument("value weight must be >= 0");
  if (entropy_weight < 0.0) throw std::invalid_argument("entropy weight must be >= 0");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
  if (update_epochs < 1 || minibatch_size < 1) {
    throw std::invalid_argument("invalid update configuration");
  }
  if (init.kind == InitScheme::Kind::Bernoulli &&
      (init.p < 0.0 || init.p > 1.0)) {
    throw std::invalid_argument("bernoulli probability must lie in [0,1]");
  }
}

PpoConfig PhaseConfig::ppo() const {
  PpoConfig cfg;
  cfg.clip_eps = clip_eps;
  cfg.value_weight = value_weight;
  cfg.entropy_weight = entropy_weight;
  cfg.update_epochs = update_epochs;
  cfg.minibatch_size = minibatch_size;
  return cfg;
}

PhaseConfig PhaseConfig::phase1_defaults() {
  PhaseConfig cfg;
  cfg.r = 5.0;
  cfg.epochs = 1000;
  cfg.alpha = 1e-3;
  cfg.gamma = 0.99;
  cfg.entropy_weight = 1e-2;
  return cfg;
}

PhaseConfig PhaseConfig::phase2_defaults() {
  PhaseConfig cfg;
  cfg.r = 4.0;
  cfg.epochs = 9000;
  cfg.alpha = 1e-3;
  cfg.gamma = 0.96;
  cfg.entropy_weight = 1e-3;
  return cfg;
}

PhaseResult run_phase(const PhaseConfig& cfg, nn::PolicyParams& params,
                      nn::AdamState& opt, const Lattice& lat,
                      StrategyField& field, PayoffField& payoffs, Rng& rng,
                      const RunHooks& hooks, long t_offset) {
  cfg.validate();
  PhaseResult result;
  result.fractions.reserve(static_cast<std::size_t>(cfg.epochs));
  int done = 0;
  while (done < cfg.epochs) {
    const int segment = std::min(cfg.horizon, cfg.epochs - done);
    StepCallback on_step;
    if (hooks.on_step) {
      on_step = [&, done](int local, double frac, const StrategyField& f) {
        hooks.on_step(t_offset + done + local + 1, frac, f);
      };
    }
    RolloutResult roll = collect_rollout(field, payoffs, lat, params, cfg.r,
                                         segment, rng, on_step);
    field = std::move(roll.field);
    payoffs = std::move(roll.payoffs);
    result.fractions.insert(result.fractions.end(), roll.fractions.begin(),
                            roll.fractions.end());
    compute_advantages(roll.buffer, cfg.gamma, cfg.lambda);
    done += segment;
    nn::lr_schedule(opt, done);
    const UpdateReport report =
        ppo_update(params, opt, roll.buffer, cfg.ppo(), rng);
    if (hooks.on_update) hooks.on_update(t_offset + done, report);
  }
  return result;
}

void act_transition(const PhaseConfig& phase2, const Lattice& lat,
                    StrategyField& field, PayoffField& payoffs,
                    const nn::PolicyParams& params, nn::AdamState& opt,
                    Rng& rng) {
  phase2.validate();
  field = init_strategies(phase2.init, lat, rng);
  payoffs = cumulative_payoffs(field, lat, phase2.r);
  opt.reset(params, phase2.alpha);
}

RunRecord run_act(const ActConfig& cfg, const Lattice& lat, Rng& rng,
                  const RunHooks& hooks, const std::string& phase1_checkpoint,
                  const std::string& final_checkpoint) {
  cfg.phase1.validate();
  cfg.phase2.validate();
  RunRecord rec;
  rec.params = nn::PolicyParams::init(kStateDim, cfg.hidden_dim, rng);
  nn::AdamState opt = nn::AdamState::init(rec.params, cfg.phase1.alpha);

  StrategyField field = init_strategies(cfg.phase1.init, lat, rng);
  PayoffField payoffs = cumulative_payoffs(field, lat, cfg.phase1.r);
  rec.initial_fraction = cooperation_fraction(field);
  if (hooks.on_init) hooks.on_init(field);

  PhaseResult phase1 = run_phase(cfg.phase1, rec.params, opt, lat, field,
                                 payoffs, rng, hooks, 0);
  rec.fractions = std::move(phase1.fractions);
  if (!phase1_checkpoint.empty()) {
    nn::save_checkpoint(rec.params, phase1_checkpoint);
  }

  act_transition(cfg.phase2, lat, field, payoffs, rec.params, opt, rng);
  if (hooks.on_transition) hooks.on_transition(cfg.phase1.epochs, field);

  PhaseResult phase2 = run_phase(cfg.phase2, rec.params, opt, lat, field,
                                 payoffs, rng, hooks, cfg.phase1.epochs);
  rec.fractions.insert(rec.fractions.end(), phase2.fractions.begin(),
                       phase2.fractions.end());
  if (!final_checkpoint.empty()) {
    nn::save_checkpoint(rec.params, final_checkpoint);
  }
  rec.final_field = std::move(field);
  return rec;
}

RunRecord run_phase2_only(const ActConfig& cfg, const Lattice& lat,
                          const nn::PolicyParams& pretrained, Rng& rng,
                          const RunHooks& hooks,
                          const std::string& final_checkpoint) {
  cfg.phase2.validate();
  if (pretrained.state_dim() != kStateDim) {
    throw std::invalid_argument("checkpoint state dimension mismatch");
  }
  RunRecord rec;
  rec.params = pretrained;
  nn::AdamState opt = nn::AdamState::init(rec.params, cfg.phase2.alpha);
  StrategyField field = init_strategies(cfg.phase2.init, lat, rng);
  PayoffField payoffs = cumulative_payoffs(field, lat, cfg.phase2.r);
  rec.initial_fraction = cooperation_fraction(field);
  if (hooks.on_init) hooks.on_init(field);
  PhaseResult phase2 = run_phase(cfg.phase2, rec.params, opt, lat, field,
                                 payoffs, rng, hooks, 0);
  rec.fractions = std::move(phase2.fractions);
  if (!final_checkpoint.empty()) {
    nn::save_checkpoint(rec.params, final_checkpoint);
  }
  rec.final_field = std::move(field);
  return rec;
}

}  // namespace pggact
