#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pggact/ppo.hpp"

namespace pggact {

// Hyperparameters of one training phase.
struct PhaseConfig {
  double r = 4.0;
  int epochs = 9000;  // environment iterations
  double alpha = 1e-3;
  double gamma = 0.96;
  double lambda = 0.95;
  double clip_eps = 0.2;
  double value_weight = 0.5;
  double entropy_weight = 1e-3;
  InitScheme init = InitScheme::half_half();
  int horizon = 8;  // environment steps per PPO update segment
  int update_epochs = 4;
  int minibatch_size = 4096;

  void validate() const;
  PpoConfig ppo() const;

  // Phase 1 of the curriculum trains under a generous enhancement factor
  // with stronger exploration; Phase 2 carries the weights into the harsher
  // target environment.
  static PhaseConfig phase1_defaults();
  static PhaseConfig phase2_defaults();
};

struct RunHooks {
  // Initial field, before any iteration (t = 0).
  std::function<void(const StrategyField&)> on_init;
  // After every environment iteration; t counts across both phases.
  std::function<void(long t, double fraction, const StrategyField&)> on_step;
  // Freshly reset field at the phase boundary (t = phase1.epochs).
  std::function<void(long t, const StrategyField&)> on_transition;
  // After every PPO update.
  std::function<void(long t, const UpdateReport&)> on_update;
};

struct PhaseResult {
  std::vector<double> fractions;  // one entry per iteration
};

// Trains in segments of cfg.horizon steps (collect -> GAE -> update) until
// cfg.epochs iterations have run, mutating params/opt/field/payoffs in
// place. The learning-rate schedule runs on the phase-local iteration
// counter; t_offset only shifts the indices reported to hooks.
PhaseResult run_phase(const PhaseConfig& cfg, nn::PolicyParams& params,
                      nn::AdamState& opt, const Lattice& lat,
                      StrategyField& field, PayoffField& payoffs, Rng& rng,
                      const RunHooks& hooks = {}, long t_offset = 0);

// Phase boundary: strategies reinitialize, optimizer moments and the
// learning-rate schedule reset to the Phase 2 configuration, network weights
// carry over untouched.
void act_transition(const PhaseConfig& phase2, const Lattice& lat,
                    StrategyField& field, PayoffField& payoffs,
                    const nn::PolicyParams& params, nn::AdamState& opt,
                    Rng& rng);

struct ActConfig {
  int side = 200;
  int hidden_dim = 64;
  PhaseConfig phase1 = PhaseConfig::phase1_defaults();
  PhaseConfig phase2 = PhaseConfig::phase2_defaults();
};

struct RunRecord {
  double initial_fraction = 0.0;
  std::vector<double> fractions;  // length phase1.epochs + phase2.epochs
  StrategyField final_field;
  nn::PolicyParams params;
};

// Full two-phase run. Non-empty checkpoint paths are written at the phase
// boundary and at the end.
RunRecord run_act(const ActConfig& cfg, const Lattice& lat, Rng& rng,
                  const RunHooks& hooks = {},
                  const std::string& phase1_checkpoint = "",
                  const std::string& final_checkpoint = "");

// Phase 2 alone, starting from pretrained weights (e.g. a Phase 1
// checkpoint); strategies and optimizer start fresh exactly as after
// act_transition.
RunRecord run_phase2_only(const ActConfig& cfg, const Lattice& lat,
                          const nn::PolicyParams& pretrained, Rng& rng,
                          const RunHooks& hooks = {},
                          const std::string& final_checkpoint = "");

}  // namespace pggact
