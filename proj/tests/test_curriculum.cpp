#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "pggact/curriculum.hpp"

using namespace pggact;

namespace {

// Small configuration for fast end-to-end runs.
ActConfig desk_config(int side = 6, int t1 = 12, int t2 = 16) {
  ActConfig cfg;
  cfg.side = side;
  cfg.hidden_dim = 8;
  cfg.phase1.epochs = t1;
  cfg.phase2.epochs = t2;
  cfg.phase1.minibatch_size = 128;
  cfg.phase2.minibatch_size = 128;
  return cfg;
}

}  // namespace

TEST_CASE("phase defaults carry the documented hyperparameters") {
  const PhaseConfig p1 = PhaseConfig::phase1_defaults();
  CHECK(p1.r == 5.0);
  CHECK(p1.epochs == 1000);
  CHECK(p1.alpha == 1e-3);
  CHECK(p1.gamma == 0.99);
  CHECK(p1.entropy_weight == 1e-2);
  const PhaseConfig p2 = PhaseConfig::phase2_defaults();
  CHECK(p2.r == 4.0);
  CHECK(p2.epochs == 9000);
  CHECK(p2.alpha == 1e-3);
  CHECK(p2.gamma == 0.96);
  CHECK(p2.lambda == 0.95);
  CHECK(p2.clip_eps == 0.2);
  CHECK(p2.value_weight == 0.5);
  CHECK(p2.entropy_weight == 1e-3);
}

TEST_CASE("invalid phase configurations are rejected") {
  PhaseConfig cfg = PhaseConfig::phase2_defaults();
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PhaseConfig::phase2_defaults();
  cfg.r = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PhaseConfig::phase2_defaults();
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  const Lattice lat = build_lattice(4);
  Rng rng(1);
  nn::PolicyParams params = nn::PolicyParams::init(kStateDim, 4, rng);
  nn::AdamState opt = nn::AdamState::init(params, 1e-3);
  StrategyField field = init_strategies(InitScheme::bernoulli(0.5), lat, rng);
  PayoffField pay = cumulative_payoffs(field, lat, 4.0);
  PhaseConfig bad = PhaseConfig::phase2_defaults();
  bad.epochs = 0;
  CHECK_THROWS_AS(run_phase(bad, params, opt, lat, field, pay, rng),
                  std::invalid_argument);
}

TEST_CASE("transition keeps the weights and resets everything else") {
  const Lattice lat = build_lattice(6);
  Rng rng(2);
  nn::PolicyParams params = nn::PolicyParams::init(kStateDim, 8, rng);
  const nn::PolicyParams weights_before = params;
  nn::AdamState opt = nn::AdamState::init(params, 0.01);
  // age the optimizer state
  nn::Gradients g(params);
  for (auto* t : g.tensors()) t->setConstant(0.25);
  nn::adam_step(opt, params, g);
  nn::adam_step(opt, params, g);
  nn::lr_schedule(opt, 2500);
  const nn::PolicyParams weights_aged = params;

  PhaseConfig phase2 = PhaseConfig::phase2_defaults();
  phase2.init = InitScheme::half_half();
  StrategyField field;
  PayoffField pay;
  act_transition(phase2, lat, field, pay, params, opt, rng);

  // strategies follow the phase-2 scheme
  CHECK(cooperation_fraction(field) == 0.5);
  CHECK(pay.payoffs.size() == static_cast<std::size_t>(lat.agents));
  // weights untouched by the transition
  auto now = params.tensors();
  auto aged = weights_aged.tensors();
  for (std::size_t k = 0; k < 8; ++k) CHECK(*now[k] == *aged[k]);
  // optimizer equals a fresh state at the phase-2 learning rate
  const nn::AdamState fresh = nn::AdamState::init(params, phase2.alpha);
  CHECK(opt.step == 0);
  CHECK(opt.alpha == fresh.alpha);
  CHECK(opt.alpha0 == fresh.alpha0);
  for (std::size_t k = 0; k < opt.m.size(); ++k) {
    CHECK(opt.m[k] == fresh.m[k]);
    CHECK(opt.v[k] == fresh.v[k]);
  }
  (void)weights_before;
}

TEST_CASE("full act run produces the concatenated record") {
  const Lattice lat = build_lattice(6);
  const ActConfig cfg = desk_config();
  Rng rng(3);
  long steps_seen = 0;
  long transition_at = -1;
  long updates = 0;
  RunHooks hooks;
  hooks.on_step = [&](long t, double frac, const StrategyField&) {
    steps_seen += 1;
    CHECK(t == steps_seen);
    CHECK(frac >= 0.0);
    CHECK(frac <= 1.0);
  };
  hooks.on_transition = [&](long t, const StrategyField&) { transition_at = t; };
  hooks.on_update = [&](long, const UpdateReport& rep) {
    updates += 1;
    CHECK(std::isfinite(rep.stats.objective));
  };
  const RunRecord rec = run_act(cfg, lat, rng, hooks);
  CHECK(rec.fractions.size() ==
        static_cast<std::size_t>(cfg.phase1.epochs + cfg.phase2.epochs));
  CHECK(steps_seen == cfg.phase1.epochs + cfg.phase2.epochs);
  CHECK(transition_at == cfg.phase1.epochs);
  CHECK(updates == (cfg.phase1.epochs + cfg.phase2.epochs + 7) / 8);
  CHECK(rec.initial_fraction == 0.5);  // half-half on an even side
  CHECK(rec.final_field.strategies.size() ==
        static_cast<std::size_t>(lat.agents));
}

TEST_CASE("identical seeds give identical run records") {
  const Lattice lat = build_lattice(6);
  const ActConfig cfg = desk_config();
  Rng ra(7), rb(7);
  const RunRecord a = run_act(cfg, lat, ra);
  const RunRecord b = run_act(cfg, lat, rb);
  CHECK(a.fractions == b.fractions);
  CHECK(a.final_field.strategies == b.final_field.strategies);
  auto ta = a.params.tensors();
  auto tb = b.params.tensors();
  for (std::size_t k = 0; k < 8; ++k) CHECK(*ta[k] == *tb[k]);
}

TEST_CASE("checkpoints are written at the boundary and the end") {
  namespace fs = std::filesystem;
  const Lattice lat = build_lattice(6);
  const ActConfig cfg = desk_config();
  const std::string dir =
      (fs::temp_directory_path() / "pggact_curriculum_test").string();
  fs::create_directories(dir);
  const std::string p1 = dir + "/phase1.ckpt";
  const std::string fin = dir + "/final.ckpt";
  Rng rng(11);
  const RunRecord rec = run_act(cfg, lat, rng, {}, p1, fin);
  const nn::PolicyParams boundary = nn::load_checkpoint(p1);
  const nn::PolicyParams final_params = nn::load_checkpoint(fin);
  CHECK(boundary.hidden_dim() == cfg.hidden_dim);
  auto rt = rec.params.tensors();
  auto ft = final_params.tensors();
  for (std::size_t k = 0; k < 8; ++k) CHECK(*rt[k] == *ft[k]);
  fs::remove_all(dir);
}

TEST_CASE("phase2-only starts from the transferred weights and fresh strategies") {
  const Lattice lat = build_lattice(6);
  ActConfig cfg = desk_config();
  cfg.phase2.init = InitScheme::all_defect();
  Rng rng(13);
  const nn::PolicyParams pretrained =
      nn::PolicyParams::init(kStateDim, cfg.hidden_dim, rng);
  Rng run_rng(17);
  long t_first = 0;
  RunHooks hooks;
  hooks.on_init = [&](const StrategyField& f) {
    CHECK(cooperation_fraction(f) == 0.0);
  };
  hooks.on_step = [&](long t, double, const StrategyField&) {
    if (t_first == 0) t_first = t;
  };
  const RunRecord rec = run_phase2_only(cfg, lat, pretrained, run_rng, hooks);
  CHECK(rec.initial_fraction == 0.0);
  CHECK(rec.fractions.size() == static_cast<std::size_t>(cfg.phase2.epochs));
  CHECK(t_first == 1);

  nn::PolicyParams wrong = pretrained;
  wrong.w1 = Eigen::MatrixXd::Zero(8, 5);
  Rng r2(18);
  CHECK_THROWS_AS(run_phase2_only(cfg, lat, wrong, r2), std::invalid_argument);
}

TEST_CASE("learning-rate schedule counts phase-local iterations") {
  // 1008 tiny iterations cross the first halving boundary
  const Lattice lat = build_lattice(3);
  PhaseConfig cfg = PhaseConfig::phase2_defaults();
  cfg.epochs = 1008;
  cfg.minibatch_size = 128;
  Rng rng(19);
  nn::PolicyParams params = nn::PolicyParams::init(kStateDim, 4, rng);
  nn::AdamState opt = nn::AdamState::init(params, 1e-3);
  StrategyField field = init_strategies(InitScheme::bernoulli(0.5), lat, rng);
  PayoffField pay = cumulative_payoffs(field, lat, cfg.r);
  double lr_before_boundary = 0.0, lr_after_boundary = 0.0;
  RunHooks hooks;
  hooks.on_update = [&](long t, const UpdateReport& rep) {
    if (t == 1000) lr_before_boundary = rep.learning_rate;
    if (t == 1008) lr_after_boundary = rep.learning_rate;
  };
  run_phase(cfg, params, opt, lat, field, pay, rng, hooks);
  // the update that closes iteration 1000 already runs at the halved rate
  CHECK(lr_before_boundary == 0.0005);
  CHECK(lr_after_boundary == 0.0005);
  CHECK(opt.alpha == 0.0005);

  // a fresh phase restarts the schedule regardless of global iteration count
  act_transition(PhaseConfig::phase2_defaults(), lat, field, pay, params, opt,
                 rng);
  CHECK(opt.alpha == PhaseConfig::phase2_defaults().alpha);
  CHECK(opt.step == 0);
}
