// Command-line driver for the spatial public goods game simulator.
//
// Subcommands:
//   run          one or more trials of one algorithm at the target r
//   phase2-only  like run, but Phase 2 alone from a Phase 1 checkpoint
//   sweep        r sweep with per-r statistics (requires an explicit --seed)
//   hypsweep     one Phase 2 hyperparameter x r grid
//   verify       invariant self-checks (payoffs, GAE, gradients)
//
// Exit codes: 0 ok, 1 usage error, 2 runtime/partial failure,
// 3 verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "pggact/experiments.hpp"
#include "pggact/io_util.hpp"

using namespace pggact;

namespace {

struct CliOptions {
  std::string algo = "ppo-act";
  int side = 200;
  std::string init = "half-half";
  double init_p = 0.5;
  double r1 = 5.0;
  double r2 = 4.0;
  int t1 = 1000;
  int t2 = 9000;
  double alpha = 1e-3;  // Phase 2; Phase 1 keeps its own defaults
  double gamma = 0.96;
  double lambda = 0.95;
  double eps_clip = 0.2;
  double delta = 0.5;
  double rho = 1e-3;
  double p1_alpha = 1e-3;
  double p1_gamma = 0.99;
  double p1_rho = 1e-2;
  int trials = 1;
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out = "out";
  std::string snapshots = "default";
  int window = 100;
  int hidden = 64;
  int horizon = 8;
  int minibatch = 4096;
  int update_epochs = 4;
  double fermi_k = 0.5;
  bool fermi_async = false;
  double qlearn_alpha = 0.1;
  double qlearn_gamma = 0.9;
  double qlearn_eps = 0.02;
  std::string checkpoint;
  double r_min = 3.0;
  double r_max = 6.0;
  double r_step = 0.1;
  std::string hyp_param;
  std::vector<double> hyp_values;
};

ExperimentConfig to_experiment_config(const CliOptions& o) {
  ExperimentConfig cfg;
  cfg.algorithm = o.algo;
  cfg.side = o.side;
  cfg.hidden_dim = o.hidden;
  cfg.init = InitScheme::parse(o.init, o.init_p);
  cfg.final_window = o.window;

  cfg.phase1 = PhaseConfig::phase1_defaults();
  cfg.phase1.r = o.r1;
  cfg.phase1.epochs = o.t1;
  cfg.phase1.alpha = o.p1_alpha;
  cfg.phase1.gamma = o.p1_gamma;
  cfg.phase1.entropy_weight = o.p1_rho;
  cfg.phase1.lambda = o.lambda;
  cfg.phase1.clip_eps = o.eps_clip;
  cfg.phase1.value_weight = o.delta;
  cfg.phase1.horizon = o.horizon;
  cfg.phase1.minibatch_size = o.minibatch;
  cfg.phase1.update_epochs = o.update_epochs;

  cfg.phase2 = PhaseConfig::phase2_defaults();
  cfg.phase2.r = o.r2;
  cfg.phase2.epochs = o.t2;
  cfg.phase2.alpha = o.alpha;
  cfg.phase2.gamma = o.gamma;
  cfg.phase2.lambda = o.lambda;
  cfg.phase2.clip_eps = o.eps_clip;
  cfg.phase2.value_weight = o.delta;
  cfg.phase2.entropy_weight = o.rho;
  cfg.phase2.horizon = o.horizon;
  cfg.phase2.minibatch_size = o.minibatch;
  cfg.phase2.update_epochs = o.update_epochs;

  cfg.qlearn.alpha = o.qlearn_alpha;
  cfg.qlearn.gamma = o.qlearn_gamma;
  cfg.qlearn.epsilon = o.qlearn_eps;
  cfg.fermi.temperature = o.fermi_k;
  cfg.fermi.synchronous = !o.fermi_async;
  cfg.checkpoint = o.checkpoint;
  return cfg;
}

std::vector<long> parse_snapshots(const std::string& spec, long t_total,
                                  bool phase2_only) {
  std::vector<long> schedule;
  std::string text = spec;
  if (text == "default") {
    text = phase2_only ? "0,1,10,100,1000" : "0,10,100,1000,10000";
  }
  if (text == "none" || text.empty()) return schedule;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    const long t = std::stol(item, &pos);
    if (pos != item.size() || t < 0) {
      throw CLI::ValidationError("--snapshots",
                                 "expected comma-separated iteration indices");
    }
    if (t <= t_total) schedule.push_back(t);
  }
  return schedule;
}

std::string join_longs(const std::vector<long>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ",";
    text += std::to_string(values[i]);
  }
  return text;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ",";
    text += format_compact(values[i]);
  }
  return text;
}

void echo_config(Manifest& m, const std::string& command, const CliOptions& o,
                 const std::vector<long>& snapshots) {
  m.add("command", command);
  m.add("algorithm", o.algo);
  m.add("L", static_cast<long>(o.side));
  m.add("init", o.init);
  if (o.init == "bernoulli") m.add("init_p", o.init_p);
  m.add("seed", std::to_string(o.seed));
  m.add("trials", static_cast<long>(o.trials));
  m.add("window", static_cast<long>(o.window));
  m.add("hidden", static_cast<long>(o.hidden));
  m.add("horizon", static_cast<long>(o.horizon));
  m.add("minibatch", static_cast<long>(o.minibatch));
  m.add("update_epochs", static_cast<long>(o.update_epochs));
  m.add("phase1.r", o.r1);
  m.add("phase1.epochs", static_cast<long>(o.t1));
  m.add("phase1.alpha", o.p1_alpha);
  m.add("phase1.gamma", o.p1_gamma);
  m.add("phase1.rho", o.p1_rho);
  m.add("phase2.r", o.r2);
  m.add("phase2.epochs", static_cast<long>(o.t2));
  m.add("phase2.alpha", o.alpha);
  m.add("phase2.gamma", o.gamma);
  m.add("phase2.rho", o.rho);
  m.add("lambda", o.lambda);
  m.add("eps_clip", o.eps_clip);
  m.add("delta", o.delta);
  m.add("qlearn.alpha", o.qlearn_alpha);
  m.add("qlearn.gamma", o.qlearn_gamma);
  m.add("qlearn.epsilon", o.qlearn_eps);
  m.add("fermi.k", o.fermi_k);
  m.add("fermi.synchronous", o.fermi_async ? "0" : "1");
  if (!o.checkpoint.empty()) m.add("checkpoint", o.checkpoint);
  m.add("snapshots", join_longs(snapshots));
}

void add_output_hashes(Manifest& m, const std::string& out_root) {
  for (const std::string& rel : list_files(out_root, "manifest.txt")) {
    m.add("output." + rel, hex64(fnv1a64_file(out_root + "/" + rel)));
  }
}

// ---------------------------------------------------------------------------
// verify: quick invariant suite. The reference computations here are local
// on purpose (exact summation, explicit psi sums, finite differences) so the
// checks do not share code with the paths they validate.

double neumaier_sum(const double* values, std::size_t count) {
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = values[i];
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

bool verify_payoff_conservation() {
  const Lattice lat = build_lattice(3);
  const auto members = group_members(lat, 4);
  for (double r : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    for (int pattern = 0; pattern < 32; ++pattern) {
      StrategyField field;
      field.strategies.assign(9, 0);
      int n_coop = 0;
      for (int k = 0; k < 5; ++k) {
        const int bit = (pattern >> k) & 1;
        field.strategies[static_cast<std::size_t>(
            members[static_cast<std::size_t>(k)])] =
            static_cast<std::uint8_t>(bit);
        n_coop += bit;
      }
      const auto pays = group_payoffs(field, members, r);
      if (neumaier_sum(pays.data(), pays.size()) != n_coop * (r - 1.0)) {
        return false;
      }
    }
  }
  return true;
}

bool verify_gae() {
  Rng rng(424242);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::Index t_max = 1 + static_cast<Eigen::Index>(rng.uniform_int(8));
    Eigen::VectorXd rewards(t_max), values(t_max);
    for (Eigen::Index t = 0; t < t_max; ++t) {
      rewards(t) = 4.0 * rng.uniform01() - 2.0;
      values(t) = 4.0 * rng.uniform01() - 2.0;
    }
    const double bootstrap = 4.0 * rng.uniform01() - 2.0;
    const double gamma = rng.uniform01() * 0.99;
    const double lambda = rng.uniform01() * 0.99;
    const auto [adv, targets] =
        compute_gae(rewards, values, bootstrap, gamma, lambda);
    for (Eigen::Index t = 0; t < t_max; ++t) {
      double psi_sum = 0.0;
      for (Eigen::Index l = 0; t + l < t_max; ++l) {
        const Eigen::Index u = t + l;
        const double v_next = (u == t_max - 1) ? bootstrap : values(u + 1);
        psi_sum += std::pow(gamma * lambda, static_cast<double>(l)) *
                   (rewards(u) + gamma * v_next - values(u));
      }
      if (std::abs(adv(t) - psi_sum) > 1e-12) return false;
      if (targets(t) != adv(t) + values(t)) return false;
    }
  }
  return true;
}

bool verify_gradients() {
  Rng rng(515151);
  for (int rep = 0; rep < 5; ++rep) {
    nn::PolicyParams params = nn::PolicyParams::init(kStateDim, 5, rng);
    nn::Batch batch;
    const Eigen::Index n = 10;
    batch.states.resize(kStateDim, n);
    for (Eigen::Index i = 0; i < batch.states.size(); ++i) {
      batch.states.data()[i] = 2.0 * rng.uniform01() - 1.0;
    }
    nn::PolicyParams behavior = params;
    for (auto* t : behavior.tensors()) {
      for (Eigen::Index i = 0; i < t->size(); ++i) {
        t->data()[i] += 0.3 * (2.0 * rng.uniform01() - 1.0);
      }
    }
    const nn::ForwardPass fwd = nn::forward(behavior, batch.states);
    batch.actions.resize(static_cast<std::size_t>(n));
    batch.log_probs_old.resize(n);
    batch.advantages.resize(n);
    batch.value_targets.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      const int a = rng.uniform01() < fwd.probs(1, j) ? 1 : 0;
      batch.actions[static_cast<std::size_t>(j)] = a;
      batch.log_probs_old(j) = fwd.log_probs(a, j);
      batch.advantages(j) = 4.0 * rng.uniform01() - 2.0;
      batch.value_targets(j) = 4.0 * rng.uniform01() - 2.0;
    }
    nn::Gradients analytic(params);
    nn::backward(params, batch, 0.2, 0.5, 0.01, analytic);
    auto tensors = params.tensors();
    auto grads = analytic.tensors();
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      for (Eigen::Index i = 0; i < tensors[k]->size(); ++i) {
        double& theta = tensors[k]->data()[i];
        const double saved = theta;
        const double step = 1e-5;
        theta = saved + step;
        const double plus = -nn::objective(params, batch, 0.2, 0.5, 0.01);
        theta = saved - step;
        const double minus = -nn::objective(params, batch, 0.2, 0.5, 0.01);
        theta = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double exact = grads[k]->data()[i];
        const double scale =
            std::max({std::abs(numeric), std::abs(exact), 1e-3});
        if (std::abs(numeric - exact) / scale > 1e-4) return false;
      }
    }
  }
  return true;
}

int run_verify() {
  int failures = 0;
  const auto report = [&](const char* name, bool ok) {
    std::printf("%s %s\n", ok ? "PASS" : "FAIL", name);
    failures += ok ? 0 : 1;
  };
  report("payoff-conservation (32 patterns x r in {2..6}, exact)",
         verify_payoff_conservation());
  report("gae-double-sum (50 random series, 1e-12)", verify_gae());
  report("gradient-finite-differences (5 batches, 1e-4)", verify_gradients());
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial public goods game simulator with PPO curriculum "
               "training, Q-learning and Fermi baselines"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  app.set_config("--config", "", "flat key=value configuration file");

  CliOptions o;
  app.add_option("--algo", o.algo, "ppo-act | ppo | qlearning | fermi")
      ->check(CLI::IsMember({"ppo-act", "ppo", "qlearning", "fermi"}))
      ->capture_default_str();
  app.add_option("--L", o.side, "lattice side length")->capture_default_str();
  app.add_option("--init", o.init,
                 "half-half | bernoulli | all-defect | all-coop")
      ->capture_default_str();
  app.add_option("--init-p", o.init_p, "bernoulli cooperation probability")
      ->capture_default_str();
  app.add_option("--r1", o.r1, "Phase 1 enhancement factor")
      ->capture_default_str();
  app.add_option("--r2", o.r2, "Phase 2 / single-phase enhancement factor")
      ->capture_default_str();
  app.add_option("--t1", o.t1, "Phase 1 iterations")->capture_default_str();
  app.add_option("--t2", o.t2, "Phase 2 / baseline iterations")
      ->capture_default_str();
  app.add_option("--alpha", o.alpha, "Phase 2 learning rate")
      ->capture_default_str();
  app.add_option("--gamma", o.gamma, "Phase 2 discount factor")
      ->capture_default_str();
  app.add_option("--lambda", o.lambda, "GAE weight")->capture_default_str();
  app.add_option("--eps-clip", o.eps_clip, "PPO clip parameter")
      ->capture_default_str();
  app.add_option("--delta", o.delta, "value loss weight")
      ->capture_default_str();
  app.add_option("--rho", o.rho, "Phase 2 entropy weight")
      ->capture_default_str();
  app.add_option("--p1-alpha", o.p1_alpha, "Phase 1 learning rate")
      ->capture_default_str();
  app.add_option("--p1-gamma", o.p1_gamma, "Phase 1 discount factor")
      ->capture_default_str();
  app.add_option("--p1-rho", o.p1_rho, "Phase 1 entropy weight")
      ->capture_default_str();
  auto* seed_opt =
      app.add_option("--seed", o.seed, "base seed; trial k uses seed^k")
          ->capture_default_str();
  app.add_option("--trials", o.trials, "independent trials")
      ->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads over trials")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out", o.out, "output directory root")
      ->envname("PGG_ACT_OUT")
      ->capture_default_str();
  app.add_option("--snapshots", o.snapshots,
                 "comma-separated iteration list, 'default' or 'none'")
      ->capture_default_str();
  app.add_option("--window", o.window,
                 "iterations averaged into the final fraction")
      ->capture_default_str();
  app.add_option("--hidden", o.hidden, "hidden layer width")
      ->capture_default_str();
  app.add_option("--horizon", o.horizon, "environment steps per PPO update")
      ->capture_default_str();
  app.add_option("--minibatch", o.minibatch, "PPO minibatch size")
      ->capture_default_str();
  app.add_option("--update-epochs", o.update_epochs, "PPO epochs per update")
      ->capture_default_str();
  app.add_option("--fermi-k", o.fermi_k, "Fermi selection temperature")
      ->capture_default_str();
  app.add_flag("--fermi-async", o.fermi_async,
               "asynchronous single-site Fermi updating");
  app.add_option("--qlearn-alpha", o.qlearn_alpha, "Q-learning rate")
      ->capture_default_str();
  app.add_option("--qlearn-gamma", o.qlearn_gamma, "Q-learning discount")
      ->capture_default_str();
  app.add_option("--qlearn-eps", o.qlearn_eps, "Q-learning exploration rate")
      ->capture_default_str();

  CLI::App* cmd_run = app.add_subcommand("run", "train/simulate trials");
  CLI::App* cmd_p2 = app.add_subcommand(
      "phase2-only", "Phase 2 alone from a Phase 1 checkpoint");
  cmd_p2->add_option("--checkpoint", o.checkpoint,
                     "Phase 1 parameter checkpoint")
      ->required();
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "sweep the enhancement factor");
  cmd_sweep->add_option("--r-min", o.r_min, "sweep lower bound")
      ->capture_default_str();
  cmd_sweep->add_option("--r-max", o.r_max, "sweep upper bound")
      ->capture_default_str();
  cmd_sweep->add_option("--r-step", o.r_step, "sweep step")
      ->capture_default_str();
  CLI::App* cmd_hyp =
      app.add_subcommand("hypsweep", "sweep one Phase 2 hyperparameter");
  cmd_hyp->add_option("--param", o.hyp_param, "alpha | gamma | delta | rho")
      ->required()
      ->check(CLI::IsMember({"alpha", "gamma", "delta", "rho"}));
  cmd_hyp->add_option("--values", o.hyp_values, "hyperparameter values")
      ->required()
      ->delimiter(',');
  cmd_hyp->add_option("--r-min", o.r_min, "sweep lower bound")
      ->capture_default_str();
  cmd_hyp->add_option("--r-max", o.r_max, "sweep upper bound")
      ->capture_default_str();
  cmd_hyp->add_option("--r-step", o.r_step, "sweep step")
      ->capture_default_str();
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "run the invariant self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (cmd_verify->parsed()) return run_verify();

  try {
    if ((cmd_sweep->parsed() || cmd_hyp->parsed()) && seed_opt->count() == 0) {
      std::cerr << "sweep modes require an explicit --seed" << std::endl;
      return 1;
    }
    if (o.trials < 1) {
      std::cerr << "--trials must be positive" << std::endl;
      return 1;
    }

    ExperimentConfig cfg = to_experiment_config(o);
    ensure_dir(o.out);
    Manifest manifest;
    bool all_ok = true;

    if (cmd_run->parsed() || cmd_p2->parsed()) {
      cfg.phase2_only = cmd_p2->parsed();
      const long t_total =
          (cfg.algorithm == "ppo-act" && !cfg.phase2_only)
              ? cfg.phase1.epochs + cfg.phase2.epochs
              : cfg.phase2.epochs;
      const std::vector<long> snapshots =
          parse_snapshots(o.snapshots, t_total, cfg.phase2_only);
      echo_config(manifest, cfg.phase2_only ? "phase2-only" : "run", o,
                  snapshots);
      const auto results =
          run_trials(cfg, o.r2, o.trials, o.seed, o.jobs, o.out, snapshots);
      std::vector<double> finals;
      for (const auto& t : results) {
        if (t.failed) {
          all_ok = false;
          std::fprintf(stderr, "trial %d failed: %s\n", t.trial,
                       t.error.c_str());
        } else {
          finals.push_back(t.final_fraction);
          std::printf("trial %d seed %llu final_fraction %.6f\n", t.trial,
                      static_cast<unsigned long long>(t.seed),
                      t.final_fraction);
        }
      }
      write_raw_trials_csv(o.out + "/raw_trials.csv", results);
      if (!finals.empty()) {
        write_sweep_csv(o.out + "/sweep.csv",
                        {summarize(cfg.algorithm, o.r2, finals)});
      }
    } else if (cmd_sweep->parsed()) {
      const auto grid = make_grid(o.r_min, o.r_max, o.r_step);
      const std::vector<long> snapshots =
          o.snapshots == "default"
              ? std::vector<long>{}
              : parse_snapshots(o.snapshots, cfg.phase2.epochs, false);
      echo_config(manifest, "sweep", o, snapshots);
      manifest.add("r_grid", join_doubles(grid));
      const SweepResult sweep =
          sweep_r(cfg, grid, o.trials, o.seed, o.jobs, o.out, snapshots);
      all_ok = sweep.all_ok;
      write_sweep_csv(o.out + "/sweep.csv", sweep.rows);
      write_raw_trials_csv(o.out + "/raw_trials.csv", sweep.trials);
      for (const auto& row : sweep.rows) {
        std::printf("r=%s n=%d mean=%.4f\n", format_compact(row.r).c_str(),
                    row.n, row.mean);
      }
    } else if (cmd_hyp->parsed()) {
      const auto grid = make_grid(o.r_min, o.r_max, o.r_step);
      const std::vector<long> snapshots =
          o.snapshots == "default"
              ? std::vector<long>{}
              : parse_snapshots(o.snapshots, cfg.phase2.epochs, false);
      echo_config(manifest, "hypsweep", o, snapshots);
      manifest.add("hyp_param", o.hyp_param);
      manifest.add("hyp_values", join_doubles(o.hyp_values));
      manifest.add("r_grid", join_doubles(grid));
      const auto entries =
          sweep_hyperparameter(o.hyp_param, o.hyp_values, cfg, grid, o.trials,
                               o.seed, o.jobs, o.out, snapshots);
      for (const auto& entry : entries) {
        all_ok = all_ok && entry.sweep.all_ok;
        std::printf("%s=%s done (%zu r values)\n", o.hyp_param.c_str(),
                    format_compact(entry.value).c_str(),
                    entry.sweep.rows.size());
      }
    }

    manifest.add("status", all_ok ? "ok" : "partial-failure");
    add_output_hashes(manifest, o.out);
    manifest.write(o.out + "/manifest.txt");
    return all_ok ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
