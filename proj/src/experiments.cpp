#include "pggact/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <thread>

#include "pggact/io_util.hpp"

namespace pggact {

namespace {

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        fn(i);
      }
    });
  }
  for (auto& t : workers) t.join();
}

std::string snapshot_path(const std::string& dir, long t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snap_%07ld.pgm", t);
  return dir + "/" + buf;
}

bool scheduled(const std::vector<long>& schedule, long t) {
  return std::find(schedule.begin(), schedule.end(), t) != schedule.end();
}

ActConfig make_act_config(const ExperimentConfig& cfg, double r) {
  ActConfig act;
  act.side = cfg.side;
  act.hidden_dim = cfg.hidden_dim;
  act.phase1 = cfg.phase1;
  act.phase2 = cfg.phase2;
  act.phase1.init = cfg.init;
  act.phase2.init = cfg.init;
  act.phase2.r = r;
  return act;
}

class TrainingLog {
 public:
  void open(const std::string& path) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open " + path);
    out_ << "iteration,mean_ratio,clip_fraction,policy_loss,value_loss,"
            "entropy,learning_rate\n";
  }
  void append(long t, const UpdateReport& rep) {
    if (!out_.is_open()) return;
    out_ << t << "," << format_double(rep.stats.mean_ratio) << ","
         << format_double(rep.stats.clip_fraction) << ","
         << format_double(rep.stats.clip_term) << ","
         << format_double(rep.stats.value_term) << ","
         << format_double(rep.stats.entropy_term) << ","
         << format_double(rep.learning_rate) << "\n";
  }

 private:
  std::ofstream out_;
};

}  // namespace

double final_fraction(const std::vector<double>& fractions, int window) {
  if (fractions.empty()) return 0.0;
  const std::size_t w = std::min<std::size_t>(
      fractions.size(), static_cast<std::size_t>(std::max(1, window)));
  double sum = 0.0;
  for (std::size_t i = fractions.size() - w; i < fractions.size(); ++i) {
    sum += fractions[i];
  }
  return sum / static_cast<double>(w);
}

TrialResult run_single_trial(const ExperimentConfig& cfg, double r, int trial,
                             std::uint64_t seed, const TrialOutput& out) {
  TrialResult res;
  res.algorithm = cfg.algorithm;
  res.r = r;
  res.trial = trial;
  res.seed = seed;
  try {
    const Lattice lat = build_lattice(cfg.side);
    Rng rng(seed);
    const bool io = !out.dir.empty();
    if (io) ensure_dir(out.dir);
    auto snap = [&](long t, const StrategyField& field) {
      if (io && scheduled(out.snapshots, t)) {
        write_pgm(field, lat, snapshot_path(out.dir, t));
      }
    };

    if (cfg.algorithm == "ppo-act") {
      const ActConfig act = make_act_config(cfg, r);
      TrainingLog tlog;
      if (io && out.training_log) tlog.open(out.dir + "/training_log.csv");
      const long boundary = cfg.phase2_only ? -1 : act.phase1.epochs;
      RunHooks hooks;
      hooks.on_init = [&](const StrategyField& f) { snap(0, f); };
      hooks.on_step = [&](long t, double, const StrategyField& f) {
        // At the phase boundary the snapshot shows the reset field instead.
        if (t != boundary) snap(t, f);
      };
      hooks.on_transition = [&](long t, const StrategyField& f) { snap(t, f); };
      hooks.on_update = [&](long t, const UpdateReport& rep) {
        tlog.append(t, rep);
      };
      const std::string p1_ckpt =
          (io && out.checkpoints && !cfg.phase2_only) ? out.dir + "/phase1.ckpt"
                                                      : "";
      const std::string final_ckpt =
          (io && out.checkpoints) ? out.dir + "/final.ckpt" : "";
      RunRecord rec;
      if (cfg.phase2_only) {
        if (cfg.checkpoint.empty()) {
          throw std::invalid_argument("phase2-only requires a checkpoint");
        }
        rec = run_phase2_only(act, lat, nn::load_checkpoint(cfg.checkpoint),
                              rng, hooks, final_ckpt);
      } else {
        rec = run_act(act, lat, rng, hooks, p1_ckpt, final_ckpt);
      }
      res.initial_fraction = rec.initial_fraction;
      res.fractions = std::move(rec.fractions);
    } else if (cfg.algorithm == "ppo") {
      PhaseConfig phase = cfg.phase2;
      phase.r = r;
      phase.init = cfg.init;
      TrainingLog tlog;
      if (io && out.training_log) tlog.open(out.dir + "/training_log.csv");
      RunHooks hooks;
      hooks.on_step = [&](long t, double, const StrategyField& f) {
        snap(t, f);
      };
      hooks.on_update = [&](long t, const UpdateReport& rep) {
        tlog.append(t, rep);
      };
      nn::PolicyParams params =
          nn::PolicyParams::init(kStateDim, cfg.hidden_dim, rng);
      nn::AdamState opt = nn::AdamState::init(params, phase.alpha);
      StrategyField field = init_strategies(phase.init, lat, rng);
      PayoffField payoffs = cumulative_payoffs(field, lat, phase.r);
      res.initial_fraction = cooperation_fraction(field);
      snap(0, field);
      PhaseResult pr =
          run_phase(phase, params, opt, lat, field, payoffs, rng, hooks, 0);
      res.fractions = std::move(pr.fractions);
      if (io && out.checkpoints) {
        nn::save_checkpoint(params, out.dir + "/final.ckpt");
      }
    } else if (cfg.algorithm == "qlearning" || cfg.algorithm == "fermi") {
      StrategyField field = init_strategies(cfg.init, lat, rng);
      res.initial_fraction = cooperation_fraction(field);
      snap(0, field);
      QTables tables;
      if (cfg.algorithm == "qlearning") tables = QTables::zeros(lat.agents);
      res.fractions.reserve(static_cast<std::size_t>(cfg.phase2.epochs));
      for (int t = 1; t <= cfg.phase2.epochs; ++t) {
        const double frac =
            cfg.algorithm == "qlearning"
                ? qlearning_iteration(field, tables, lat, r, cfg.qlearn, rng)
                : fermi_iteration(field, lat, r, cfg.fermi, rng);
        res.fractions.push_back(frac);
        snap(t, field);
      }
    } else {
      throw std::invalid_argument("unknown algorithm: " + cfg.algorithm);
    }

    res.final_fraction = final_fraction(res.fractions, cfg.final_window);
    if (io) {
      write_timeseries_csv(out.dir + "/timeseries.csv", res.initial_fraction,
                           res.fractions);
    }
  } catch (const std::exception& e) {
    res.failed = true;
    res.error = e.what();
  }
  return res;
}

std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, double r,
                                    int n_trials, std::uint64_t base_seed,
                                    int jobs, const std::string& out_root,
                                    const std::vector<long>& snapshots) {
  if (n_trials < 1) throw std::invalid_argument("need at least one trial");
  std::vector<TrialResult> results(static_cast<std::size_t>(n_trials));
  parallel_for(n_trials, jobs, [&](int k) {
    TrialOutput out;
    if (!out_root.empty()) {
      out.dir = out_root + "/" + cfg.algorithm + "/" + format_compact(r) +
                "/" + std::to_string(k);
      out.snapshots = snapshots;
    }
    results[static_cast<std::size_t>(k)] = run_single_trial(
        cfg, r, k, trial_seed(base_seed, static_cast<std::uint64_t>(k)), out);
  });
  return results;
}

std::optional<std::pair<double, double>> confidence_interval(
    const std::vector<double>& samples, double level) {
  double z = 0.0;
  if (level == 0.95) {
    z = 1.96;
  } else if (level == 0.90) {
    z = 1.645;
  } else if (level == 0.99) {
    z = 2.576;
  } else {
    throw std::invalid_argument("unsupported confidence level");
  }
  const std::size_t n = samples.size();
  if (n < 2) return std::nullopt;
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  if (stddev == 0.0) return std::nullopt;
  const double half = z * stddev / std::sqrt(static_cast<double>(n));
  return std::make_pair(std::clamp(mean - half, 0.0, 1.0),
                        std::clamp(mean + half, 0.0, 1.0));
}

SweepRow summarize(const std::string& algorithm, double r,
                   const std::vector<double>& finals) {
  SweepRow row;
  row.algorithm = algorithm;
  row.r = r;
  row.n = static_cast<int>(finals.size());
  if (finals.empty()) return row;
  double mean = 0.0;
  for (double f : finals) mean += f;
  row.mean = mean / static_cast<double>(finals.size());
  if (finals.size() > 1) {
    double ss = 0.0;
    for (double f : finals) ss += (f - row.mean) * (f - row.mean);
    row.stddev = std::sqrt(ss / static_cast<double>(finals.size() - 1));
  }
  if (auto ci = confidence_interval(finals)) {
    row.ci_defined = true;
    row.ci_lo = ci->first;
    row.ci_hi = ci->second;
  }
  return row;
}

SweepResult sweep_r(const ExperimentConfig& cfg,
                    const std::vector<double>& r_grid, int n_trials,
                    std::uint64_t base_seed, int jobs,
                    const std::string& out_root,
                    const std::vector<long>& snapshots) {
  if (r_grid.empty()) throw std::invalid_argument("empty r grid");
  SweepResult result;
  for (double r : r_grid) {
    std::vector<TrialResult> trials =
        run_trials(cfg, r, n_trials, base_seed, jobs, out_root, snapshots);
    std::vector<double> finals;
    finals.reserve(trials.size());
    for (const auto& t : trials) {
      if (t.failed) {
        result.all_ok = false;
      } else {
        finals.push_back(t.final_fraction);
      }
    }
    result.rows.push_back(summarize(cfg.algorithm, r, finals));
    result.trials.insert(result.trials.end(),
                         std::make_move_iterator(trials.begin()),
                         std::make_move_iterator(trials.end()));
  }
  return result;
}

std::vector<HypsweepEntry> sweep_hyperparameter(
    const std::string& name, const std::vector<double>& values,
    const ExperimentConfig& cfg, const std::vector<double>& r_grid,
    int n_trials, std::uint64_t base_seed, int jobs,
    const std::string& out_root, const std::vector<long>& snapshots) {
  if (name != "alpha" && name != "gamma" && name != "delta" && name != "rho") {
    throw std::invalid_argument("unknown hyperparameter: " + name);
  }
  if (values.empty()) throw std::invalid_argument("empty value list");
  std::vector<HypsweepEntry> entries;
  for (double value : values) {
    ExperimentConfig varied = cfg;
    // Only Phase 2 is varied.
    if (name == "alpha") {
      varied.phase2.alpha = value;
    } else if (name == "gamma") {
      varied.phase2.gamma = value;
    } else if (name == "delta") {
      varied.phase2.value_weight = value;
    } else {
      varied.phase2.entropy_weight = value;
    }
    varied.phase2.validate();
    std::string root;
    if (!out_root.empty()) {
      root = out_root + "/" + name + "/" + format_compact(value);
    }
    HypsweepEntry entry;
    entry.value = value;
    entry.sweep =
        sweep_r(varied, r_grid, n_trials, base_seed, jobs, root, snapshots);
    if (!root.empty()) {
      write_sweep_csv(root + "/sweep.csv", entry.sweep.rows);
      write_raw_trials_csv(root + "/raw_trials.csv", entry.sweep.trials);
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

void write_timeseries_csv(const std::string& path, double initial_fraction,
                          const std::vector<double>& fractions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "t,frac_coop,frac_defect\n";
  out << "0," << format_fraction(initial_fraction) << ","
      << format_fraction(1.0 - initial_fraction) << "\n";
  for (std::size_t t = 0; t < fractions.size(); ++t) {
    out << (t + 1) << "," << format_fraction(fractions[t]) << ","
        << format_fraction(1.0 - fractions[t]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "algorithm,r,n,mean,std,ci_lo,ci_hi\n";
  for (const auto& row : rows) {
    out << row.algorithm << "," << format_compact(row.r) << "," << row.n << ","
        << format_double(row.mean) << "," << format_double(row.stddev) << ",";
    if (row.ci_defined) {
      out << format_double(row.ci_lo) << "," << format_double(row.ci_hi);
    } else {
      out << "nan,nan";
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_raw_trials_csv(const std::string& path,
                          const std::vector<TrialResult>& trials) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "algorithm,r,trial,seed,final_fraction\n";
  for (const auto& t : trials) {
    out << t.algorithm << "," << format_compact(t.r) << "," << t.trial << ","
        << t.seed << ","
        << (t.failed ? std::string("nan") : format_double(t.final_fraction))
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<double> make_grid(double lo, double hi, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (hi < lo) throw std::invalid_argument("grid upper bound below lower");
  std::vector<double> grid;
  for (int k = 0;; ++k) {
    const double v = lo + step * k;
    if (v > hi + step / 2.0) break;
    grid.push_back(v);
  }
  return grid;
}

}  // namespace pggact
