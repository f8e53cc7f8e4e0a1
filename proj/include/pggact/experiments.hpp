#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pggact/baselines.hpp"
#include "pggact/curriculum.hpp"

namespace pggact {

// Everything needed to run one trial of one algorithm; `phase2` doubles as
// the single-phase configuration for plain PPO and sets the iteration count
// for the Q-learning and Fermi baselines.
struct ExperimentConfig {
  std::string algorithm = "ppo-act";  // ppo-act | ppo | qlearning | fermi
  int side = 200;
  int hidden_dim = 64;
  PhaseConfig phase1 = PhaseConfig::phase1_defaults();
  PhaseConfig phase2 = PhaseConfig::phase2_defaults();
  QLearnConfig qlearn;
  FermiConfig fermi;
  InitScheme init = InitScheme::half_half();  // applied to both phases
  int final_window = 100;  // iterations averaged into the final fraction
  bool phase2_only = false;
  std::string checkpoint;  // pretrained weights, required when phase2_only
};

// File outputs of one trial; empty dir disables all I/O.
struct TrialOutput {
  std::string dir;
  std::vector<long> snapshots;  // iteration indices to dump as PGM
  bool training_log = true;
  bool checkpoints = true;
};

struct TrialResult {
  std::string algorithm;
  double r = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double initial_fraction = 0.0;
  double final_fraction = 0.0;
  std::vector<double> fractions;  // per-iteration cooperation fraction
};

// Mean of the last `window` entries (clamped to the series length).
double final_fraction(const std::vector<double>& fractions, int window);

TrialResult run_single_trial(const ExperimentConfig& cfg, double r, int trial,
                             std::uint64_t seed, const TrialOutput& out);

// Trial k uses seed base_seed ^ k. Trials run on up to `jobs` worker
// threads; results are collected in trial order so output is independent of
// scheduling. Individual failures are recorded in the results, not thrown.
std::vector<TrialResult> run_trials(const ExperimentConfig& cfg, double r,
                                    int n_trials, std::uint64_t base_seed,
                                    int jobs, const std::string& out_root,
                                    const std::vector<long>& snapshots);

// Normal-approximation interval mean +- z * std / sqrt(n), clamped to
// [0, 1]. Undefined (nullopt) for n < 2 or zero sample variance, matching
// the `nan` convention of the sweep tables. Levels 0.90/0.95/0.99.
std::optional<std::pair<double, double>> confidence_interval(
    const std::vector<double>& samples, double level = 0.95);

struct SweepRow {
  std::string algorithm;
  double r = 0.0;
  int n = 0;  // surviving trials
  double mean = 0.0;
  double stddev = 0.0;
  bool ci_defined = false;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

SweepRow summarize(const std::string& algorithm, double r,
                   const std::vector<double>& finals);

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<TrialResult> trials;  // every trial of every grid point
  bool all_ok = true;
};

SweepResult sweep_r(const ExperimentConfig& cfg,
                    const std::vector<double>& r_grid, int n_trials,
                    std::uint64_t base_seed, int jobs,
                    const std::string& out_root,
                    const std::vector<long>& snapshots);

struct HypsweepEntry {
  double value = 0.0;
  SweepResult sweep;
};

// Varies one Phase 2 hyperparameter (alpha | gamma | delta | rho) across
// `values`, running a full r sweep per value.
std::vector<HypsweepEntry> sweep_hyperparameter(
    const std::string& name, const std::vector<double>& values,
    const ExperimentConfig& cfg, const std::vector<double>& r_grid,
    int n_trials, std::uint64_t base_seed, int jobs,
    const std::string& out_root, const std::vector<long>& snapshots);

// CSV emitters. Undefined confidence intervals are written as literal nan.
void write_timeseries_csv(const std::string& path, double initial_fraction,
                          const std::vector<double>& fractions);
void write_sweep_csv(const std::string& path,
                     const std::vector<SweepRow>& rows);
void write_raw_trials_csv(const std::string& path,
                          const std::vector<TrialResult>& trials);

// Inclusive numeric grid {lo, lo+step, ...} up to hi (half-step slack).
std::vector<double> make_grid(double lo, double hi, double step);

}  // namespace pggact
