#pragma once

// Experiment orchestration: seeded optimizer runs over (algorithm x chain
// x transition x noise) grids in a worker pool, the random-guess
// baseline, summary statistics, robustness studies, and CSV/JSON
// persistence. A (config, master seed) pair determines every output byte
// of the data sections; timing lives in metadata lines only.

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "spinctl/env.hpp"
#include "spinctl/lbfgs.hpp"
#include "spinctl/ppo.hpp"
#include "spinctl/robust.hpp"

namespace spinctl {

// splitmix64 finalizer: the documented 64-bit mix behind seed derivation.
std::uint64_t mix64(std::uint64_t x);

// Chains the master seed through each index, so changing any index (or
// the master) reshuffles the derived stream. Deterministic and
// collision-free at experiment-grid scale.
std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> indices);

struct RunRecord {
  std::string algorithm;  // "lbfgs" | "ppo" | "random"
  std::uint64_t seed = 0;
  int n_spins = 0;
  int source = 0;
  int target = 0;
  double sigma = 0.0;
  int shots = 0;
  double threshold = 0.0;
  long long budget = 0;
  long long env_calls = 0;
  bool converged = false;
  double perceived = 0.0;
  double true_fidelity = 0.0;
  Controller controller;
  double wall_ms = 0.0;  // exported as metadata, never in the data section
};

// Uniform-draw baseline: samples controllers exactly as the environment
// reset does, scores each with one metered reward call, and keeps the
// best. Stops once the best perceived reward reaches `threshold` (a value
// <= 0 therefore stops after the first call; a value > 1 runs the budget
// out) or after `budget` calls.
RunRecord random_search(const EnvConfig& cfg, double threshold,
                        long long budget, Rng& rng);

enum class ExperimentKind { cost_sweep, noise_sweep, random_baseline };

// Which optimizers a given experiment kind races.
std::vector<std::string> algorithms_for(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::cost_sweep;
  std::vector<int> chains = {4, 5};
  std::vector<std::pair<int, int>> transitions = {{0, 2}};
  std::vector<double> sigmas = {0.0};
  int shots = 0;
  int runs = 50;  // per cell
  double threshold = 0.99;
  long long budget = 1000000;
  std::uint64_t master_seed = 1;
  int threads = 0;  // worker count; 0 = one per hardware thread
};

struct SummaryRow {
  std::string algorithm;
  int n_spins = 0;
  int source = 0;
  int target = 0;
  double sigma = 0.0;
  int shots = 0;
  int runs = 0;
  int converged = 0;
  double median_calls = 0.0;
  double q1_calls = 0.0;
  double q3_calls = 0.0;
  double median_perceived = 0.0;
  double median_true = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // ordered by (cell, run), not by finish
  std::vector<SummaryRow> summary;
};

// Runs `runs` independent seeded runs for every (algorithm x chain x
// transition x sigma) cell. Work is spread over a thread pool; each run
// owns its environment and RNG, and results land in slots indexed by
// (cell, run), so scheduling cannot change any output. Throws
// std::invalid_argument on an inconsistent config.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

// One seeded run of the named algorithm; the building block behind
// run_experiment workers and the single-run CLI paths. lbfgs_restarts
// caps the quasi-Newton restart loop and is ignored by other algorithms.
RunRecord run_single(const std::string& algorithm, EnvConfig env_cfg,
                     double threshold, long long budget, std::uint64_t seed,
                     int lbfgs_restarts = 100);

// Per-cell medians and quartiles, recomputable from the raw records.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

// Robustness studies: optimize controllers with quasi-Newton restarts on
// independent derived seeds, then analyze the converged ones.
struct StudyConfig {
  int n_spins = 4;
  int source = 0;
  int target = 2;
  int runs = 10;  // optimization attempts
  double threshold = 0.99;
  long long budget = 1000000;
  std::uint64_t master_seed = 1;
  int threads = 0;
  int lbfgs_restarts = 100;
};

struct McraOutcome {
  std::vector<RunRecord> runs;          // one per optimization attempt
  std::vector<Controller> controllers;  // the converged subset
  std::vector<FidelityDistribution> distributions;
  double spearman_sigma_vs_median = 0.0;
};

McraOutcome mcra_study(const StudyConfig& cfg, const McraConfig& mcfg);

struct SphereOutcome {
  RunRecord run;  // the optimization that produced the scanned controller
  SphereScan scan;
  double improving_fraction = 0.0;  // slope > 1e-3 at h = 1e-4
};

SphereOutcome sphere_study(const StudyConfig& cfg,
                           const SphereScanConfig& scfg);

// records <-> files. CSV keeps wall times and timestamps in '#' metadata
// lines; JSON mirrors every record field. Readers throw
// std::runtime_error naming the path on open, format, or schema errors.
void write_records_csv(const std::vector<RunRecord>& records,
                       const std::string& path,
                       const std::vector<std::string>& extra_metadata = {});
std::vector<RunRecord> read_records_csv(const std::string& path);
void write_records_json(const std::vector<RunRecord>& records,
                        const std::string& path);
std::vector<RunRecord> read_records_json(const std::string& path);

// Runs fn(0..n_tasks-1) on `threads` workers (0 = hardware concurrency).
// The first exception thrown by any task is rethrown after all workers
// finish.
void parallel_for(std::size_t n_tasks, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace spinctl
