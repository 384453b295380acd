// Command-line front end: seeded experiment sweeps, single optimizer runs,
// robustness studies, and summary reports over the records they emit.
// Every experiment is reproducible from its master seed; CSV data
// sections are byte-stable across reruns, with timing confined to '#'
// metadata lines. Exit code 0 covers completed-but-unconverged runs;
// nonzero is reserved for configuration and I/O errors.

#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "spinctl/csvio.hpp"
#include "spinctl/harness.hpp"
#include "spinctl/kernels.hpp"

namespace {

using namespace spinctl;

std::pair<int, int> parse_transition(const std::string& text) {
  const auto parts = csv::split(text, ':');
  if (parts.size() != 2 || parts[0].empty() || parts[1].empty())
    throw CLI::ValidationError("--transition", "expected S:T site indices");
  try {
    return {std::stoi(parts[0]), std::stoi(parts[1])};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--transition", "expected S:T site indices");
  }
}

std::vector<std::pair<int, int>> parse_transitions(
    const std::vector<std::string>& texts) {
  std::vector<std::pair<int, int>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse_transition(t));
  return out;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  std::printf("%-7s %7s %6s %6s %6s %5s %5s %12s %12s %12s %10s %10s\n",
              "algo", "n", "src", "tgt", "sigma", "shots", "conv",
              "med_calls", "q1_calls", "q3_calls", "med_perc", "med_true");
  for (const SummaryRow& s : rows) {
    char conv[32];
    std::snprintf(conv, sizeof conv, "%d/%d", s.converged, s.runs);
    std::printf("%-7s %7d %6d %6d %6.3f %5d %5s %12.1f %12.1f %12.1f "
                "%10.4f %10.4f\n",
                s.algorithm.c_str(), s.n_spins, s.source, s.target, s.sigma,
                s.shots, conv, s.median_calls, s.q1_calls, s.q3_calls,
                s.median_perceived, s.median_true);
  }
}

void print_record(const RunRecord& r) {
  std::printf("%s: %s after %lld calls, perceived %.6f, true %.6f\n",
              r.algorithm.c_str(), r.converged ? "converged" : "unconverged",
              r.env_calls, r.perceived, r.true_fidelity);
  std::printf("controller: biases [");
  for (std::size_t i = 0; i < r.controller.delta.size(); ++i)
    std::printf("%s%.6f", i ? ", " : "", r.controller.delta[i]);
  std::printf("], readout time %.6f\n", r.controller.read_time);
}

void write_records(const std::vector<RunRecord>& records,
                   const std::string& path, const std::string& format,
                   const std::vector<std::string>& metadata) {
  if (path.empty()) return;
  if (format == "json") {
    write_records_json(records, path);
  } else {
    write_records_csv(records, path, metadata);
  }
  std::printf("wrote %zu record%s to %s\n", records.size(),
              records.size() == 1 ? "" : "s", path.c_str());
}

std::vector<std::string> common_metadata(const std::string& command,
                                         std::uint64_t seed) {
  return {"command: " + command, "master_seed: " + std::to_string(seed),
          "backend: " + std::string(kern::backend_name(kern::active_backend()))};
}

// Grid subcommand state shared by cost-sweep, noise-sweep, random-search
// in sweep form.
struct SweepOptions {
  std::vector<int> chains;
  std::vector<std::string> transitions = {"0:2"};
  std::vector<double> sigmas = {0.0};
  int shots = 0;
  int runs = 50;
  double threshold = 0.99;
  long long budget = 1000000;
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string out;
  std::string format = "csv";
};

void add_sweep_options(CLI::App* cmd, SweepOptions& o) {
  cmd->add_option("--chain", o.chains, "Chain length(s) N")
      ->capture_default_str();
  cmd->add_option("--transition", o.transitions,
                  "Transition S:T (0-based site indices)")
      ->capture_default_str();
  cmd->add_option("--sigma", o.sigmas, "Structured-noise level(s)")
      ->capture_default_str();
  cmd->add_option("--shots", o.shots, "Measurement shots M (0 = exact)")
      ->capture_default_str();
  cmd->add_option("--runs", o.runs, "Runs per cell")->capture_default_str();
  cmd->add_option("--threshold", o.threshold, "Fidelity threshold")
      ->capture_default_str();
  cmd->add_option("--budget", o.budget, "Environment-call budget per run")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Records output file");
  cmd->add_option("--format", o.format, "Output format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

int run_sweep(ExperimentKind kind, const SweepOptions& o,
              const std::string& command) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.chains = o.chains;
  cfg.transitions = parse_transitions(o.transitions);
  cfg.sigmas = o.sigmas;
  cfg.shots = o.shots;
  cfg.runs = o.runs;
  cfg.threshold = o.threshold;
  cfg.budget = o.budget;
  cfg.master_seed = o.seed;
  cfg.threads = o.jobs;
  const ExperimentResult res = run_experiment(cfg);
  print_summary(res.summary);
  write_records(res.records, o.out, o.format, common_metadata(command, o.seed));
  return 0;
}

// Options for the single-run subcommands.
struct SingleOptions {
  int chain = 4;
  std::string transition = "0:2";
  double sigma = 0.0;
  int shots = 0;
  double threshold = 0.99;
  long long budget = 1000000;
  std::uint64_t seed = 1;
  int restarts = 100;
  std::string out;
  std::string format = "csv";
};

void add_single_options(CLI::App* cmd, SingleOptions& o, bool with_restarts,
                        bool with_noise = true, bool with_format = true) {
  cmd->add_option("--chain", o.chain, "Chain length N")->capture_default_str();
  cmd->add_option("--transition", o.transition,
                  "Transition S:T (0-based site indices)")
      ->capture_default_str();
  if (with_noise) {
    cmd->add_option("--sigma", o.sigma, "Structured-noise level")
        ->capture_default_str();
    cmd->add_option("--shots", o.shots, "Measurement shots M (0 = exact)")
        ->capture_default_str();
  }
  cmd->add_option("--threshold", o.threshold, "Fidelity threshold")
      ->capture_default_str();
  cmd->add_option("--budget", o.budget, "Environment-call budget")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Run seed")->capture_default_str();
  if (with_restarts)
    cmd->add_option("--restarts", o.restarts, "Restart cap")
        ->capture_default_str();
  if (with_format) {
    cmd->add_option("--out", o.out, "Record output file");
    cmd->add_option("--format", o.format, "Output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
  }
}

int run_single_command(const std::string& algorithm, const SingleOptions& o,
                       const std::string& command) {
  const auto [src, tgt] = parse_transition(o.transition);
  EnvConfig env_cfg;
  env_cfg.spec = ChainSpec::uniform(o.chain, src, tgt);
  env_cfg.noise.sigma_noise = o.sigma;
  env_cfg.noise.shots = o.shots;
  const RunRecord rec = run_single(algorithm, env_cfg, o.threshold, o.budget,
                                   o.seed, o.restarts);
  print_record(rec);
  write_records({rec}, o.out, o.format, common_metadata(command, o.seed));
  return 0;
}

std::string swap_suffix(const std::string& path, const std::string& tag) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + tag;
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

int run_mcra_command(const SingleOptions& o, int runs, double sigma_max,
                     int levels, int repeats, int jobs) {
  const auto [src, tgt] = parse_transition(o.transition);
  StudyConfig cfg;
  cfg.n_spins = o.chain;
  cfg.source = src;
  cfg.target = tgt;
  cfg.runs = runs;
  cfg.threshold = o.threshold;
  cfg.budget = o.budget;
  cfg.master_seed = o.seed;
  cfg.threads = jobs;
  cfg.lbfgs_restarts = o.restarts;
  McraConfig mcfg;
  mcfg.n_levels = levels;
  mcfg.sigma_max = sigma_max;
  mcfg.repeats = repeats;
  const McraOutcome out = mcra_study(cfg, mcfg);

  std::printf("%zu of %zu optimization runs converged at threshold %.4f\n",
              out.controllers.size(), out.runs.size(), o.threshold);
  std::printf("%-10s %10s %10s %10s %8s\n", "sigma", "median", "q1", "q3",
              "outliers");
  for (const auto& d : out.distributions)
    std::printf("%-10.6f %10.6f %10.6f %10.6f %8zu\n", d.sigma,
                d.stats.median, d.stats.q1, d.stats.q3, d.stats.outliers.size());
  std::printf("spearman(sigma, median fidelity) = %.4f\n",
              out.spearman_sigma_vs_median);

  if (!o.out.empty()) {
    auto meta = common_metadata("mcra", o.seed);
    meta.push_back("level_median: pooled samples per level");
    csv::Writer samples(o.out);
    samples.metadata("spinctl-mcra-samples v1");
    for (const auto& m : meta) samples.metadata(m);
    samples.row({"controller_id", "sigma", "repeat", "fidelity"});
    for (const auto& d : out.distributions) {
      const std::size_t reps = static_cast<std::size_t>(mcfg.repeats);
      for (std::size_t i = 0; i < d.samples.size(); ++i)
        samples.row({csv::fmt(static_cast<long long>(i / reps)),
                     csv::fmt(d.sigma),
                     csv::fmt(static_cast<long long>(i % reps)),
                     csv::fmt(d.samples[i])});
    }
    samples.close();
    const std::string stats_path = swap_suffix(o.out, "stats");
    csv::Writer stats(stats_path);
    stats.metadata("spinctl-mcra-stats v1");
    for (const auto& m : meta) stats.metadata(m);
    stats.row({"sigma", "median", "q1", "q3", "whisker_low", "whisker_high",
               "n_outliers"});
    for (const auto& d : out.distributions)
      stats.row({csv::fmt(d.sigma), csv::fmt(d.stats.median),
                 csv::fmt(d.stats.q1), csv::fmt(d.stats.q3),
                 csv::fmt(d.stats.whisker_low), csv::fmt(d.stats.whisker_high),
                 csv::fmt(static_cast<long long>(d.stats.outliers.size()))});
    stats.close();
    std::printf("wrote samples to %s and box statistics to %s\n",
                o.out.c_str(), stats_path.c_str());
  }
  return 0;
}

int run_sphere_command(const SingleOptions& o, int directions, int jobs) {
  const auto [src, tgt] = parse_transition(o.transition);
  StudyConfig cfg;
  cfg.n_spins = o.chain;
  cfg.source = src;
  cfg.target = tgt;
  cfg.runs = 1;
  cfg.threshold = o.threshold;
  cfg.budget = o.budget;
  cfg.master_seed = o.seed;
  cfg.threads = jobs;
  cfg.lbfgs_restarts = o.restarts;
  SphereScanConfig scfg;
  scfg.n_directions = directions;
  const SphereOutcome out = sphere_study(cfg, scfg);

  print_record(out.run);
  std::printf("directions: %zu, improving fraction (slope > 1e-3 at h=1e-4): "
              "%.4f\n",
              out.scan.directions.size(), out.improving_fraction);

  if (!o.out.empty()) {
    const auto meta = common_metadata("sphere", o.seed);
    csv::Writer curves(o.out);
    curves.metadata("spinctl-sphere-curves v1");
    for (const auto& m : meta) curves.metadata(m);
    curves.metadata("controller: " + [&] {
      std::string s;
      for (double d : out.run.controller.delta) s += csv::fmt(d) + ";";
      return s + csv::fmt(out.run.controller.read_time);
    }());
    std::string strengths_line = "strengths:";
    for (double s : out.scan.strengths) strengths_line += " " + csv::fmt(s);
    curves.metadata(strengths_line);
    std::vector<std::string> header = {"direction"};
    for (std::size_t s = 0; s < out.scan.strengths.size(); ++s)
      header.push_back("s" + std::to_string(s));
    curves.row(header);
    for (std::size_t d = 0; d < out.scan.curves.size(); ++d) {
      std::vector<std::string> row = {csv::fmt(static_cast<long long>(d))};
      for (double v : out.scan.curves[d]) row.push_back(csv::fmt(v));
      curves.row(row);
    }
    curves.close();

    const std::string dens_path = swap_suffix(o.out, "densities");
    csv::Writer dens(dens_path);
    dens.metadata("spinctl-sphere-densities v1");
    for (const auto& m : meta) dens.metadata(m);
    dens.metadata(strengths_line);
    std::vector<std::string> dheader = {"strength"};
    const std::size_t n_bins = out.scan.densities.front().size();
    for (std::size_t b = 0; b < n_bins; ++b)
      dheader.push_back("bin" + std::to_string(b));
    dens.row(dheader);
    for (std::size_t s = 0; s < out.scan.densities.size(); ++s) {
      std::vector<std::string> row = {csv::fmt(out.scan.strengths[s])};
      for (double v : out.scan.densities[s]) row.push_back(csv::fmt(v));
      dens.row(row);
    }
    dens.close();
    std::printf("wrote curves to %s and densities to %s\n", o.out.c_str(),
                dens_path.c_str());
  }
  return 0;
}

int run_report(const std::string& path, std::string format) {
  if (format.empty()) {
    const std::size_t dot = path.find_last_of('.');
    format = (dot != std::string::npos && path.substr(dot) == ".json")
                 ? "json"
                 : "csv";
  }
  const std::vector<RunRecord> records = format == "json"
                                             ? read_records_json(path)
                                             : read_records_csv(path);
  if (records.empty()) {
    std::printf("no records in %s\n", path.c_str());
    return 0;
  }
  std::printf("%zu records from %s\n", records.size(), path.c_str());
  print_summary(summarize(records));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-chain transfer control: simulation, optimization, and "
               "robustness studies"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI file whose keys (per subcommand section) override "
                 "flag defaults");

  std::string backend = "auto";
  app.add_option("--backend", backend,
                 "Kernel backend: auto|scalar|avx2 (auto picks the fastest "
                 "available)")
      ->capture_default_str();

  SweepOptions cost_opts;
  cost_opts.chains = {4, 5};
  CLI::App* cost = app.add_subcommand(
      "cost-sweep", "Race lbfgs/ppo/random over chain lengths");
  add_sweep_options(cost, cost_opts);

  SweepOptions noise_opts;
  noise_opts.chains = {4};
  noise_opts.sigmas = {0.0, 0.05, 0.1};
  noise_opts.threshold = 0.98;
  CLI::App* noise = app.add_subcommand(
      "noise-sweep", "Race lbfgs/ppo across structured-noise levels");
  add_sweep_options(noise, noise_opts);

  SweepOptions random_opts;
  random_opts.chains = {4};
  CLI::App* random_cmd = app.add_subcommand(
      "random-search", "Uniform-guessing baseline over the same grid");
  add_sweep_options(random_cmd, random_opts);

  SingleOptions ppo_opts;
  ppo_opts.chain = 3;
  CLI::App* ppo_cmd =
      app.add_subcommand("train-ppo", "Train one PPO agent on one chain");
  add_single_options(ppo_cmd, ppo_opts, false);

  SingleOptions lbfgs_opts;
  CLI::App* lbfgs_cmd = app.add_subcommand(
      "optimize-lbfgs", "One quasi-Newton restart run on one chain");
  add_single_options(lbfgs_cmd, lbfgs_opts, true);

  SingleOptions mcra_opts;
  mcra_opts.threshold = 0.99;
  mcra_opts.sigma = 0.1;
  int mcra_runs = 10, mcra_levels = 10, mcra_repeats = 10, mcra_jobs = 0;
  CLI::App* mcra_cmd = app.add_subcommand(
      "mcra", "Optimize controllers, then Monte Carlo robustness analysis");
  add_single_options(mcra_cmd, mcra_opts, true, false, false);
  mcra_cmd->add_option("--sigma", mcra_opts.sigma,
                       "Largest noise level of the ladder")
      ->capture_default_str();
  mcra_cmd->add_option("--out", mcra_opts.out,
                       "Samples output file (box statistics go to a "
                       ".stats.csv sidecar)");
  mcra_cmd->add_option("--runs", mcra_runs, "Controllers to optimize")
      ->capture_default_str();
  mcra_cmd->add_option("--levels", mcra_levels, "Noise levels in the ladder")
      ->capture_default_str();
  mcra_cmd->add_option("--repeats", mcra_repeats,
                       "Perturbation draws per controller per level")
      ->capture_default_str();
  mcra_cmd->add_option("--jobs", mcra_jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();

  SingleOptions sphere_opts;
  sphere_opts.chain = 5;
  sphere_opts.transition = "0:4";
  sphere_opts.threshold = 0.999999;
  sphere_opts.restarts = 10000;
  int sphere_directions = 1000, sphere_jobs = 0;
  CLI::App* sphere_cmd = app.add_subcommand(
      "sphere", "Optimize one controller, then scan perturbation directions");
  add_single_options(sphere_cmd, sphere_opts, true, false, false);
  sphere_cmd->add_option("--out", sphere_opts.out,
                         "Curves output file (densities go to a "
                         ".densities.csv sidecar)");
  sphere_cmd
      ->add_option("--directions", sphere_directions,
                   "Unit directions to scan")
      ->capture_default_str();
  sphere_cmd
      ->add_option("--jobs", sphere_jobs, "Worker threads (0 = all cores)")
      ->capture_default_str();

  std::string report_path, report_format;
  CLI::App* report_cmd = app.add_subcommand(
      "report", "Summarize a records file (medians and quartiles per cell)");
  report_cmd->add_option("path", report_path, "Records file (.csv or .json)")
      ->required();
  report_cmd->add_option("--format", report_format,
                         "Input format (inferred from the extension if unset)")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (backend != "auto")
      spinctl::kern::set_backend(spinctl::kern::parse_backend(backend));

    if (cost->parsed())
      return run_sweep(ExperimentKind::cost_sweep, cost_opts, "cost-sweep");
    if (noise->parsed())
      return run_sweep(ExperimentKind::noise_sweep, noise_opts, "noise-sweep");
    if (random_cmd->parsed())
      return run_sweep(ExperimentKind::random_baseline, random_opts,
                       "random-search");
    if (ppo_cmd->parsed())
      return run_single_command("ppo", ppo_opts, "train-ppo");
    if (lbfgs_cmd->parsed())
      return run_single_command("lbfgs", lbfgs_opts, "optimize-lbfgs");
    if (mcra_cmd->parsed())
      return run_mcra_command(mcra_opts, mcra_runs, mcra_opts.sigma,
                              mcra_levels, mcra_repeats, mcra_jobs);
    if (sphere_cmd->parsed())
      return run_sphere_command(sphere_opts, sphere_directions, sphere_jobs);
    if (report_cmd->parsed()) return run_report(report_path, report_format);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
