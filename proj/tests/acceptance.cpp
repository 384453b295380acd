// Acceptance gate: nine end-to-end criteria, printed one line each.
// Exit status is the number of failed criteria, so 0 means a clean pass.
// Criterion 9 drives the installed CLI binary (path from SPINCTL_CLI, a
// command-line argument, or a sibling `spinctl` next to this executable)
// and compares CSV data sections byte for byte across reruns.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "spinctl/chain.hpp"
#include "spinctl/env.hpp"
#include "spinctl/harness.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/rng.hpp"
#include "spinctl/robust.hpp"

namespace {

using namespace spinctl;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

// 1. A three-site chain with zero bias transfers the excitation end to end
//    perfectly at readout time pi/sqrt(2); the computed fidelity must sit
//    within 1e-10 of 1 and the evaluation must be immediate.
Outcome criterion1() {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.0, 0.0, 0.0};
  ctrl.read_time = std::numbers::pi / std::sqrt(2.0);
  const double f = fidelity(spec, ctrl);
  const double err = std::abs(f - 1.0);
  return {err <= 1e-10, fmt("fidelity deficit %.3e", err)};
}

// 2. The analytic gradient matches central finite differences (h = 1e-5)
//    to relative accuracy 1e-6 at 100 random bias/time points for every
//    chain length from 3 to 7.
Outcome criterion2() {
  Rng rng(20240901);
  const double h = 1e-5;
  double worst = 0.0;
  for (int n = 3; n <= 7; ++n) {
    const ChainSpec spec = ChainSpec::uniform(n, 0, n - 1);
    for (int trial = 0; trial < 100; ++trial) {
      Controller ctrl;
      ctrl.delta.resize(n);
      for (double& d : ctrl.delta) d = rng.uniform(-5.0, 5.0);
      ctrl.read_time = rng.uniform(0.5, 25.0);
      const ControlGradient g = fidelity_with_gradient(spec, ctrl);

      std::vector<double> fd(n + 1);
      for (int j = 0; j <= n; ++j) {
        Controller up = ctrl, dn = ctrl;
        if (j < n) {
          up.delta[j] += h;
          dn.delta[j] -= h;
        } else {
          up.read_time += h;
          dn.read_time -= h;
        }
        fd[j] = (fidelity(spec, up) - fidelity(spec, dn)) / (2.0 * h);
      }
      double diff2 = 0.0, ref2 = 0.0;
      for (int j = 0; j <= n; ++j) {
        diff2 += (g.grad[j] - fd[j]) * (g.grad[j] - fd[j]);
        ref2 += fd[j] * fd[j];
      }
      const double rel = std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-9);
      worst = std::max(worst, rel);
    }
  }
  return {worst <= 1e-6, fmt("worst relative gradient error %.3e", worst)};
}

double median_calls(const std::vector<SummaryRow>& rows,
                    const std::string& algo, int n, double sigma) {
  for (const SummaryRow& r : rows)
    if (r.algorithm == algo && r.n_spins == n && r.sigma == sigma)
      return r.median_calls;
  throw std::runtime_error("summary row missing: " + algo);
}

// 3. Noiseless cost race on chains of 4 and 5 sites, 20 seeds per
//    algorithm: the quasi-Newton median stays at or under 1e3 calls, the
//    median ordering is lbfgs < ppo < random, and lbfgs is at least 10x
//    cheaper than ppo.
Outcome criterion3() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::cost_sweep;
  cfg.chains = {4, 5};
  cfg.transitions = {{0, 2}};
  cfg.sigmas = {0.0};
  cfg.runs = 20;
  cfg.threshold = 0.99;
  cfg.budget = 1000000;
  cfg.master_seed = 1;
  const ExperimentResult res = run_experiment(cfg);

  bool ok = true;
  std::string detail;
  for (int n : {4, 5}) {
    const double l = median_calls(res.summary, "lbfgs", n, 0.0);
    const double p = median_calls(res.summary, "ppo", n, 0.0);
    const double r = median_calls(res.summary, "random", n, 0.0);
    ok = ok && l <= 1e3 && l < p && p < r && p >= 10.0 * l;
    detail += fmt("%sN=%d medians lbfgs %.0f, ppo %.0f, random %.0f",
                  n == 4 ? "" : "; ", n, l, p, r);
  }
  return {ok, detail};
}

// 4. Structured noise inflates quasi-Newton cost by 10x or more between
//    sigma 0 and 0.1 (4 sites, threshold 0.98, 10 seeds), while ppo's
//    median cost grows by less than 10x over the same span.
Outcome criterion4() {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::noise_sweep;
  cfg.chains = {4};
  cfg.transitions = {{0, 2}};
  cfg.sigmas = {0.0, 0.05, 0.1};
  cfg.runs = 10;
  cfg.threshold = 0.98;
  cfg.budget = 1000000;
  cfg.master_seed = 1;
  const ExperimentResult res = run_experiment(cfg);

  const double l0 = median_calls(res.summary, "lbfgs", 4, 0.0);
  const double l1 = median_calls(res.summary, "lbfgs", 4, 0.1);
  const double p0 = median_calls(res.summary, "ppo", 4, 0.0);
  const double p1 = median_calls(res.summary, "ppo", 4, 0.1);
  const bool ok = l1 >= 10.0 * l0 && p1 < 10.0 * p0;
  return {ok, fmt("lbfgs medians %.0f -> %.0f (%.0fx), ppo %.0f -> %.0f "
                  "(%.1fx)",
                  l0, l1, l1 / l0, p0, p1, p1 / p0)};
}

// 5. Under structured noise 0.05 and 100-shot readout on a 4-site chain,
//    at least 7 of 10 quasi-Newton runs reach perceived fidelity 0.99
//    within 1e6 calls; the exact fidelity of each converged controller is
//    reported alongside.
Outcome criterion5() {
  EnvConfig env_cfg;
  env_cfg.spec = ChainSpec::uniform(4, 0, 2);
  env_cfg.noise.sigma_noise = 0.05;
  env_cfg.noise.shots = 100;
  std::vector<RunRecord> recs(10);
  parallel_for(10, 0, [&](std::size_t i) {
    recs[i] = run_single("lbfgs", env_cfg, 0.99, 1000000,
                         static_cast<std::uint64_t>(i + 1));
  });
  int converged = 0;
  std::string trues = "exact fidelities";
  for (const RunRecord& r : recs) {
    if (!r.converged) continue;
    ++converged;
    trues += fmt(" %.3f", r.true_fidelity);
  }
  return {converged >= 7, fmt("%d/10 converged; %s", converged,
                              trues.c_str())};
}

// 6. Shot-limited readout is unbiased: over 1e4 draws the sample mean sits
//    within three standard errors of the exact fidelity for every
//    combination of f in {0.1, 0.5, 0.99} and shots in {10, 100}.
Outcome criterion6() {
  Rng rng(77);
  const int draws = 10000;
  double worst_z = 0.0;
  for (double f : {0.1, 0.5, 0.99}) {
    for (int m : {10, 100}) {
      double sum = 0.0;
      for (int i = 0; i < draws; ++i)
        sum += coarse_grain_fidelity(f, m, rng);
      const double mean = sum / draws;
      const double se = std::sqrt(f * (1.0 - f) / m / draws);
      worst_z = std::max(worst_z, std::abs(mean - f) / se);
    }
  }
  return {worst_z <= 3.0, fmt("worst |mean - f| = %.2f standard errors",
                              worst_z)};
}

// 7. Ten quasi-Newton controllers (4 sites, threshold 0.99) pushed through
//    a ten-level noise ladder with ten draws each: the zero-noise level
//    keeps median fidelity at or above 0.99 and median fidelity does not
//    increase with noise (Spearman rho <= 0). Must finish within 5 minutes.
Outcome criterion7() {
  StudyConfig cfg;
  cfg.n_spins = 4;
  cfg.source = 0;
  cfg.target = 2;
  cfg.runs = 10;
  cfg.threshold = 0.99;
  cfg.budget = 1000000;
  cfg.master_seed = 1;
  McraConfig mcfg;
  mcfg.n_levels = 10;
  mcfg.sigma_max = 0.1;
  mcfg.repeats = 10;
  const McraOutcome out = mcra_study(cfg, mcfg);
  const double med0 = out.distributions.front().stats.median;
  const bool ok = out.controllers.size() == 10 && med0 >= 0.99 &&
                  out.spearman_sigma_vs_median <= 0.0;
  return {ok, fmt("%zu/10 controllers, zero-noise median %.4f, spearman "
                  "%.3f",
                  out.controllers.size(), med0,
                  out.spearman_sigma_vs_median)};
}

// 8. One tightly converged controller on a 5-site end-to-end transfer,
//    scanned along 1000 random perturbation directions over strengths in
//    [-0.1, 0.1]: every curve reproduces the unperturbed fidelity at
//    strength 0 within 1e-12, and at most 5% of directions have a central
//    finite-difference slope at 0 that points uphill.
Outcome criterion8() {
  StudyConfig cfg;
  cfg.n_spins = 5;
  cfg.source = 0;
  cfg.target = 4;
  cfg.runs = 1;
  cfg.threshold = 0.999999;
  cfg.budget = 1000000;
  cfg.master_seed = 2;
  cfg.lbfgs_restarts = 10000;
  SphereScanConfig scfg;
  scfg.n_directions = 1000;
  const SphereOutcome out = sphere_study(cfg, scfg);

  const std::size_t mid = out.scan.strengths.size() / 2;
  const ChainSpec spec = ChainSpec::uniform(cfg.n_spins, cfg.source,
                                            cfg.target);
  const double f0 = fidelity(spec, out.run.controller);
  double agree = 0.0;
  for (const auto& curve : out.scan.curves)
    agree = std::max(agree, std::abs(curve[mid] - f0));
  const bool ok = out.scan.strengths[mid] == 0.0 && agree <= 1e-12 &&
                  out.improving_fraction <= 0.05;
  return {ok, fmt("true fidelity %.8f, zero-strength agreement %.2e, "
                  "improving fraction %.4f",
                  out.run.true_fidelity, agree, out.improving_fraction)};
}

std::string g_cli_path;
std::filesystem::path g_tmp_dir;

std::string read_data_section(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line, data;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    data += line;
    data += '\n';
  }
  return data;
}

void run_cli(const std::string& args) {
  const std::string cmd = "\"" + g_cli_path + "\" " + args + " > /dev/null";
  const int status = std::system(cmd.c_str());
  if (status != 0)
    throw std::runtime_error("CLI exited with status " +
                             std::to_string(status) + ": " + args);
}

// 9. Rerunning every CLI experiment with the same master seed reproduces
//    the CSV data sections byte for byte, including across different
//    worker-thread counts; only '#' metadata lines may differ.
Outcome criterion9() {
  namespace fs = std::filesystem;
  struct Case {
    std::string name;
    std::string first;   // argument template, @ is the output path
    std::string second;  // rerun arguments, may vary thread count
    std::vector<std::string> suffixes;  // extra files derived from @
  };
  const std::string base = " --chain 3 --runs 2 --budget 30000 ";
  const std::vector<Case> cases = {
      {"cost-sweep",
       "cost-sweep" + base + "--seed 11 --jobs 1 --out @",
       "cost-sweep" + base + "--seed 11 --jobs 4 --out @",
       {}},
      {"noise-sweep",
       "noise-sweep" + base + "--sigma 0 --sigma 0.05 --seed 12 --jobs 4 "
       "--out @",
       "noise-sweep" + base + "--sigma 0 --sigma 0.05 --seed 12 --jobs 2 "
       "--out @",
       {}},
      {"random-search",
       "random-search --chain 3 --runs 2 --budget 100000 --seed 13 --jobs 4 "
       "--out @",
       "random-search --chain 3 --runs 2 --budget 100000 --seed 13 --jobs 1 "
       "--out @",
       {}},
      {"optimize-lbfgs",
       "optimize-lbfgs --chain 3 --seed 5 --budget 100000 --out @",
       "optimize-lbfgs --chain 3 --seed 5 --budget 100000 --out @",
       {}},
      {"train-ppo",
       "train-ppo --chain 3 --seed 1 --budget 30000 --out @",
       "train-ppo --chain 3 --seed 1 --budget 30000 --out @",
       {}},
      {"mcra",
       "mcra --chain 3 --runs 2 --levels 3 --repeats 3 --seed 3 "
       "--budget 100000 --out @",
       "mcra --chain 3 --runs 2 --levels 3 --repeats 3 --seed 3 "
       "--budget 100000 --jobs 2 --out @",
       {".stats"}},
      {"sphere",
       "sphere --chain 3 --transition 0:2 --threshold 0.99 --restarts 50 "
       "--directions 25 --seed 2 --budget 100000 --out @",
       "sphere --chain 3 --transition 0:2 --threshold 0.99 --restarts 50 "
       "--directions 25 --seed 2 --budget 100000 --jobs 2 --out @",
       {".densities"}},
  };

  int files_compared = 0;
  for (const Case& c : cases) {
    const fs::path out_a = g_tmp_dir / (c.name + "_a.csv");
    const fs::path out_b = g_tmp_dir / (c.name + "_b.csv");
    auto with_out = [](std::string tpl, const std::string& path) {
      tpl.replace(tpl.find('@'), 1, path);
      return tpl;
    };
    run_cli(with_out(c.first, out_a.string()));
    run_cli(with_out(c.second, out_b.string()));

    std::vector<std::pair<fs::path, fs::path>> pairs = {{out_a, out_b}};
    for (const std::string& sfx : c.suffixes) {
      auto derived = [&](const fs::path& p) {
        fs::path q = p;
        q.replace_extension(sfx + ".csv");
        return q;
      };
      pairs.push_back({derived(out_a), derived(out_b)});
    }
    for (const auto& [a, b] : pairs) {
      ++files_compared;
      if (read_data_section(a) != read_data_section(b))
        return {false, c.name + ": data sections differ between reruns"};
    }
  }
  return {true, fmt("%zu commands rerun, %d files byte-identical",
                    cases.size(), files_compared)};
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* env = std::getenv("SPINCTL_CLI"))
    g_cli_path = env;
  else if (argc > 1)
    g_cli_path = argv[1];
  else
    g_cli_path = (std::filesystem::path(argv[0]).parent_path() / "spinctl")
                     .string();

  g_tmp_dir = std::filesystem::temp_directory_path() /
              ("spinctl-acceptance-" + std::to_string(::getpid()));
  std::filesystem::create_directories(g_tmp_dir);

  struct Entry {
    std::function<Outcome()> run;
    double time_limit_s;  // 0 means no mandated limit
  };
  const std::vector<Entry> entries = {
      {criterion1, 1.0},  {criterion2, 10.0}, {criterion3, 0.0},
      {criterion4, 0.0},  {criterion5, 0.0},  {criterion6, 1.0},
      {criterion7, 300.0}, {criterion8, 0.0},  {criterion9, 0.0},
  };

  int failures = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = entries[i].run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (entries[i].time_limit_s > 0.0 && secs > entries[i].time_limit_s) {
      out.pass = false;
      out.detail += fmt(" [over %.0fs limit]", entries[i].time_limit_s);
    }
    if (!out.pass) ++failures;
    std::printf("[%s] criterion %zu: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL",
                i + 1, out.detail.c_str(), secs);
    std::fflush(stdout);
  }

  std::error_code ec;
  std::filesystem::remove_all(g_tmp_dir, ec);
  return failures;
}
