#include "spinctl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "spinctl/csvio.hpp"

namespace spinctl {

namespace {

constexpr const char* kRecordsFormat = "spinctl-records";
constexpr int kRecordsVersion = 1;

const std::vector<std::string> kRecordColumns = {
    "algorithm", "seed",      "n_spins",   "source",
    "target",    "sigma",     "shots",     "threshold",
    "budget",    "env_calls", "converged", "perceived",
    "true_fidelity", "controller"};

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string controller_cell(const Controller& c) {
  std::string s;
  for (double d : c.delta) {
    s += csv::fmt(d);
    s += ';';
  }
  s += csv::fmt(c.read_time);
  return s;
}

Controller controller_from_cell(const std::string& cell) {
  const auto parts = csv::split(cell, ';');
  if (parts.empty())
    throw std::runtime_error("empty controller cell in records file");
  Controller c;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i)
    c.delta.push_back(std::strtod(parts[i].c_str(), nullptr));
  c.read_time = std::strtod(parts.back().c_str(), nullptr);
  return c;
}

EnvConfig cell_env_config(int n, int source, int target, double sigma,
                          int shots, double threshold) {
  EnvConfig cfg;
  cfg.spec = ChainSpec::uniform(n, source, target);
  cfg.noise.sigma_noise = sigma;
  cfg.noise.shots = shots;
  if (threshold > 0.0 && threshold <= 1.0) cfg.reward_threshold = threshold;
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0))
    throw std::invalid_argument("threshold must be in (0, 1]");
  if (cfg.budget < 1) throw std::invalid_argument("budget must be >= 1");
  if (cfg.chains.empty() || cfg.transitions.empty() || cfg.sigmas.empty())
    throw std::invalid_argument("experiment grid must be nonempty");
  if (cfg.shots < 0) throw std::invalid_argument("shots must be >= 0");
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master,
                          std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t idx : indices) h = mix64(h ^ mix64(idx));
  return h;
}

RunRecord random_search(const EnvConfig& cfg, double threshold,
                        long long budget, Rng& rng) {
  if (budget < 1) throw std::invalid_argument("budget must be >= 1");
  Env env(cfg);
  RunRecord rec;
  rec.algorithm = "random";
  rec.n_spins = cfg.spec.n_spins;
  rec.source = cfg.spec.source;
  rec.target = cfg.spec.target;
  rec.sigma = cfg.noise.sigma_noise;
  rec.shots = cfg.noise.shots;
  rec.threshold = threshold;
  rec.budget = budget;
  bool have_best = false;
  while (env.calls_made() < budget) {
    const Controller c = env.reset(rng).controller;
    const double r = env.reward_at(c, rng);
    if (!have_best || r > rec.perceived) {
      have_best = true;
      rec.perceived = r;
      rec.controller = c;
      rec.true_fidelity = env.true_fidelity(c);
    }
    if (rec.perceived >= threshold) {
      rec.converged = true;
      break;
    }
  }
  rec.env_calls = env.calls_made();
  return rec;
}

std::vector<std::string> algorithms_for(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::cost_sweep:
      return {"lbfgs", "ppo", "random"};
    case ExperimentKind::noise_sweep:
      return {"lbfgs", "ppo"};
    case ExperimentKind::random_baseline:
      return {"random"};
  }
  throw std::invalid_argument("unknown experiment kind");
}

RunRecord run_single(const std::string& algorithm, EnvConfig env_cfg,
                     double threshold, long long budget, std::uint64_t seed,
                     int lbfgs_restarts) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.algorithm = algorithm;
  rec.seed = seed;
  rec.n_spins = env_cfg.spec.n_spins;
  rec.source = env_cfg.spec.source;
  rec.target = env_cfg.spec.target;
  rec.sigma = env_cfg.noise.sigma_noise;
  rec.shots = env_cfg.noise.shots;
  rec.threshold = threshold;
  rec.budget = budget;
  if (threshold > 0.0 && threshold <= 1.0)
    env_cfg.reward_threshold = threshold;

  if (algorithm == "lbfgs") {
    Env env(env_cfg);
    Rng rng(seed);
    LbfgsConfig cfg;
    cfg.threshold = threshold;
    cfg.noisy_mode = !env_cfg.noise.noiseless();
    cfg.max_restarts = lbfgs_restarts;
    const OptimResult res = optimize_with_restarts(env, cfg, rng, budget);
    rec.env_calls = res.env_calls;
    rec.converged = res.converged;
    rec.perceived = res.best_perceived;
    rec.true_fidelity = res.best_true;
    rec.controller = res.best;
  } else if (algorithm == "ppo") {
    PpoTrainer trainer(env_cfg, PpoConfig{}, seed);
    const TrainResult res = trainer.train(budget);
    rec.env_calls = res.env_calls;
    rec.converged = res.converged;
    rec.perceived = res.best_perceived;
    rec.true_fidelity = res.best_true;
    rec.controller = res.best;
  } else if (algorithm == "random") {
    Rng rng(seed);
    const RunRecord r = random_search(env_cfg, threshold, budget, rng);
    rec.env_calls = r.env_calls;
    rec.converged = r.converged;
    rec.perceived = r.perceived;
    rec.true_fidelity = r.true_fidelity;
    rec.controller = r.controller;
  } else {
    throw std::invalid_argument("unknown algorithm: " + algorithm);
  }
  rec.wall_ms = elapsed_ms(t0);
  return rec;
}

void parallel_for(std::size_t n_tasks, int threads,
                  const std::function<void(std::size_t)>& fn) {
  if (n_tasks == 0) return;
  std::size_t n_workers =
      threads > 0 ? static_cast<std::size_t>(threads)
                  : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, n_tasks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  const auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_tasks) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::vector<std::string> algos = algorithms_for(cfg.kind);

  struct Task {
    std::string algorithm;
    EnvConfig env_cfg;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < algos.size(); ++a)
    for (std::size_t c = 0; c < cfg.chains.size(); ++c)
      for (std::size_t t = 0; t < cfg.transitions.size(); ++t)
        for (std::size_t s = 0; s < cfg.sigmas.size(); ++s)
          for (int run = 0; run < cfg.runs; ++run) {
            Task task;
            task.algorithm = algos[a];
            task.env_cfg = cell_env_config(
                cfg.chains[c], cfg.transitions[t].first,
                cfg.transitions[t].second, cfg.sigmas[s], cfg.shots,
                cfg.threshold);
            task.seed = derive_seed(
                cfg.master_seed,
                {static_cast<std::uint64_t>(a), static_cast<std::uint64_t>(c),
                 static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(s),
                 static_cast<std::uint64_t>(run)});
            tasks.push_back(std::move(task));
          }

  ExperimentResult result;
  result.records.resize(tasks.size());
  parallel_for(tasks.size(), cfg.threads, [&](std::size_t i) {
    result.records[i] = run_single(tasks[i].algorithm, tasks[i].env_cfg,
                                   cfg.threshold, cfg.budget, tasks[i].seed);
  });
  result.summary = summarize(result.records);
  return result;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
  using Key = std::tuple<std::string, int, int, int, double, int>;
  std::map<Key, std::vector<const RunRecord*>> cells;
  for (const RunRecord& r : records)
    cells[{r.algorithm, r.n_spins, r.source, r.target, r.sigma, r.shots}]
        .push_back(&r);

  std::vector<SummaryRow> out;
  out.reserve(cells.size());
  for (const auto& [key, rows] : cells) {
    SummaryRow s;
    s.algorithm = std::get<0>(key);
    s.n_spins = std::get<1>(key);
    s.source = std::get<2>(key);
    s.target = std::get<3>(key);
    s.sigma = std::get<4>(key);
    s.shots = std::get<5>(key);
    s.runs = static_cast<int>(rows.size());
    std::vector<double> calls, perceived, truth;
    for (const RunRecord* r : rows) {
      if (r->converged) ++s.converged;
      calls.push_back(static_cast<double>(r->env_calls));
      perceived.push_back(r->perceived);
      truth.push_back(r->true_fidelity);
    }
    const BoxStats cb = boxplot_stats(calls);
    s.median_calls = cb.median;
    s.q1_calls = cb.q1;
    s.q3_calls = cb.q3;
    s.median_perceived = boxplot_stats(perceived).median;
    s.median_true = boxplot_stats(truth).median;
    out.push_back(std::move(s));
  }
  return out;
}

McraOutcome mcra_study(const StudyConfig& cfg, const McraConfig& mcfg) {
  if (cfg.runs < 1) throw std::invalid_argument("runs must be >= 1");
  const EnvConfig env_cfg = cell_env_config(cfg.n_spins, cfg.source,
                                            cfg.target, 0.0, 0, cfg.threshold);
  McraOutcome out;
  out.runs.resize(cfg.runs);
  parallel_for(cfg.runs, cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(cfg.master_seed, {0, i});
    out.runs[i] = run_single("lbfgs", env_cfg, cfg.threshold, cfg.budget,
                             seed, cfg.lbfgs_restarts);
  });
  for (const RunRecord& r : out.runs)
    if (r.converged) out.controllers.push_back(r.controller);
  if (out.controllers.empty())
    throw std::runtime_error("no optimization run converged; nothing to analyze");

  Rng rng(derive_seed(cfg.master_seed, {1}));
  out.distributions =
      run_mcra(out.controllers, env_cfg.spec, mcfg, rng);
  std::vector<double> sigmas, medians;
  for (const auto& d : out.distributions) {
    sigmas.push_back(d.sigma);
    medians.push_back(d.stats.median);
  }
  out.spearman_sigma_vs_median = spearman_rho(sigmas, medians);
  return out;
}

SphereOutcome sphere_study(const StudyConfig& cfg,
                           const SphereScanConfig& scfg) {
  const EnvConfig env_cfg = cell_env_config(cfg.n_spins, cfg.source,
                                            cfg.target, 0.0, 0, cfg.threshold);
  SphereOutcome out;
  out.run = run_single("lbfgs", env_cfg, cfg.threshold, cfg.budget,
                       derive_seed(cfg.master_seed, {0}), cfg.lbfgs_restarts);
  if (!out.run.converged)
    throw std::runtime_error(
        "the optimization run did not converge; no controller to scan");

  Rng rng(derive_seed(cfg.master_seed, {1}));
  out.scan = sphere_scan(out.run.controller, env_cfg.spec, scfg, rng);
  out.improving_fraction =
      improving_fraction(out.run.controller, env_cfg.spec, out.scan.directions);
  return out;
}

void write_records_csv(const std::vector<RunRecord>& records,
                       const std::string& path,
                       const std::vector<std::string>& extra_metadata) {
  csv::Writer w(path);
  w.metadata(std::string(kRecordsFormat) + " v" +
             std::to_string(kRecordsVersion));
  w.metadata("generated: " + utc_timestamp());
  for (const std::string& m : extra_metadata) w.metadata(m);
  std::string walls = "wall_ms:";
  for (const RunRecord& r : records) {
    walls += ' ';
    walls += csv::fmt(r.wall_ms);
  }
  w.metadata(walls);
  w.row(kRecordColumns);
  for (const RunRecord& r : records) {
    w.row({r.algorithm, csv::fmt(r.seed), csv::fmt(r.n_spins),
           csv::fmt(r.source), csv::fmt(r.target), csv::fmt(r.sigma),
           csv::fmt(r.shots), csv::fmt(r.threshold), csv::fmt(r.budget),
           csv::fmt(r.env_calls), csv::fmt(r.converged ? 1 : 0),
           csv::fmt(r.perceived), csv::fmt(r.true_fidelity),
           controller_cell(r.controller)});
  }
  w.close();
}

std::vector<RunRecord> read_records_csv(const std::string& path) {
  const csv::File f = csv::read(path);
  if (f.header != kRecordColumns)
    throw std::runtime_error("unexpected records header in " + path);
  std::vector<double> walls;
  for (const std::string& m : f.metadata) {
    if (m.rfind("wall_ms:", 0) != 0) continue;
    for (const auto& tok : csv::split(m.substr(8), ' '))
      if (!tok.empty()) walls.push_back(std::strtod(tok.c_str(), nullptr));
  }
  std::vector<RunRecord> out;
  out.reserve(f.rows.size());
  for (const auto& row : f.rows) {
    if (row.size() != kRecordColumns.size())
      throw std::runtime_error("malformed record row in " + path);
    RunRecord r;
    r.algorithm = row[0];
    r.seed = std::strtoull(row[1].c_str(), nullptr, 10);
    r.n_spins = std::atoi(row[2].c_str());
    r.source = std::atoi(row[3].c_str());
    r.target = std::atoi(row[4].c_str());
    r.sigma = std::strtod(row[5].c_str(), nullptr);
    r.shots = std::atoi(row[6].c_str());
    r.threshold = std::strtod(row[7].c_str(), nullptr);
    r.budget = std::strtoll(row[8].c_str(), nullptr, 10);
    r.env_calls = std::strtoll(row[9].c_str(), nullptr, 10);
    r.converged = row[10] == "1";
    r.perceived = std::strtod(row[11].c_str(), nullptr);
    r.true_fidelity = std::strtod(row[12].c_str(), nullptr);
    r.controller = controller_from_cell(row[13]);
    if (out.size() < walls.size()) r.wall_ms = walls[out.size()];
    out.push_back(std::move(r));
  }
  return out;
}

void write_records_json(const std::vector<RunRecord>& records,
                        const std::string& path) {
  nlohmann::json j;
  j["format"] = kRecordsFormat;
  j["version"] = kRecordsVersion;
  j["records"] = nlohmann::json::array();
  for (const RunRecord& r : records) {
    nlohmann::json e;
    e["algorithm"] = r.algorithm;
    e["seed"] = r.seed;
    e["n_spins"] = r.n_spins;
    e["source"] = r.source;
    e["target"] = r.target;
    e["sigma"] = r.sigma;
    e["shots"] = r.shots;
    e["threshold"] = r.threshold;
    e["budget"] = r.budget;
    e["env_calls"] = r.env_calls;
    e["converged"] = r.converged;
    e["perceived"] = r.perceived;
    e["true_fidelity"] = r.true_fidelity;
    e["controller"] = {{"delta", r.controller.delta},
                       {"read_time", r.controller.read_time}};
    e["wall_ms"] = r.wall_ms;
    j["records"].push_back(std::move(e));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  out.close();
  if (out.fail()) throw std::runtime_error("write failure: " + path);
}

std::vector<RunRecord> read_records_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  if (j.value("format", "") != kRecordsFormat ||
      j.value("version", -1) != kRecordsVersion)
    throw std::runtime_error("unexpected records format in " + path);
  std::vector<RunRecord> out;
  for (const auto& e : j.at("records")) {
    RunRecord r;
    r.algorithm = e.at("algorithm").get<std::string>();
    r.seed = e.at("seed").get<std::uint64_t>();
    r.n_spins = e.at("n_spins").get<int>();
    r.source = e.at("source").get<int>();
    r.target = e.at("target").get<int>();
    r.sigma = e.at("sigma").get<double>();
    r.shots = e.at("shots").get<int>();
    r.threshold = e.at("threshold").get<double>();
    r.budget = e.at("budget").get<long long>();
    r.env_calls = e.at("env_calls").get<long long>();
    r.converged = e.at("converged").get<bool>();
    r.perceived = e.at("perceived").get<double>();
    r.true_fidelity = e.at("true_fidelity").get<double>();
    r.controller.delta =
        e.at("controller").at("delta").get<std::vector<double>>();
    r.controller.read_time = e.at("controller").at("read_time").get<double>();
    r.wall_ms = e.at("wall_ms").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace spinctl
