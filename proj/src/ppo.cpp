#include "spinctl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace spinctl {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

double median_abs(std::vector<double> v) {
  if (v.empty()) return 0.0;
  for (auto& x : v) x = std::abs(x);
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void compute_advantages(Trajectory& traj, double bootstrap_value, double gamma,
                        double lambda) {
  const int k = traj.steps();
  traj.advantages.assign(k, 0.0);
  traj.returns.assign(k, 0.0);
  double carry = 0.0;
  double next_value = bootstrap_value;
  for (int t = k - 1; t >= 0; --t) {
    const double delta =
        traj.rewards[t] + gamma * next_value - traj.values[t];
    carry = delta + gamma * lambda * carry;
    traj.advantages[t] = carry;
    traj.returns[t] = carry + traj.values[t];
    next_value = traj.values[t];
  }
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(adv.size()));
  for (double& a : adv) a = (a - mean) / (sd + 1e-8);
}

PpoTrainer::PpoTrainer(const EnvConfig& env_cfg, const PpoConfig& cfg,
                       std::uint64_t seed)
    : env_cfg_(env_cfg),
      cfg_(cfg),
      env_(env_cfg),
      rng_(seed),
      policy_(env_cfg.spec.n_spins + 1, cfg.hidden1, cfg.hidden2,
              env_cfg.spec.n_spins + 1, rng_),
      value_(env_cfg.spec.n_spins + 1, cfg.hidden1, cfg.hidden2, 1, rng_),
      log_std_(env_cfg.spec.n_spins + 1, cfg.log_std_init),
      policy_opt_(
          [&] {
            auto s = policy_.param_sizes();
            s.push_back(log_std_.size());
            return s;
          }(),
          cfg.policy_lr),
      value_opt_(value_.param_sizes(), cfg.value_lr) {
  if (!(cfg.gamma > 0.0 && cfg.gamma <= 1.0))
    throw std::invalid_argument("gamma must be in (0, 1]");
  if (!(cfg.gae_lambda >= 0.0 && cfg.gae_lambda <= 1.0))
    throw std::invalid_argument("gae_lambda must be in [0, 1]");
  if (!(cfg.clip_ratio > 0.0 && cfg.clip_ratio < 1.0))
    throw std::invalid_argument("clip_ratio must be in (0, 1)");
  if (cfg.policy_lr <= 0.0 || cfg.value_lr <= 0.0)
    throw std::invalid_argument("learning rates must be positive");
  if (cfg.update_epochs < 1 || cfg.epochs_max < 1 || cfg.steps_per_epoch < 1 ||
      cfg.minibatch < 1)
    throw std::invalid_argument("epoch and batch counts must be positive");
}

std::vector<double> PpoTrainer::normalize_state(const Controller& c) const {
  std::vector<double> s;
  s.reserve(c.delta.size() + 1);
  for (double d : c.delta) s.push_back(d / env_cfg_.delta_limit);
  s.push_back(c.read_time / env_cfg_.time_limit);
  return s;
}

void PpoTrainer::sample_action(const std::vector<double>& state,
                               std::vector<double>& action, double& log_prob) {
  const int a_dim = policy_.output_dim();
  std::vector<double> mean(a_dim);
  policy_.forward(state.data(), 1, mean.data());
  action.resize(a_dim);
  log_prob = 0.0;
  for (int j = 0; j < a_dim; ++j) {
    const double sd = std::exp(log_std_[j]);
    const double z = rng_.normal();
    action[j] = mean[j] + sd * z;
    log_prob += -0.5 * z * z - log_std_[j] - kHalfLog2Pi;
  }
}

double PpoTrainer::log_prob_of(const std::vector<double>& state,
                               const std::vector<double>& action) const {
  const int a_dim = policy_.output_dim();
  std::vector<double> mean(a_dim);
  policy_.forward(state.data(), 1, mean.data());
  double lp = 0.0;
  for (int j = 0; j < a_dim; ++j) {
    const double z = (action[j] - mean[j]) / std::exp(log_std_[j]);
    lp += -0.5 * z * z - log_std_[j] - kHalfLog2Pi;
  }
  return lp;
}

double PpoTrainer::value_of(const std::vector<double>& state) const {
  double v;
  value_.forward(state.data(), 1, &v);
  return v;
}

std::vector<double*> PpoTrainer::policy_parameters() {
  auto bufs = policy_.param_buffers();
  bufs.push_back(log_std_.data());
  return bufs;
}

std::vector<std::size_t> PpoTrainer::policy_parameter_sizes() const {
  auto sizes = policy_.param_sizes();
  sizes.push_back(log_std_.size());
  return sizes;
}

SurrogateEval PpoTrainer::eval_surrogate(const double* states,
                                         const double* actions,
                                         const double* old_log_probs,
                                         const double* advantages, int count,
                                         Mlp::Grads* grads,
                                         std::vector<double>* log_std_grad)
    const {
  SurrogateEval ev;
  if (count <= 0) return ev;
  const bool want_grad = grads != nullptr && log_std_grad != nullptr;
  const int a_dim = policy_.output_dim();

  Mlp::Cache cache;
  std::vector<double> mean(static_cast<std::size_t>(count) * a_dim);
  policy_.forward(states, count, mean.data(), want_grad ? &cache : nullptr);

  std::vector<double> z(static_cast<std::size_t>(count) * a_dim);
  std::vector<double> dlogp(want_grad ? count : 0);
  std::vector<double> dev(count);
  double loss = 0.0, clip_count = 0.0, kl_acc = 0.0;
  for (int i = 0; i < count; ++i) {
    double lp = 0.0;
    for (int j = 0; j < a_dim; ++j) {
      const double zz = (actions[i * a_dim + j] - mean[i * a_dim + j]) /
                        std::exp(log_std_[j]);
      z[i * a_dim + j] = zz;
      lp += -0.5 * zz * zz - log_std_[j] - kHalfLog2Pi;
    }
    const double ratio = std::exp(lp - old_log_probs[i]);
    if (!std::isfinite(ratio)) {
      ev.finite = false;
      return ev;
    }
    dev[i] = std::abs(ratio - 1.0);
    kl_acc += old_log_probs[i] - lp;
    if (ratio < 1.0 - cfg_.clip_ratio || ratio > 1.0 + cfg_.clip_ratio)
      clip_count += 1.0;
    const double clipped =
        std::clamp(ratio, 1.0 - cfg_.clip_ratio, 1.0 + cfg_.clip_ratio);
    const double a = advantages[i];
    loss -= std::min(ratio * a, clipped * a);
    if (want_grad) {
      // Gradient flows only where the unclipped branch attains the min.
      const bool unclipped_active = ratio * a <= clipped * a;
      dlogp[i] =
          unclipped_active ? -ratio * a / static_cast<double>(count) : 0.0;
    }
  }
  ev.loss = loss / static_cast<double>(count);
  ev.clip_fraction = clip_count / static_cast<double>(count);
  ev.approx_kl = kl_acc / static_cast<double>(count);
  ev.median_ratio_dev = median_abs(dev);

  if (want_grad) {
    std::vector<double> dmean(static_cast<std::size_t>(count) * a_dim);
    log_std_grad->assign(a_dim, 0.0);
    for (int i = 0; i < count; ++i) {
      for (int j = 0; j < a_dim; ++j) {
        const double zz = z[i * a_dim + j];
        dmean[i * a_dim + j] = dlogp[i] * zz / std::exp(log_std_[j]);
        (*log_std_grad)[j] += dlogp[i] * (zz * zz - 1.0);
      }
    }
    *grads = policy_.make_grads();
    policy_.backward(cache, dmean.data(), *grads);
  }
  return ev;
}

PpoDiagnostics PpoTrainer::update(Trajectory& traj) {
  PpoDiagnostics diag;
  const int k = traj.steps();
  const int s_dim = traj.state_dim;
  const int a_dim = traj.action_dim;
  if (k == 0) return diag;

  std::vector<double> adv = traj.advantages;
  normalize_advantages(adv);

  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;

  Mlp::Grads pgrads, vgrads = value_.make_grads();
  std::vector<double> dlogstd;

  bool first_minibatch = true;
  for (int pass = 0; pass < cfg_.update_epochs; ++pass) {
    // Fisher-Yates shuffle on the shared stream keeps runs reproducible.
    for (int i = k - 1; i > 0; --i) {
      const int j =
          static_cast<int>(rng_.raw() % static_cast<std::uint64_t>(i + 1));
      std::swap(idx[i], idx[j]);
    }
    for (int start = 0; start < k; start += cfg_.minibatch) {
      const int b = std::min(cfg_.minibatch, k - start);

      std::vector<double> sx(static_cast<std::size_t>(b) * s_dim);
      std::vector<double> aa(static_cast<std::size_t>(b) * a_dim);
      std::vector<double> old_lp(b), badv(b), bret(b);
      for (int i = 0; i < b; ++i) {
        const int src = idx[start + i];
        std::copy_n(traj.states.begin() + src * s_dim, s_dim,
                    sx.begin() + i * s_dim);
        std::copy_n(traj.actions.begin() + src * a_dim, a_dim,
                    aa.begin() + i * a_dim);
        old_lp[i] = traj.log_probs[src];
        badv[i] = adv[src];
        bret[i] = traj.returns[src];
      }

      const SurrogateEval se =
          eval_surrogate(sx.data(), aa.data(), old_lp.data(), badv.data(), b,
                         &pgrads, &dlogstd);
      if (!se.finite) {
        diag.diverged = true;
        return diag;
      }
      if (first_minibatch) {
        diag.first_pass_ratio_dev = se.median_ratio_dev;
        first_minibatch = false;
      }
      diag.clip_fraction = se.clip_fraction;
      diag.approx_kl = se.approx_kl;

      auto pg = Mlp::grad_buffers(pgrads);
      pg.push_back(dlogstd.data());
      policy_opt_.step(policy_parameters(), pg);

      Mlp::Cache vcache;
      std::vector<double> v(b);
      value_.forward(sx.data(), b, v.data(), &vcache);
      std::vector<double> dv(b);
      double vloss = 0.0;
      for (int i = 0; i < b; ++i) {
        const double err = v[i] - bret[i];
        vloss += err * err;
        dv[i] = 2.0 * err / static_cast<double>(b);
      }
      vloss /= static_cast<double>(b);
      if (!std::isfinite(vloss)) {
        diag.diverged = true;
        return diag;
      }
      if (pass == 0 && start == 0) diag.value_loss_first = vloss;
      diag.value_loss_last = vloss;
      vgrads.zero();
      value_.backward(vcache, dv.data(), vgrads);
      value_opt_.step(value_.param_buffers(), Mlp::grad_buffers(vgrads));
    }
  }
  return diag;
}

TrainResult PpoTrainer::train(long long call_budget) {
  const int n = env_cfg_.spec.n_spins;
  const int s_dim = n + 1;
  const int a_dim = n + 1;

  bool have_best = progress_.epochs_run > 0;
  for (int epoch = epochs_done_; epoch < cfg_.epochs_max; ++epoch) {
    if (env_.calls_made() >= call_budget || progress_.diverged) break;

    EnvState state = env_.reset(rng_);
    Trajectory traj;
    traj.state_dim = s_dim;
    traj.action_dim = a_dim;

    bool done = false;
    bool budget_hit = false;
    double epoch_best = -1.0;
    Controller epoch_best_ctrl;
    std::vector<double> action;
    while (traj.steps() < cfg_.steps_per_epoch) {
      if (env_.calls_made() >= call_budget) {
        budget_hit = true;
        break;
      }
      const auto obs = normalize_state(state.controller);
      const double v = value_of(obs);
      double log_prob;
      sample_action(obs, action, log_prob);

      EnvAction ea;
      ea.d_delta.assign(action.begin(), action.begin() + n);
      ea.d_time = action[n];
      const StepOutcome out = env_.step(state, ea, rng_);

      traj.states.insert(traj.states.end(), obs.begin(), obs.end());
      traj.actions.insert(traj.actions.end(), action.begin(), action.end());
      traj.log_probs.push_back(log_prob);
      traj.rewards.push_back(out.reward);
      traj.values.push_back(v);

      if (!have_best || out.reward > progress_.best_perceived) {
        have_best = true;
        progress_.best = out.next_state.controller;
        progress_.best_perceived = out.reward;
        progress_.best_true = env_.true_fidelity(out.next_state);
      }
      if (out.reward > epoch_best) {
        epoch_best = out.reward;
        epoch_best_ctrl = out.next_state.controller;
      }
      state = out.next_state;
      if (out.done) {
        done = true;
        break;
      }
    }

    if (traj.steps() > 0) {
      progress_.epoch_best_perceived.push_back(epoch_best);
      progress_.epoch_best_true.push_back(env_.true_fidelity(epoch_best_ctrl));
    }
    epochs_done_ = epoch + 1;
    progress_.epochs_run = epochs_done_;

    if (done) {
      progress_.converged = true;
      break;
    }
    if (budget_hit) break;

    const double bootstrap = value_of(normalize_state(state.controller));
    compute_advantages(traj, bootstrap, cfg_.gamma, cfg_.gae_lambda);
    const auto diag = update(traj);
    if (diag.diverged) progress_.diverged = true;
  }

  progress_.env_calls = env_.calls_made();
  return progress_;
}

namespace {

nlohmann::json mlp_to_json(const Mlp& net) {
  nlohmann::json j = nlohmann::json::array();
  const auto bufs = net.param_buffers();
  const auto sizes = net.param_sizes();
  for (std::size_t i = 0; i < bufs.size(); ++i)
    j.push_back(std::vector<double>(bufs[i], bufs[i] + sizes[i]));
  return j;
}

void mlp_from_json(Mlp& net, const nlohmann::json& j) {
  auto bufs = net.param_buffers();
  const auto sizes = net.param_sizes();
  if (j.size() != bufs.size())
    throw std::runtime_error("checkpoint: wrong network buffer count");
  for (std::size_t i = 0; i < bufs.size(); ++i) {
    const auto v = j[i].get<std::vector<double>>();
    if (v.size() != sizes[i])
      throw std::runtime_error("checkpoint: wrong network buffer size");
    std::copy(v.begin(), v.end(), bufs[i]);
  }
}

nlohmann::json adam_to_json(const Adam& opt) {
  return {{"t", opt.steps_taken()},
          {"m", opt.first_moments()},
          {"v", opt.second_moments()}};
}

void adam_from_json(Adam& opt, const nlohmann::json& j) {
  opt.restore(j.at("t").get<int>(),
              j.at("m").get<std::vector<std::vector<double>>>(),
              j.at("v").get<std::vector<std::vector<double>>>());
}

}  // namespace

void PpoTrainer::save_checkpoint(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "spinctl-ppo-checkpoint";
  j["version"] = 1;
  j["env"] = {{"n_spins", env_cfg_.spec.n_spins},
              {"couplings", env_cfg_.spec.couplings},
              {"source", env_cfg_.spec.source},
              {"target", env_cfg_.spec.target},
              {"sigma_noise", env_cfg_.noise.sigma_noise},
              {"shots", env_cfg_.noise.shots},
              {"reward_threshold", env_cfg_.reward_threshold},
              {"delta_limit", env_cfg_.delta_limit},
              {"time_limit", env_cfg_.time_limit},
              {"action_scale_delta", env_cfg_.action_scale_delta},
              {"action_scale_time", env_cfg_.action_scale_time}};
  j["ppo"] = {{"gamma", cfg_.gamma},
              {"gae_lambda", cfg_.gae_lambda},
              {"clip_ratio", cfg_.clip_ratio},
              {"policy_lr", cfg_.policy_lr},
              {"value_lr", cfg_.value_lr},
              {"update_epochs", cfg_.update_epochs},
              {"epochs_max", cfg_.epochs_max},
              {"steps_per_epoch", cfg_.steps_per_epoch},
              {"minibatch", cfg_.minibatch},
              {"hidden1", cfg_.hidden1},
              {"hidden2", cfg_.hidden2},
              {"log_std_init", cfg_.log_std_init}};
  j["policy"] = mlp_to_json(policy_);
  j["value"] = mlp_to_json(value_);
  j["log_std"] = log_std_;
  j["policy_opt"] = adam_to_json(policy_opt_);
  j["value_opt"] = adam_to_json(value_opt_);
  j["rng"] = rng_.save_state();
  j["env_calls"] = env_.calls_made();
  j["progress"] = {{"epochs_done", epochs_done_},
                   {"best_delta", progress_.best.delta},
                   {"best_time", progress_.best.read_time},
                   {"best_perceived", progress_.best_perceived},
                   {"best_true", progress_.best_true},
                   {"converged", progress_.converged},
                   {"diverged", progress_.diverged},
                   {"epochs_run", progress_.epochs_run},
                   {"epoch_best_perceived", progress_.epoch_best_perceived},
                   {"epoch_best_true", progress_.epoch_best_true}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

PpoTrainer PpoTrainer::load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "spinctl-ppo-checkpoint")
    throw std::runtime_error("not a trainer checkpoint: " + path);
  if (j.value("version", 0) != 1)
    throw std::runtime_error("unsupported checkpoint version");

  EnvConfig env_cfg;
  const auto& je = j.at("env");
  env_cfg.spec.n_spins = je.at("n_spins").get<int>();
  env_cfg.spec.couplings = je.at("couplings").get<std::vector<double>>();
  env_cfg.spec.source = je.at("source").get<int>();
  env_cfg.spec.target = je.at("target").get<int>();
  env_cfg.noise.sigma_noise = je.at("sigma_noise").get<double>();
  env_cfg.noise.shots = je.at("shots").get<int>();
  env_cfg.reward_threshold = je.at("reward_threshold").get<double>();
  env_cfg.delta_limit = je.at("delta_limit").get<double>();
  env_cfg.time_limit = je.at("time_limit").get<double>();
  env_cfg.action_scale_delta = je.at("action_scale_delta").get<double>();
  env_cfg.action_scale_time = je.at("action_scale_time").get<double>();

  PpoConfig cfg;
  const auto& jp = j.at("ppo");
  cfg.gamma = jp.at("gamma").get<double>();
  cfg.gae_lambda = jp.at("gae_lambda").get<double>();
  cfg.clip_ratio = jp.at("clip_ratio").get<double>();
  cfg.policy_lr = jp.at("policy_lr").get<double>();
  cfg.value_lr = jp.at("value_lr").get<double>();
  cfg.update_epochs = jp.at("update_epochs").get<int>();
  cfg.epochs_max = jp.at("epochs_max").get<int>();
  cfg.steps_per_epoch = jp.at("steps_per_epoch").get<int>();
  cfg.minibatch = jp.at("minibatch").get<int>();
  cfg.hidden1 = jp.at("hidden1").get<int>();
  cfg.hidden2 = jp.at("hidden2").get<int>();
  cfg.log_std_init = jp.at("log_std_init").get<double>();

  PpoTrainer t(env_cfg, cfg, 0);
  mlp_from_json(t.policy_, j.at("policy"));
  mlp_from_json(t.value_, j.at("value"));
  t.log_std_ = j.at("log_std").get<std::vector<double>>();
  adam_from_json(t.policy_opt_, j.at("policy_opt"));
  adam_from_json(t.value_opt_, j.at("value_opt"));
  t.rng_.load_state(j.at("rng").get<std::string>());
  t.env_.restore_call_count(j.at("env_calls").get<long long>());

  const auto& pr = j.at("progress");
  t.epochs_done_ = pr.at("epochs_done").get<int>();
  t.progress_.best.delta = pr.at("best_delta").get<std::vector<double>>();
  t.progress_.best.read_time = pr.at("best_time").get<double>();
  t.progress_.best_perceived = pr.at("best_perceived").get<double>();
  t.progress_.best_true = pr.at("best_true").get<double>();
  t.progress_.converged = pr.at("converged").get<bool>();
  t.progress_.diverged = pr.at("diverged").get<bool>();
  t.progress_.epochs_run = pr.at("epochs_run").get<int>();
  t.progress_.epoch_best_perceived =
      pr.at("epoch_best_perceived").get<std::vector<double>>();
  t.progress_.epoch_best_true =
      pr.at("epoch_best_true").get<std::vector<double>>();
  t.progress_.env_calls = j.at("env_calls").get<long long>();
  return t;
}

}  // namespace spinctl
