#pragma once

// The control environment: state is a controller (biases + readout time),
// actions are bounded increments, the reward is the possibly noisy
// fidelity of the new controller. Every reward evaluation, from any
// optimizer, passes through this class and bumps one shared call counter,
// making costs comparable across algorithms. The exact noiseless fidelity
// is available as a separate unmetered diagnostic channel.

#include <vector>

#include "spinctl/chain.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/rng.hpp"

namespace spinctl {

struct EnvState {
  Controller controller;
};

struct EnvAction {
  std::vector<double> d_delta;  // raw policy outputs, one per site
  double d_time = 0.0;
};

struct StepOutcome {
  EnvState next_state;
  double reward = 0.0;              // perceived fidelity in [0,1]
  double perceived_fidelity = 0.0;  // alias of reward
  bool done = false;                // reward >= threshold
};

struct EnvConfig {
  ChainSpec spec;
  NoiseConfig noise;
  double reward_threshold = 0.99;
  double delta_limit = kDeltaLimit;
  double time_limit = kTimeLimit;
  // Raw actions are multiplied by these scales, then clamped to half the
  // respective limit per step.
  double action_scale_delta = 1.0;
  double action_scale_time = 3.0;
};

class Env {
 public:
  explicit Env(EnvConfig cfg);

  // Uniform controller draw: biases on [-limit, limit), time on
  // (0, time_limit]. Does not touch the call counter.
  EnvState reset(Rng& rng);

  // Applies the scaled, clamped, wrapped increment, then evaluates the
  // reward of the new controller (one metered call).
  StepOutcome step(const EnvState& state, const EnvAction& action, Rng& rng);

  // Perceived fidelity of a controller: draws a structured perturbation
  // when sigma_noise > 0, then coarse-grains when shots > 0. One metered
  // call.
  double reward_at(const Controller& ctrl, Rng& rng);

  // Metered oracle for model-based optimization: perceived value plus the
  // analytic control-space gradient of the same (possibly perturbed)
  // instance that produced it.
  struct OracleEval {
    double perceived = 0.0;
    std::vector<double> grad;  // d/d delta_1..N, d/dT of that instance
  };
  OracleEval oracle_eval(const Controller& ctrl, Rng& rng);

  // Exact noiseless fidelity; free diagnostic channel, never counted.
  double true_fidelity(const Controller& ctrl) const;
  double true_fidelity(const EnvState& state) const {
    return true_fidelity(state.controller);
  }

  long long calls_made() const { return calls_; }
  // Resumes the counter from a checkpoint so budgets stay exact.
  void restore_call_count(long long calls) { calls_ = calls; }
  const EnvConfig& config() const { return cfg_; }

  // Bias wrap into [-limit, limit): ((x + limit) mod 2 limit) - limit.
  static double wrap_delta(double x, double limit);
  // Time wrap into (0, limit]: ((t - eps) mod limit) + eps with
  // eps = 1e-6, folded back once if the formula lands above the limit.
  static double wrap_time(double t, double limit);

  Controller apply_action(const Controller& cur, const EnvAction& a) const;

 private:
  EnvConfig cfg_;
  long long calls_ = 0;
};

}  // namespace spinctl
