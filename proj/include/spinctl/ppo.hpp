#pragma once

// Proximal policy optimization built from scratch on the Mlp/Adam pieces:
// diagonal-Gaussian policy with state-independent log-std, a separate
// value network, generalized advantage estimation, and the clipped
// likelihood-ratio surrogate. Trains against Env until any step's
// perceived reward crosses the threshold or a call budget runs out.

#include <cstdint>
#include <string>
#include <vector>

#include "spinctl/env.hpp"
#include "spinctl/mlp.hpp"

namespace spinctl {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double policy_lr = 3e-4;
  double value_lr = 1e-3;
  int update_epochs = 10;
  int epochs_max = 100000;
  int steps_per_epoch = 128;
  int minibatch = 64;
  int hidden1 = 64;
  int hidden2 = 64;
  double log_std_init = -0.5;
};

struct Trajectory {
  int state_dim = 0;
  int action_dim = 0;
  std::vector<double> states;   // steps x state_dim, row-major
  std::vector<double> actions;  // steps x action_dim
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> returns;     // filled by compute_advantages
  std::vector<double> advantages;  // raw GAE values, not normalized

  int steps() const { return static_cast<int>(rewards.size()); }
};

// Fills returns-to-go and raw GAE advantages in place. bootstrap_value is
// the value estimate of the state after the last recorded step (0 for a
// terminal state). Normalization happens later, per update batch.
void compute_advantages(Trajectory& traj, double bootstrap_value,
                        double gamma, double lambda);

// In-place shift to zero mean and unit variance (eps-guarded).
void normalize_advantages(std::vector<double>& adv);

struct TrainResult {
  Controller best;
  double best_perceived = 0.0;
  double best_true = 0.0;
  long long env_calls = 0;
  bool converged = false;
  bool diverged = false;  // non-finite loss encountered; run aborted
  int epochs_run = 0;
  std::vector<double> epoch_best_perceived;  // best perceived per epoch
  std::vector<double> epoch_best_true;       // true fidelity of that best
};

struct PpoDiagnostics {
  double clip_fraction = 0.0;         // last update pass
  double approx_kl = 0.0;             // last update pass
  double first_pass_ratio_dev = 0.0;  // median |ratio - 1| on first pass
  double value_loss_first = 0.0;      // batch value loss before updates
  double value_loss_last = 0.0;       // batch value loss after last pass
  bool diverged = false;              // non-finite quantity encountered
};

struct SurrogateEval {
  double loss = 0.0;              // mean clipped-surrogate loss (negated gain)
  double clip_fraction = 0.0;     // fraction of ratios outside the clip band
  double approx_kl = 0.0;         // mean(old_log_prob - new_log_prob)
  double median_ratio_dev = 0.0;  // median |ratio - 1| over the batch
  bool finite = true;             // false when a ratio overflowed
};

class PpoTrainer {
 public:
  PpoTrainer(const EnvConfig& env_cfg, const PpoConfig& cfg,
             std::uint64_t seed);

  // Runs until convergence, epochs_max, or the env-call budget.
  TrainResult train(long long call_budget);

  // One policy/value update over a finished trajectory; exposed so the
  // surrogate and its gradients can be tested in isolation.
  PpoDiagnostics update(Trajectory& traj);

  // Clipped-surrogate loss of the current policy over a prepared batch
  // (row-major states and actions, count rows). When grads and
  // log_std_grad are both given they are reset and filled with the loss
  // gradient, enabling finite-difference checks of the backward pass.
  SurrogateEval eval_surrogate(const double* states, const double* actions,
                               const double* old_log_probs,
                               const double* advantages, int count,
                               Mlp::Grads* grads,
                               std::vector<double>* log_std_grad) const;

  // Mutable views of the policy parameters: network buffers first, then
  // the log-std vector. Order matches eval_surrogate's gradients.
  std::vector<double*> policy_parameters();
  std::vector<std::size_t> policy_parameter_sizes() const;

  // Samples an action and its exact Gaussian log-density.
  void sample_action(const std::vector<double>& state,
                     std::vector<double>& action, double& log_prob);
  double log_prob_of(const std::vector<double>& state,
                     const std::vector<double>& action) const;
  double value_of(const std::vector<double>& state) const;

  std::vector<double> normalize_state(const Controller& c) const;

  const Env& env() const { return env_; }
  Env& env() { return env_; }
  const PpoConfig& config() const { return cfg_; }
  const std::vector<double>& log_std() const { return log_std_; }

  // Training stops at config().epochs_max; raise it to continue a loaded
  // checkpoint further.
  void set_epochs_max(int epochs_max) { cfg_.epochs_max = epochs_max; }

  // Versioned JSON checkpoint of all parameters, optimizer moments,
  // configs, counters, and the random stream; loading restores training
  // exactly where it stopped.
  void save_checkpoint(const std::string& path) const;
  static PpoTrainer load_checkpoint(const std::string& path);

 private:
  EnvConfig env_cfg_;
  PpoConfig cfg_;
  Env env_;
  Rng rng_;
  Mlp policy_;
  Mlp value_;
  std::vector<double> log_std_;
  Adam policy_opt_;
  Adam value_opt_;
  // Carried across train() so checkpoint resumption is exact.
  int epochs_done_ = 0;
  TrainResult progress_;
};

}  // namespace spinctl
