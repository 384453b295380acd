#pragma once

// Limited-memory quasi-Newton minimizer with a strong-Wolfe line search
// and a noisy-objective fallback, plus the random-restart fidelity
// maximizer that drives it against the control environment's metered
// gradient oracle.

#include <functional>
#include <vector>

#include "spinctl/env.hpp"

namespace spinctl {

struct LbfgsConfig {
  int memory = 10;        // stored (s, y) pairs
  double c1 = 1e-4;       // Armijo constant
  double c2 = 0.9;        // curvature constant
  double gtol = 1e-8;     // gradient-norm stop
  int max_iters = 500;    // per start
  int max_restarts = 100;
  double threshold = 0.99;  // fidelity target across restarts
  bool noisy_mode = false;  // enables the halving line-search fallback
};

// Objective: writes the gradient into g (resized as needed), returns f.
using Objective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;
// In-place projection onto the feasible set.
using Projection = std::function<void(std::vector<double>&)>;
// Observer invoked after each accepted step with (iterate, value).
using IterateObserver =
    std::function<void(const std::vector<double>&, double)>;

enum class LbfgsStatus {
  gradient_tolerance,
  max_iterations,
  line_search_failure,
};

struct LbfgsOutcome {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;  // accepted steps
  LbfgsStatus status = LbfgsStatus::max_iterations;
};

// Two-loop recursion for the approximate inverse-Hessian product: returns
// the quasi-Newton descent direction -H grad. Pairs whose curvature
// s.y <= 1e-10 are skipped; with no usable pair the result is -grad.
std::vector<double> two_loop_direction(
    const std::vector<std::vector<double>>& s_hist,
    const std::vector<std::vector<double>>& y_hist,
    const std::vector<double>& grad);

// Minimizes fg from x0. Steps satisfy strong Wolfe conditions; in
// noisy_mode a failed search falls back to the first of 20 halved steps
// meeting the Armijo test (or the smallest trial). A non-finite objective
// value aborts the run with line_search_failure. project, when given, is
// applied to every trial point and accepted iterate.
LbfgsOutcome lbfgs_minimize(const Objective& fg, std::vector<double> x0,
                            const LbfgsConfig& cfg,
                            const Projection& project = nullptr,
                            const IterateObserver& on_iterate = nullptr);

struct OptimResult {
  Controller best;
  double best_perceived = 0.0;
  double best_true = 0.0;
  long long env_calls = 0;
  int restarts_used = 0;
  bool converged = false;
};

// Maximizes the environment's fidelity by minimizing its negative through
// repeated quasi-Newton starts from uniform random controllers. Biases
// are clamped to [-limit, limit] and the readout time to [1e-6, limit]
// after every step. Each oracle evaluation is one metered call; the run
// stops once the incumbent passes cfg.threshold (checked after each start
// on the exact fidelity, or on a fresh metered estimate in noisy mode),
// the restart cap is hit, or the call budget runs out.
OptimResult optimize_with_restarts(Env& env, const LbfgsConfig& cfg, Rng& rng,
                                   long long call_budget);

}  // namespace spinctl
