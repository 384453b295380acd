#include "spinctl/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {
constexpr double kTimeWrapEps = 1e-6;

double positive_fmod(double x, double m) {
  double r = std::fmod(x, m);
  return r < 0.0 ? r + m : r;
}
}  // namespace

Env::Env(EnvConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.spec.validate();
  if (cfg_.reward_threshold <= 0.0 || cfg_.reward_threshold > 1.0)
    throw std::invalid_argument("reward threshold must lie in (0, 1]");
}

double Env::wrap_delta(double x, double limit) {
  return positive_fmod(x + limit, 2.0 * limit) - limit;
}

double Env::wrap_time(double t, double limit) {
  double r = positive_fmod(t - kTimeWrapEps, limit) + kTimeWrapEps;
  if (r > limit) {
    // The eps shift can overshoot by one period; fold genuine overshoots
    // back. Overshoots at rounding scale are the boundary value itself
    // (t within noise of a period multiple), not a wrap to ~0.
    const double folded = r - limit;
    r = folded > 1e-9 ? folded : limit;
  }
  return r;
}

EnvState Env::reset(Rng& rng) {
  EnvState s;
  s.controller.delta.resize(cfg_.spec.n_spins);
  for (auto& d : s.controller.delta)
    d = rng.uniform(-cfg_.delta_limit, cfg_.delta_limit);
  // time_limit - U[0, limit) lies in (0, limit].
  s.controller.read_time = cfg_.time_limit - rng.uniform(0.0, cfg_.time_limit);
  return s;
}

Controller Env::apply_action(const Controller& cur, const EnvAction& a) const {
  if (a.d_delta.size() != cur.delta.size())
    throw std::invalid_argument("action dimension mismatch");
  const double dmax = 0.5 * cfg_.delta_limit;
  const double tmax = 0.5 * cfg_.time_limit;
  Controller next = cur;
  for (std::size_t i = 0; i < cur.delta.size(); ++i) {
    const double inc = std::clamp(cfg_.action_scale_delta * a.d_delta[i],
                                  -dmax, dmax);
    if (!std::isfinite(inc)) throw std::invalid_argument("non-finite action");
    next.delta[i] = wrap_delta(cur.delta[i] + inc, cfg_.delta_limit);
  }
  const double tinc =
      std::clamp(cfg_.action_scale_time * a.d_time, -tmax, tmax);
  if (!std::isfinite(tinc)) throw std::invalid_argument("non-finite action");
  next.read_time = wrap_time(cur.read_time + tinc, cfg_.time_limit);
  return next;
}

double Env::reward_at(const Controller& ctrl, Rng& rng) {
  ++calls_;
  double f;
  if (cfg_.noise.sigma_noise > 0.0) {
    const auto p = sample_structured_perturbation(
        cfg_.spec.n_spins, cfg_.noise.sigma_noise, rng);
    SymTridiag h = build_hamiltonian(cfg_.spec, ctrl);
    for (int i = 0; i < cfg_.spec.n_spins; ++i) h.diag[i] += p.diag[i];
    for (int i = 0; i + 1 < cfg_.spec.n_spins; ++i) h.off[i] += p.off[i];
    f = transfer_fidelity(h, cfg_.spec.source, cfg_.spec.target,
                          ctrl.read_time);
  } else {
    f = fidelity(cfg_.spec, ctrl);
  }
  return coarse_grain_fidelity(f, cfg_.noise.shots, rng);
}

StepOutcome Env::step(const EnvState& state, const EnvAction& action,
                      Rng& rng) {
  StepOutcome out;
  out.next_state.controller = apply_action(state.controller, action);
  out.reward = reward_at(out.next_state.controller, rng);
  out.perceived_fidelity = out.reward;
  out.done = out.reward >= cfg_.reward_threshold;
  return out;
}

Env::OracleEval Env::oracle_eval(const Controller& ctrl, Rng& rng) {
  ++calls_;
  OracleEval out;
  if (cfg_.noise.sigma_noise > 0.0) {
    // Gradient of the perturbed instance the optimizer actually observed:
    // shift the biases and couplings by one fresh structured draw.
    const auto p = sample_structured_perturbation(
        cfg_.spec.n_spins, cfg_.noise.sigma_noise, rng);
    ChainSpec pspec = cfg_.spec;
    Controller pctrl = ctrl;
    for (int i = 0; i < cfg_.spec.n_spins; ++i) pctrl.delta[i] += p.diag[i];
    for (int i = 0; i + 1 < cfg_.spec.n_spins; ++i)
      pspec.couplings[i] += p.off[i];
    const auto cg = fidelity_with_gradient(pspec, pctrl);
    out.perceived = coarse_grain_fidelity(cg.value, cfg_.noise.shots, rng);
    out.grad = cg.grad;
  } else {
    const auto cg = fidelity_with_gradient(cfg_.spec, ctrl);
    out.perceived = coarse_grain_fidelity(cg.value, cfg_.noise.shots, rng);
    out.grad = cg.grad;
  }
  return out;
}

double Env::true_fidelity(const Controller& ctrl) const {
  return fidelity(cfg_.spec, ctrl);
}

}  // namespace spinctl
