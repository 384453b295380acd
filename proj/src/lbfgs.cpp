#include "spinctl/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spinctl/kernels.hpp"

namespace spinctl {

namespace {

constexpr double kCurvatureFloor = 1e-10;
// Feasible readout times are (0, limit]; projection uses this floor.
constexpr double kTimeFloor = 1e-6;

struct NonFiniteObjective {};
struct BudgetExhausted {};

struct PhiEval {
  double f;  // objective along the ray
  double d;  // directional derivative along the ray
};

using PhiFn = std::function<PhiEval(double)>;

// Minimizer of the cubic through (a, fa, da) and (b, fb, db); NaN when
// the interpolant has none.
double cubic_min(double a, double fa, double da, double b, double fb,
                 double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double sign = b > a ? 1.0 : (b < a ? -1.0 : 0.0);
  const double d2 = std::sqrt(disc) * sign;
  const double denom = db - da + 2.0 * d2;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return b - (b - a) * (db + d2 - d1) / denom;
}

struct WolfeResult {
  double alpha = 0.0;
  bool ok = false;
};

WolfeResult zoom(const PhiFn& phi, double phi0, double dphi0, double lo,
                 double flo, double dlo, double hi, double fhi, double dhi,
                 double c1, double c2, int max_zoom) {
  for (int i = 0; i < max_zoom; ++i) {
    double a = cubic_min(lo, flo, dlo, hi, fhi, dhi);
    const double width = std::abs(hi - lo);
    const double mn = std::min(lo, hi), mx = std::max(lo, hi);
    // Reject exterior or near-endpoint interpolants (NaN fails the test).
    if (!(a >= mn + 0.1 * width && a <= mx - 0.1 * width))
      a = 0.5 * (lo + hi);
    const PhiEval e = phi(a);
    if (e.f > phi0 + c1 * a * dphi0 || e.f >= flo) {
      hi = a;
      fhi = e.f;
      dhi = e.d;
    } else {
      if (std::abs(e.d) <= -c2 * dphi0) return {a, true};
      if (e.d * (hi - lo) >= 0.0) {
        hi = lo;
        fhi = flo;
        dhi = dlo;
      }
      lo = a;
      flo = e.f;
      dlo = e.d;
    }
  }
  return {};
}

// Bracket-and-zoom search for a strong-Wolfe step along phi.
WolfeResult line_search_wolfe(const PhiFn& phi, double phi0, double dphi0,
                              double c1, double c2, int max_expand = 8,
                              int max_zoom = 12) {
  double a_prev = 0.0, f_prev = phi0, d_prev = dphi0;
  double a = 1.0;
  const double a_max = 1e3;
  for (int i = 0; i < max_expand; ++i) {
    const PhiEval e = phi(a);
    if (e.f > phi0 + c1 * a * dphi0 || (i > 0 && e.f >= f_prev))
      return zoom(phi, phi0, dphi0, a_prev, f_prev, d_prev, a, e.f, e.d, c1,
                  c2, max_zoom);
    if (std::abs(e.d) <= -c2 * dphi0) return {a, true};
    if (e.d >= 0.0)
      return zoom(phi, phi0, dphi0, a, e.f, e.d, a_prev, f_prev, d_prev, c1,
                  c2, max_zoom);
    a_prev = a;
    f_prev = e.f;
    d_prev = e.d;
    a = std::min(2.0 * a, a_max);
  }
  return {};
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(kern::dot(v.data(), v.data(), v.size()));
}

void validate(const LbfgsConfig& cfg) {
  if (!(0.0 < cfg.c1 && cfg.c1 < cfg.c2 && cfg.c2 < 1.0))
    throw std::invalid_argument("need 0 < c1 < c2 < 1");
  if (cfg.memory < 1) throw std::invalid_argument("memory must be >= 1");
  if (cfg.max_iters < 1 || cfg.max_restarts < 1)
    throw std::invalid_argument("iteration and restart caps must be >= 1");
}

std::vector<double> flatten(const Controller& c) {
  std::vector<double> x = c.delta;
  x.push_back(c.read_time);
  return x;
}

Controller unflatten(const std::vector<double>& x) {
  Controller c;
  c.delta.assign(x.begin(), x.end() - 1);
  c.read_time = x.back();
  return c;
}

}  // namespace

std::vector<double> two_loop_direction(
    const std::vector<std::vector<double>>& s_hist,
    const std::vector<std::vector<double>>& y_hist,
    const std::vector<double>& grad) {
  const std::size_t n = grad.size();
  const int k = static_cast<int>(s_hist.size());
  std::vector<double> q = grad;
  std::vector<double> alpha(k, 0.0);
  std::vector<char> used(k, 0);
  for (int i = k - 1; i >= 0; --i) {
    const double sy = kern::dot(s_hist[i].data(), y_hist[i].data(), n);
    if (sy <= kCurvatureFloor) continue;
    used[i] = 1;
    alpha[i] = kern::dot(s_hist[i].data(), q.data(), n) / sy;
    kern::axpy(-alpha[i], y_hist[i].data(), q.data(), n);
  }
  // The newest usable pair sets the initial inverse-Hessian scale.
  for (int i = k - 1; i >= 0; --i) {
    if (!used[i]) continue;
    const double sy = kern::dot(s_hist[i].data(), y_hist[i].data(), n);
    const double yy = kern::dot(y_hist[i].data(), y_hist[i].data(), n);
    kern::scal(sy / yy, q.data(), n);
    break;
  }
  for (int i = 0; i < k; ++i) {
    if (!used[i]) continue;
    const double sy = kern::dot(s_hist[i].data(), y_hist[i].data(), n);
    const double b = kern::dot(y_hist[i].data(), q.data(), n) / sy;
    kern::axpy(alpha[i] - b, s_hist[i].data(), q.data(), n);
  }
  for (auto& v : q) v = -v;
  return q;
}

LbfgsOutcome lbfgs_minimize(const Objective& fg, std::vector<double> x0,
                            const LbfgsConfig& cfg, const Projection& project,
                            const IterateObserver& on_iterate) {
  validate(cfg);
  const std::size_t n = x0.size();
  LbfgsOutcome out;
  out.x = std::move(x0);
  if (project) project(out.x);

  std::vector<std::vector<double>> s_hist, y_hist;
  std::vector<double> g(n, 0.0);
  try {
    out.f = fg(out.x, g);
    if (!std::isfinite(out.f)) throw NonFiniteObjective{};

    for (int it = 0; it < cfg.max_iters; ++it) {
      if (norm2(g) <= cfg.gtol) {
        out.status = LbfgsStatus::gradient_tolerance;
        return out;
      }
      std::vector<double> d = two_loop_direction(s_hist, y_hist, g);
      double dphi0 = kern::dot(g.data(), d.data(), n);
      if (dphi0 >= 0.0) {
        // Fall back to steepest descent if the model direction degrades.
        for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
        dphi0 = -kern::dot(g.data(), g.data(), n);
      }

      const PhiFn phi = [&](double a) -> PhiEval {
        std::vector<double> xa(n), ga(n);
        for (std::size_t i = 0; i < n; ++i) xa[i] = out.x[i] + a * d[i];
        if (project) project(xa);
        const double fa = fg(xa, ga);
        if (!std::isfinite(fa)) throw NonFiniteObjective{};
        return {fa, kern::dot(ga.data(), d.data(), n)};
      };

      const WolfeResult ls = line_search_wolfe(phi, out.f, dphi0, cfg.c1,
                                               cfg.c2);
      double alpha;
      if (ls.ok) {
        alpha = ls.alpha;
      } else if (!cfg.noisy_mode) {
        out.status = LbfgsStatus::line_search_failure;
        return out;
      } else {
        // Noisy fallback: accept the first halved step passing Armijo,
        // otherwise the smallest trial, and keep iterating.
        double a = 1.0;
        for (int j = 0; j < 20; ++j) {
          a *= 0.5;
          const PhiEval e = phi(a);
          if (e.f <= out.f + cfg.c1 * a * dphi0) break;
        }
        alpha = a;
      }

      std::vector<double> xn(n), gn(n);
      for (std::size_t i = 0; i < n; ++i) xn[i] = out.x[i] + alpha * d[i];
      if (project) project(xn);
      const double fn = fg(xn, gn);
      if (!std::isfinite(fn)) throw NonFiniteObjective{};

      std::vector<double> s(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = xn[i] - out.x[i];
        y[i] = gn[i] - g[i];
      }
      if (kern::dot(s.data(), y.data(), n) > kCurvatureFloor) {
        s_hist.push_back(std::move(s));
        y_hist.push_back(std::move(y));
        if (static_cast<int>(s_hist.size()) > cfg.memory) {
          s_hist.erase(s_hist.begin());
          y_hist.erase(y_hist.begin());
        }
      }
      out.x = std::move(xn);
      out.f = fn;
      g = std::move(gn);
      out.iterations = it + 1;
      if (on_iterate) on_iterate(out.x, out.f);
    }
    out.status = LbfgsStatus::max_iterations;
  } catch (const NonFiniteObjective&) {
    out.status = LbfgsStatus::line_search_failure;
  }
  return out;
}

OptimResult optimize_with_restarts(Env& env, const LbfgsConfig& cfg, Rng& rng,
                                   long long call_budget) {
  validate(cfg);
  const EnvConfig& ecfg = env.config();
  OptimResult res;
  bool have_best = false;

  const Projection project = [&](std::vector<double>& x) {
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      x[i] = std::clamp(x[i], -ecfg.delta_limit, ecfg.delta_limit);
    x.back() = std::clamp(x.back(), kTimeFloor, ecfg.time_limit);
  };

  // Minimize the negative perceived fidelity; every evaluation is metered.
  const Objective fg = [&](const std::vector<double>& x,
                           std::vector<double>& g) -> double {
    if (env.calls_made() >= call_budget) throw BudgetExhausted{};
    const Controller c = unflatten(x);
    const Env::OracleEval ev = env.oracle_eval(c, rng);
    g.resize(ev.grad.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = -ev.grad[i];
    if (!have_best || ev.perceived > res.best_perceived) {
      have_best = true;
      res.best = c;
      res.best_perceived = ev.perceived;
      res.best_true = env.true_fidelity(c);
    }
    return -ev.perceived;
  };

  for (int r = 0; r < cfg.max_restarts; ++r) {
    if (env.calls_made() >= call_budget) break;
    res.restarts_used = r + 1;
    try {
      lbfgs_minimize(fg, flatten(env.reset(rng).controller), cfg, project);
    } catch (const BudgetExhausted&) {
      break;
    }
    if (!have_best) continue;
    if (cfg.noisy_mode) {
      if (env.calls_made() >= call_budget) break;
      // A fresh metered estimate of the incumbent decides convergence.
      if (env.reward_at(res.best, rng) >= cfg.threshold) {
        res.converged = true;
        break;
      }
    } else if (res.best_true >= cfg.threshold) {
      res.converged = true;
      break;
    }
  }
  res.env_calls = env.calls_made();
  return res;
}

}  // namespace spinctl
