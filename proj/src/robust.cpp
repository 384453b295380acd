#include "spinctl/robust.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

namespace spinctl {

namespace {

// Linear-interpolation quantile of an already sorted sample.
double quantile_sorted(const std::vector<double>& x, double p) {
  const std::size_t n = x.size();
  if (n == 1) return x[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return x[n - 1];
  return x[lo] + (h - static_cast<double>(lo)) * (x[lo + 1] - x[lo]);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

BoxStats boxplot_stats(std::vector<double> samples) {
  if (samples.empty())
    throw std::invalid_argument("boxplot_stats needs at least one sample");
  std::sort(samples.begin(), samples.end());
  BoxStats s;
  s.q1 = quantile_sorted(samples, 0.25);
  s.median = quantile_sorted(samples, 0.5);
  s.q3 = quantile_sorted(samples, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  for (double v : samples) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
    } else {
      s.whisker_low = std::min(s.whisker_low, v);
      s.whisker_high = std::max(s.whisker_high, v);
    }
  }
  return s;
}

std::vector<FidelityDistribution> run_mcra(
    const std::vector<Controller>& controllers, const ChainSpec& spec,
    const McraConfig& cfg, Rng& rng) {
  if (controllers.empty())
    throw std::invalid_argument("run_mcra needs at least one controller");
  if (cfg.n_levels < 1 || cfg.repeats < 1 || cfg.sigma_max < 0.0)
    throw std::invalid_argument("inconsistent robustness configuration");
  spec.validate();

  std::vector<FidelityDistribution> out(cfg.n_levels);
  for (int k = 0; k < cfg.n_levels; ++k) {
    FidelityDistribution& dist = out[k];
    dist.sigma = cfg.n_levels == 1 ? 0.0
                                   : cfg.sigma_max * static_cast<double>(k) /
                                         static_cast<double>(cfg.n_levels - 1);
    dist.samples.reserve(controllers.size() *
                         static_cast<std::size_t>(cfg.repeats));
    for (const Controller& ctrl : controllers) {
      const SymTridiag h = build_hamiltonian(spec, ctrl);
      for (int rep = 0; rep < cfg.repeats; ++rep) {
        SymTridiag hp =
            sample_structured_perturbation(spec.n_spins, dist.sigma, rng);
        for (int i = 0; i < spec.n_spins; ++i) hp.diag[i] += h.diag[i];
        for (int i = 0; i + 1 < spec.n_spins; ++i) hp.off[i] += h.off[i];
        dist.samples.push_back(
            transfer_fidelity(hp, spec.source, spec.target, ctrl.read_time));
      }
    }
    dist.stats = boxplot_stats(dist.samples);
  }
  return out;
}

SphereScan sphere_scan_at(const Controller& ctrl, const ChainSpec& spec,
                          const std::vector<PerturbationDirection>& directions,
                          const SphereScanConfig& cfg) {
  if (directions.empty())
    throw std::invalid_argument("sphere scan needs at least one direction");
  if (cfg.n_strengths < 2 || cfg.max_strength <= 0.0 || cfg.n_bins < 1)
    throw std::invalid_argument("inconsistent sphere-scan configuration");
  spec.validate();

  SphereScan scan;
  scan.directions = directions;
  scan.strengths.resize(cfg.n_strengths);
  const int m = cfg.n_strengths - 1;
  // Built so that strengths[i] == -strengths[m - i] exactly; an odd point
  // count therefore includes 0.
  for (int i = 0; i <= m; ++i)
    scan.strengths[i] =
        cfg.max_strength * static_cast<double>(2 * i - m) / m;

  const SymTridiag h = build_hamiltonian(spec, ctrl);
  scan.curves.resize(directions.size());
  for (std::size_t d = 0; d < directions.size(); ++d) {
    auto& curve = scan.curves[d];
    curve.resize(scan.strengths.size());
    for (std::size_t s = 0; s < scan.strengths.size(); ++s) {
      const SymTridiag hp =
          perturbed_hamiltonian(h, directions[d], scan.strengths[s]);
      curve[s] =
          transfer_fidelity(hp, spec.source, spec.target, ctrl.read_time);
    }
  }

  const double width = 1.0 / cfg.n_bins;
  scan.densities.assign(scan.strengths.size(),
                        std::vector<double>(cfg.n_bins, 0.0));
  for (std::size_t s = 0; s < scan.strengths.size(); ++s) {
    for (const auto& curve : scan.curves) {
      const int bin = std::min(cfg.n_bins - 1,
                               static_cast<int>(curve[s] * cfg.n_bins));
      scan.densities[s][bin] += 1.0;
    }
    for (double& v : scan.densities[s])
      v /= static_cast<double>(scan.curves.size()) * width;
  }
  return scan;
}

SphereScan sphere_scan(const Controller& ctrl, const ChainSpec& spec,
                       const SphereScanConfig& cfg, Rng& rng) {
  if (cfg.n_directions < 1)
    throw std::invalid_argument("sphere scan needs at least one direction");
  std::vector<PerturbationDirection> dirs;
  dirs.reserve(cfg.n_directions);
  for (int d = 0; d < cfg.n_directions; ++d)
    dirs.push_back(sample_sphere_direction(spec.n_spins, rng));
  return sphere_scan_at(ctrl, spec, dirs, cfg);
}

double improving_fraction(const Controller& ctrl, const ChainSpec& spec,
                          const std::vector<PerturbationDirection>& directions,
                          double h, double slope_tol) {
  if (directions.empty())
    throw std::invalid_argument("improving_fraction needs directions");
  spec.validate();
  const SymTridiag ham = build_hamiltonian(spec, ctrl);
  int improving = 0;
  for (const auto& dir : directions) {
    const double fp = transfer_fidelity(perturbed_hamiltonian(ham, dir, h),
                                        spec.source, spec.target,
                                        ctrl.read_time);
    const double fm = transfer_fidelity(perturbed_hamiltonian(ham, dir, -h),
                                        spec.source, spec.target,
                                        ctrl.read_time);
    if ((fp - fm) / (2.0 * h) > slope_tol) ++improving;
  }
  return static_cast<double>(improving) / static_cast<double>(directions.size());
}

double spearman_rho(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument(
        "rank correlation needs two equal-length samples of size >= 2");
  const std::vector<double> ra = average_ranks(a);
  const std::vector<double> rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = ra[i] - ma, db = rb[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace spinctl
