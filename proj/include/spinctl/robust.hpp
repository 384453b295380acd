#pragma once

// Robustness analysis of tuned controllers: Monte Carlo fidelity
// distributions under increasing structured-noise levels, box-plot
// summaries, perturbation-sphere fidelity curves with histogram density
// estimates, and rank correlation for degradation trends.

#include <vector>

#include "spinctl/chain.hpp"
#include "spinctl/noise.hpp"
#include "spinctl/rng.hpp"

namespace spinctl {

struct BoxStats {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;   // most extreme sample within 1.5 IQR of Q1
  double whisker_high = 0.0;  // most extreme sample within 1.5 IQR of Q3
  std::vector<double> outliers;  // sorted samples beyond the whisker fences
};

// Quartiles by linear interpolation on the sorted sample (the common
// spreadsheet/numpy default); Tukey 1.5 IQR whiskers. Throws
// std::invalid_argument on an empty sample.
BoxStats boxplot_stats(std::vector<double> samples);

struct FidelityDistribution {
  double sigma = 0.0;
  std::vector<double> samples;  // pooled over controllers and repeats
  BoxStats stats;
};

struct McraConfig {
  int n_levels = 10;       // noise levels sigma_max * k / (n_levels - 1)
  double sigma_max = 0.1;
  int repeats = 10;        // perturbation draws per controller per level
};

// For every noise level, each controller's chain is perturbed `repeats`
// times with a fresh structured draw and the exact fidelity of the
// perturbed system is recorded; samples pool across controllers into one
// distribution per level. Throws std::invalid_argument on an empty
// controller list or inconsistent config.
std::vector<FidelityDistribution> run_mcra(
    const std::vector<Controller>& controllers, const ChainSpec& spec,
    const McraConfig& cfg, Rng& rng);

struct SphereScanConfig {
  int n_directions = 1000;
  int n_strengths = 41;       // symmetric grid over [-max_strength, max_strength]
  double max_strength = 0.1;
  int n_bins = 50;            // histogram bins over fidelity in [0, 1]
};

struct SphereScan {
  std::vector<PerturbationDirection> directions;
  std::vector<double> strengths;  // ascending, strengths[i] = -strengths[n-1-i]
  // curves[d][s]: exact fidelity of H + strengths[s] * directions[d].
  std::vector<std::vector<double>> curves;
  // densities[s][b]: histogram density of all curves at strength s over
  // fidelity bins of width 1/n_bins; each row integrates to 1.
  std::vector<std::vector<double>> densities;
};

// Scans fidelity along uniformly random unit directions in the space of
// the Hamiltonian's free entries (biases and couplings).
SphereScan sphere_scan(const Controller& ctrl, const ChainSpec& spec,
                       const SphereScanConfig& cfg, Rng& rng);

// Same scan along caller-chosen directions; cfg.n_directions is ignored.
SphereScan sphere_scan_at(const Controller& ctrl, const ChainSpec& spec,
                          const std::vector<PerturbationDirection>& directions,
                          const SphereScanConfig& cfg);

// Fraction of directions whose central-difference fidelity slope at the
// controller, taken with perturbation step h, exceeds slope_tol, i.e.
// directions that improve fidelity at first order.
double improving_fraction(const Controller& ctrl, const ChainSpec& spec,
                          const std::vector<PerturbationDirection>& directions,
                          double h = 1e-4, double slope_tol = 1e-3);

// Spearman rank correlation with average ranks on ties. Returns 0 when
// either input is constant; throws std::invalid_argument on size mismatch
// or fewer than two points.
double spearman_rho(const std::vector<double>& a,
                    const std::vector<double>& b);

}  // namespace spinctl
