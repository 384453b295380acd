#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "spinctl/robust.hpp"

using namespace spinctl;

TEST_CASE("box statistics of one-to-five") {
  const auto s = boxplot_stats({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.q1 == doctest::Approx(2.0));
  CHECK(s.q3 == doctest::Approx(4.0));
  CHECK(s.whisker_low == doctest::Approx(1.0));
  CHECK(s.whisker_high == doctest::Approx(5.0));
  CHECK(s.outliers.empty());
}

TEST_CASE("box statistics are order-insensitive") {
  const auto a = boxplot_stats({5.0, 1.0, 4.0, 2.0, 3.0});
  const auto b = boxplot_stats({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(a.median == b.median);
  CHECK(a.q1 == b.q1);
  CHECK(a.q3 == b.q3);
  CHECK(a.whisker_low == b.whisker_low);
  CHECK(a.whisker_high == b.whisker_high);
}

TEST_CASE("box statistics of a constant sample collapse to the value") {
  const auto s = boxplot_stats(std::vector<double>(12, 0.7));
  CHECK(s.median == 0.7);
  CHECK(s.q1 == 0.7);
  CHECK(s.q3 == 0.7);
  CHECK(s.whisker_low == 0.7);
  CHECK(s.whisker_high == 0.7);
  CHECK(s.outliers.empty());
}

TEST_CASE("a lone extreme sample is flagged as an outlier") {
  std::vector<double> x(9, 0.0);
  x.push_back(1.0);
  const auto s = boxplot_stats(x);
  CHECK(s.median == 0.0);
  CHECK(s.q1 == 0.0);
  CHECK(s.q3 == 0.0);
  CHECK(s.whisker_low == 0.0);
  CHECK(s.whisker_high == 0.0);
  REQUIRE(s.outliers.size() == 1);
  CHECK(s.outliers[0] == 1.0);
}

TEST_CASE("box statistics reject an empty sample") {
  CHECK_THROWS_AS(boxplot_stats({}), std::invalid_argument);
}

TEST_CASE("box quartiles are ordered and whiskers bracket the box") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(1 + static_cast<int>(rng.raw() % 40));
    for (auto& v : x) v = rng.uniform(0.0, 1.0);
    const auto s = boxplot_stats(x);
    CHECK(s.q1 <= s.median);
    CHECK(s.median <= s.q3);
    CHECK(s.whisker_low <= s.q1);
    CHECK(s.whisker_high >= s.q3);
    for (double o : s.outliers) {
      const bool beyond = o < s.q1 - 1.5 * (s.q3 - s.q1) ||
                          o > s.q3 + 1.5 * (s.q3 - s.q1);
      CHECK(beyond);
    }
  }
}

TEST_CASE("mcra emits the evenly spaced noise ladder") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.0, 0.0, 0.0};
  ctrl.read_time = std::numbers::pi / std::sqrt(2.0);
  Rng rng(5);
  const auto dists = run_mcra({ctrl}, spec, McraConfig{}, rng);
  REQUIRE(dists.size() == 10);
  for (int k = 0; k < 10; ++k)
    CHECK(dists[k].sigma == doctest::Approx(0.1 * k / 9.0).epsilon(1e-15));
  CHECK(dists.front().sigma == 0.0);
  CHECK(dists.back().sigma == doctest::Approx(0.1));
}

TEST_CASE("mcra pools controllers-times-repeats samples per level") {
  const ChainSpec spec = ChainSpec::uniform(4, 0, 2);
  Rng rng(8);
  std::vector<Controller> ctrls(7);
  for (auto& c : ctrls) {
    c.delta = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
               rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    c.read_time = rng.uniform(1.0, 20.0);
  }
  McraConfig cfg;
  cfg.repeats = 4;
  const auto dists = run_mcra(ctrls, spec, cfg, rng);
  for (const auto& d : dists) {
    CHECK(d.samples.size() == 7 * 4);
    for (double f : d.samples) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
    CHECK(d.stats.q1 <= d.stats.median);
    CHECK(d.stats.median <= d.stats.q3);
  }
}

TEST_CASE("the zero-noise level is a point mass at the true fidelity") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.3, -0.2, 0.5};
  ctrl.read_time = 4.0;
  const double f = fidelity(spec, ctrl);
  Rng rng(2);
  const auto dists = run_mcra({ctrl}, spec, McraConfig{}, rng);
  for (double s : dists[0].samples) CHECK(s == doctest::Approx(f).epsilon(1e-14));
  CHECK(dists[0].stats.median == doctest::Approx(f).epsilon(1e-14));
  CHECK(dists[0].stats.outliers.empty());
}

TEST_CASE("mcra rejects an empty controller list and bad configs") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Rng rng(1);
  CHECK_THROWS_AS(run_mcra({}, spec, McraConfig{}, rng),
                  std::invalid_argument);
  Controller ctrl;
  ctrl.delta = {0.0, 0.0, 0.0};
  McraConfig bad;
  bad.repeats = 0;
  CHECK_THROWS_AS(run_mcra({ctrl}, spec, bad, rng), std::invalid_argument);
  bad = McraConfig{};
  bad.sigma_max = -0.1;
  CHECK_THROWS_AS(run_mcra({ctrl}, spec, bad, rng), std::invalid_argument);
}

TEST_CASE("sphere scan agrees with the unperturbed fidelity at zero") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.4, 0.0, -0.4};
  ctrl.read_time = 3.5;
  SphereScanConfig cfg;
  cfg.n_directions = 64;
  Rng rng(12);
  const auto scan = sphere_scan(ctrl, spec, cfg, rng);
  REQUIRE(scan.directions.size() == 64);
  REQUIRE(scan.curves.size() == 64);
  REQUIRE(scan.strengths.size() == 41);
  CHECK(scan.strengths.front() == doctest::Approx(-0.1));
  CHECK(scan.strengths.back() == doctest::Approx(0.1));
  const std::size_t zero_idx = 20;
  CHECK(scan.strengths[zero_idx] == 0.0);
  const double f = fidelity(spec, ctrl);
  for (const auto& curve : scan.curves) {
    REQUIRE(curve.size() == 41);
    CHECK(curve[zero_idx] == scan.curves[0][zero_idx]);
    CHECK(curve[zero_idx] == doctest::Approx(f).epsilon(1e-14));
    for (double v : curve) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  for (const auto& d : scan.directions) {
    REQUIRE(d.entries.size() == 5);
    double n2 = 0.0;
    for (double e : d.entries) n2 += e * e;
    CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("opposite directions trace mirrored curves") {
  const ChainSpec spec = ChainSpec::uniform(4, 0, 3);
  Controller ctrl;
  ctrl.delta = {0.1, -0.7, 0.2, 0.9};
  ctrl.read_time = 7.0;
  Rng rng(21);
  PerturbationDirection d = sample_sphere_direction(4, rng);
  PerturbationDirection neg = d;
  for (double& e : neg.entries) e = -e;
  const auto scan = sphere_scan_at(ctrl, spec, {d, neg}, SphereScanConfig{});
  const std::size_t n = scan.strengths.size();
  for (std::size_t s = 0; s < n; ++s) {
    CHECK(scan.strengths[s] == -scan.strengths[n - 1 - s]);
    CHECK(scan.curves[0][s] == scan.curves[1][n - 1 - s]);
  }
}

TEST_CASE("densities are normalized histograms of the curve ensemble") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.0, 1.0, 0.0};
  ctrl.read_time = 2.0;
  SphereScanConfig cfg;
  cfg.n_directions = 50;
  Rng rng(9);
  const auto scan = sphere_scan(ctrl, spec, cfg, rng);
  REQUIRE(scan.densities.size() == scan.strengths.size());
  const double width = 1.0 / cfg.n_bins;
  for (const auto& row : scan.densities) {
    REQUIRE(row.size() == static_cast<std::size_t>(cfg.n_bins));
    double mass = 0.0;
    for (double v : row) {
      CHECK(v >= 0.0);
      mass += v * width;
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
  // At zero strength every curve coincides, so the whole mass sits in the
  // single bin holding the unperturbed fidelity.
  const auto& zero_row = scan.densities[20];
  int occupied = 0;
  for (double v : zero_row)
    if (v > 0.0) ++occupied;
  CHECK(occupied == 1);
}

TEST_CASE("a perfect-transfer controller is stationary in all directions") {
  // At an exact fidelity-1 point the landscape gradient vanishes in every
  // coordinate, couplings included, so no perturbation direction can help
  // at first order.
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.0, 0.0, 0.0};
  ctrl.read_time = std::numbers::pi / std::sqrt(2.0);
  REQUIRE(fidelity(spec, ctrl) == doctest::Approx(1.0).epsilon(1e-12));

  const auto lg = fidelity_landscape_gradient(spec, ctrl);
  for (double g : lg.d_delta) CHECK(std::abs(g) <= 1e-7);
  for (double g : lg.d_coupling) CHECK(std::abs(g) <= 1e-7);

  const SymTridiag h = build_hamiltonian(spec, ctrl);
  Rng rng(40);
  const double hstep = 1e-4;
  for (int trial = 0; trial < 200; ++trial) {
    const auto dir = sample_sphere_direction(3, rng);
    const double fp = transfer_fidelity(perturbed_hamiltonian(h, dir, hstep),
                                        0, 2, ctrl.read_time);
    const double fm = transfer_fidelity(perturbed_hamiltonian(h, dir, -hstep),
                                        0, 2, ctrl.read_time);
    CHECK(std::abs(fp - fm) / (2.0 * hstep) <= 1e-4);
  }
}

TEST_CASE("improving-direction fraction separates maxima from slopes") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Rng rng(14);
  std::vector<PerturbationDirection> dirs;
  for (int i = 0; i < 200; ++i) dirs.push_back(sample_sphere_direction(3, rng));

  Controller peak;
  peak.delta = {0.0, 0.0, 0.0};
  peak.read_time = std::numbers::pi / std::sqrt(2.0);
  CHECK(improving_fraction(peak, spec, dirs) == 0.0);

  // Away from any maximum the landscape gradient is nonzero, so a healthy
  // share of random directions improves at first order.
  Controller slope;
  slope.delta = {1.0, 0.0, 0.0};
  slope.read_time = 2.0;
  CHECK(improving_fraction(slope, spec, dirs) > 0.2);
  CHECK_THROWS_AS(improving_fraction(peak, spec, {}), std::invalid_argument);
}

TEST_CASE("rank correlation matches known orderings") {
  CHECK(spearman_rho({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3, 4}, {8, 6, 4, 2}) == doctest::Approx(-1.0));
  // Monotone but nonlinear relations still rank perfectly.
  CHECK(spearman_rho({1, 2, 3, 4, 5}, {1, 4, 9, 16, 25}) ==
        doctest::Approx(1.0));
  CHECK(spearman_rho({1, 2, 3}, {5, 5, 5}) == 0.0);
  CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(spearman_rho({1}, {1}), std::invalid_argument);
}

TEST_CASE("rank correlation averages tied ranks") {
  // x = {1, 2, 2, 4} has ranks {1, 2.5, 2.5, 4}; against y = {1, 2, 3, 4}
  // (ranks {1,2,3,4}) the Pearson correlation of ranks is 0.9832...
  const double rho = spearman_rho({1, 2, 2, 4}, {1, 2, 3, 4});
  // Hand computation: centered x-ranks {-1.5, 0, 0, 1.5}, y {-1.5,-0.5,0.5,1.5};
  // rho = 4.5 / sqrt(4.5 * 5) = 0.9486832...
  CHECK(rho == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)).epsilon(1e-12));
}

TEST_CASE("noise degradation shows a non-positive fidelity trend") {
  const ChainSpec spec = ChainSpec::uniform(3, 0, 2);
  Controller ctrl;
  ctrl.delta = {0.0, 0.0, 0.0};
  ctrl.read_time = std::numbers::pi / std::sqrt(2.0);
  Rng rng(77);
  McraConfig cfg;
  cfg.repeats = 50;
  const auto dists = run_mcra({ctrl}, spec, cfg, rng);
  std::vector<double> sigmas, medians;
  for (const auto& d : dists) {
    sigmas.push_back(d.sigma);
    medians.push_back(d.stats.median);
  }
  CHECK(spearman_rho(sigmas, medians) <= 0.0);
  CHECK(dists[0].stats.median == doctest::Approx(1.0).epsilon(1e-12));
}
