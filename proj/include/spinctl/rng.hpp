#pragma once

// Deterministic random stream. All samplers are written out explicitly
// (instead of using <random> distributions, whose algorithms are
// implementation-defined) so a seed fixes every draw sequence across
// standard libraries and releases. The underlying engine state is
// serializable for checkpoints.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

namespace spinctl {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1): top 53 bits of one engine draw.
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]: never returns 0, so logs are safe.
  double uniform_pos() { return ((gen_() >> 11) + 1.0) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via the Box-Muller transform. Consumes exactly two
  // engine draws per call; no state is cached between calls.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Binomial draw as the literal count of m Bernoulli successes; exact and
  // fully specified at the cost of m uniforms.
  int binomial(int m, double p) {
    int k = 0;
    for (int i = 0; i < m; ++i) k += uniform() < p ? 1 : 0;
    return k;
  }

  std::string save_state() const {
    std::ostringstream os;
    os << gen_;
    return os.str();
  }

  void load_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace spinctl
