#include "spinctl/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace spinctl {

SymTridiag PerturbationDirection::to_matrix() const {
  SymTridiag p;
  p.diag.assign(entries.begin(), entries.begin() + n_spins);
  p.off.assign(entries.begin() + n_spins, entries.end());
  return p;
}

SymTridiag sample_structured_perturbation(int n_spins, double sigma,
                                          Rng& rng) {
  if (n_spins < 2) throw std::invalid_argument("need at least 2 spins");
  SymTridiag p;
  p.diag.resize(n_spins);
  p.off.resize(n_spins - 1);
  if (sigma == 0.0) return p;  // deterministic zero matrix, no draws
  for (auto& d : p.diag) d = rng.normal(0.0, sigma);
  for (auto& e : p.off) e = rng.normal(0.0, sigma);
  return p;
}

double coarse_grain_fidelity(double true_f, int shots, Rng& rng) {
  if (true_f < 0.0 || true_f > 1.0)
    throw std::invalid_argument("fidelity outside [0,1]");
  if (shots == 0) return true_f;
  return static_cast<double>(rng.binomial(shots, true_f)) / shots;
}

PerturbationDirection sample_sphere_direction(int n_spins, Rng& rng) {
  if (n_spins < 2) throw std::invalid_argument("need at least 2 spins");
  PerturbationDirection dir;
  dir.n_spins = n_spins;
  dir.entries.resize(2 * n_spins - 1);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : dir.entries) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 == 0.0);  // astronomically unlikely; keeps the contract
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : dir.entries) x *= inv;
  return dir;
}

SymTridiag perturbed_hamiltonian(const SymTridiag& h,
                                 const PerturbationDirection& dir,
                                 double strength) {
  if (h.size() != static_cast<std::size_t>(dir.n_spins))
    throw std::invalid_argument("perturbation dimension mismatch");
  SymTridiag out = h;
  for (int i = 0; i < dir.n_spins; ++i) out.diag[i] += strength * dir.entries[i];
  for (int i = 0; i + 1 < dir.n_spins; ++i)
    out.off[i] += strength * dir.entries[dir.n_spins + i];
  return out;
}

}  // namespace spinctl
