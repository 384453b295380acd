#pragma once

// The two stochastic corruptions a controller can face, plus the sampler
// for perturbation-sphere scans. Structured noise perturbs the Hamiltonian
// itself (parameter uncertainty); coarse-graining replaces the exact
// fidelity with a finite-shot measurement estimate.

#include "spinctl/rng.hpp"
#include "spinctl/tridiag.hpp"

namespace spinctl {

struct NoiseConfig {
  double sigma_noise = 0.0;  // std-dev of each perturbation entry
  int shots = 0;             // measurement shots; 0 means exact readout

  bool noiseless() const { return sigma_noise == 0.0 && shots == 0; }
};

// Unit vector over the 2N-1 free entries of a symmetric tridiagonal
// matrix: N diagonal entries first, then the N-1 off-diagonal entries.
struct PerturbationDirection {
  int n_spins = 0;
  std::vector<double> entries;  // size 2N-1, Euclidean norm 1

  SymTridiag to_matrix() const;
};

// Symmetric tridiagonal matrix whose 2N-1 free entries are i.i.d.
// normal(0, sigma^2); the off-diagonal is mirrored by construction.
SymTridiag sample_structured_perturbation(int n_spins, double sigma, Rng& rng);

// Exact fidelity if shots == 0; otherwise k/shots with k counted from
// `shots` Bernoulli trials at success probability true_f.
double coarse_grain_fidelity(double true_f, int shots, Rng& rng);

// Uniform direction on the unit sphere in dimension 2N-1 (normalized
// standard normal vector).
PerturbationDirection sample_sphere_direction(int n_spins, Rng& rng);

// H + strength * P(dir); dimensions must agree.
SymTridiag perturbed_hamiltonian(const SymTridiag& h,
                                 const PerturbationDirection& dir,
                                 double strength);

}  // namespace spinctl
