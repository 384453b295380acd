#pragma once

// Single-excitation dynamics of an XX spin chain under static on-site bias
// control. In this subspace the Hamiltonian is an N x N real symmetric
// tridiagonal matrix (hbar = 1 throughout; frequencies in rad/s, times in
// s): bias fields on the diagonal, exchange couplings on the off-diagonals.
// Propagation and the analytic fidelity gradient both go through one
// spectral decomposition, so a gradient costs the same as a value.

#include <complex>
#include <vector>

#include "spinctl/tridiag.hpp"

namespace spinctl {

inline constexpr double kDeltaLimit = 10.0;  // |bias| bound, rad/s
inline constexpr double kTimeLimit = 30.0;   // readout-time bound, s

struct ChainSpec {
  int n_spins = 0;
  std::vector<double> couplings;  // n_spins - 1 entries
  int source = 0;                 // site initially excited
  int target = 0;                 // site read out

  static ChainSpec uniform(int n, int source, int target);
  void validate() const;  // throws std::invalid_argument on inconsistency
};

struct Controller {
  std::vector<double> delta;  // per-site bias, each in [-10, 10]
  double read_time = 1.0;     // in (0, 30]
};

// Diagonal = ctrl.delta, off-diagonals = spec.couplings.
SymTridiag build_hamiltonian(const ChainSpec& spec, const Controller& ctrl);

// psi(t) = V e^{-i lambda t} V^T psi0. psi0 must be normalized within
// 1e-12 (throws std::invalid_argument otherwise). Norm is preserved.
std::vector<std::complex<double>> evolve_state(
    const EigenSystem& es, double t,
    const std::vector<std::complex<double>>& psi0);

// |<target| e^{-iHt} |source>|^2 for an arbitrary symmetric tridiagonal
// Hamiltonian. Clamped into [0,1] against last-digit roundoff.
double transfer_fidelity(const SymTridiag& h, int source, int target,
                         double t);

double fidelity(const ChainSpec& spec, const Controller& ctrl);

// Fidelity and its gradient with respect to the control coordinates
// (delta_1..delta_N, T), computed spectrally: the bias derivatives come
// from the divided-difference (Loewner) matrix of e^{-i lambda T}, with
// the confluent limit -iT e^{-i lambda T} when |lambda_k - lambda_l| <
// 1e-10.
struct ControlGradient {
  double value = 0.0;
  std::vector<double> grad;  // size N+1, time derivative last
};
ControlGradient fidelity_with_gradient(const ChainSpec& spec,
                                       const Controller& ctrl);

// Gradient over the full landscape coordinates: biases, couplings, and
// time. Used for stationarity diagnostics of perturbation scans, where
// directions move coupling entries as well.
struct LandscapeGradient {
  double value = 0.0;
  std::vector<double> d_delta;     // size N
  std::vector<double> d_coupling;  // size N-1
  double d_time = 0.0;
};
LandscapeGradient fidelity_landscape_gradient(const ChainSpec& spec,
                                              const Controller& ctrl);

}  // namespace spinctl
