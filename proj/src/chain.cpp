#include "spinctl/chain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spinctl {

namespace {

using cplx = std::complex<double>;

struct Spectral {
  EigenSystem es;
  std::vector<cplx> phases;   // e^{-i lambda_k t}
  cplx amplitude{0.0, 0.0};   // sum_k V[tgt,k] V[src,k] e^{-i lambda_k t}
};

Spectral decompose(const SymTridiag& h, int source, int target, double t) {
  Spectral sp;
  sp.es = eigendecompose(h);
  const std::size_t n = sp.es.n;
  sp.phases.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -sp.es.values[k] * t;
    sp.phases[k] = cplx(std::cos(a), std::sin(a));
    sp.amplitude += sp.es.vec(target, k) * sp.es.vec(source, k) * sp.phases[k];
  }
  return sp;
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// Divided differences of e^{-i lambda t}: G[k][l] = (ph_k - ph_l) /
// (lam_k - lam_l), with the confluent limit -i t ph_k on near-degenerate
// pairs. This is the derivative kernel of the matrix exponential in the
// eigenbasis.
std::vector<cplx> loewner(const std::vector<double>& lam,
                          const std::vector<cplx>& ph, double t) {
  const std::size_t n = lam.size();
  std::vector<cplx> g(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l = 0; l < n; ++l) {
      const double dl = lam[k] - lam[l];
      g[k * n + l] = std::abs(dl) < 1e-10 ? cplx(0.0, -t) * ph[k]
                                          : (ph[k] - ph[l]) / dl;
    }
  }
  return g;
}

}  // namespace

ChainSpec ChainSpec::uniform(int n, int source, int target) {
  ChainSpec s;
  s.n_spins = n;
  s.couplings.assign(n > 0 ? n - 1 : 0, 1.0);
  s.source = source;
  s.target = target;
  s.validate();
  return s;
}

void ChainSpec::validate() const {
  if (n_spins < 1) throw std::invalid_argument("chain needs at least 1 spin");
  if (couplings.size() + 1 != static_cast<std::size_t>(n_spins))
    throw std::invalid_argument("couplings length must be n_spins - 1");
  if (source < 0 || source >= n_spins || target < 0 || target >= n_spins)
    throw std::invalid_argument("source/target site out of range");
}

SymTridiag build_hamiltonian(const ChainSpec& spec, const Controller& ctrl) {
  spec.validate();
  if (ctrl.delta.size() != static_cast<std::size_t>(spec.n_spins))
    throw std::invalid_argument("bias vector length must equal n_spins");
  return SymTridiag{ctrl.delta, spec.couplings};
}

std::vector<cplx> evolve_state(const EigenSystem& es, double t,
                               const std::vector<cplx>& psi0) {
  const std::size_t n = es.n;
  if (psi0.size() != n) throw std::invalid_argument("state length mismatch");
  double norm2 = 0.0;
  for (const auto& c : psi0) norm2 += std::norm(c);
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-12)
    throw std::invalid_argument("input state must be normalized");
  // coeffs = V^T psi0, then psi = V (phases . coeffs)
  std::vector<cplx> coeffs(n, cplx(0.0, 0.0));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i) coeffs[k] += es.vec(i, k) * psi0[i];
  for (std::size_t k = 0; k < n; ++k) {
    const double a = -es.values[k] * t;
    coeffs[k] *= cplx(std::cos(a), std::sin(a));
  }
  std::vector<cplx> out(n, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) out[i] += es.vec(i, k) * coeffs[k];
  return out;
}

double transfer_fidelity(const SymTridiag& h, int source, int target,
                         double t) {
  const Spectral sp = decompose(h, source, target, t);
  return clamp01(std::norm(sp.amplitude));
}

double fidelity(const ChainSpec& spec, const Controller& ctrl) {
  return transfer_fidelity(build_hamiltonian(spec, ctrl), spec.source,
                           spec.target, ctrl.read_time);
}

LandscapeGradient fidelity_landscape_gradient(const ChainSpec& spec,
                                              const Controller& ctrl) {
  const SymTridiag h = build_hamiltonian(spec, ctrl);
  const double t = ctrl.read_time;
  const Spectral sp = decompose(h, spec.source, spec.target, t);
  const std::size_t n = sp.es.n;
  const cplx a_conj = std::conj(sp.amplitude);

  LandscapeGradient out;
  out.value = clamp01(std::norm(sp.amplitude));
  out.d_delta.assign(n, 0.0);
  out.d_coupling.assign(n - 1, 0.0);

  // dF/dt from da/dt = sum_k w_k (-i lambda_k) e^{-i lambda_k t}.
  cplx da_dt(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx w = sp.es.vec(spec.target, k) * sp.es.vec(spec.source, k) *
                   sp.phases[k];
    da_dt += w * cplx(0.0, -sp.es.values[k]);
  }
  out.d_time = 2.0 * std::real(a_conj * da_dt);

  // For a Hamiltonian direction W, da = sum_{kl} t_k s_l G_{kl} (v_k^T W
  // v_l). Precompute M_{kl} = t_k s_l G_{kl}; each parameter then costs one
  // small quadratic form in the eigenvector components it touches.
  const std::vector<cplx> g = loewner(sp.es.values, sp.phases, t);
  std::vector<cplx> m(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tk = sp.es.vec(spec.target, k);
    for (std::size_t l = 0; l < n; ++l)
      m[k * n + l] = tk * sp.es.vec(spec.source, l) * g[k * n + l];
  }
  for (std::size_t site = 0; site < n; ++site) {
    cplx da(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double vk = sp.es.vec(site, k);
      for (std::size_t l = 0; l < n; ++l)
        da += m[k * n + l] * vk * sp.es.vec(site, l);
    }
    out.d_delta[site] = 2.0 * std::real(a_conj * da);
  }
  for (std::size_t c = 0; c + 1 < n; ++c) {
    cplx da(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double vck = sp.es.vec(c, k);
      const double vc1k = sp.es.vec(c + 1, k);
      for (std::size_t l = 0; l < n; ++l)
        da += m[k * n + l] *
              (vck * sp.es.vec(c + 1, l) + vc1k * sp.es.vec(c, l));
    }
    out.d_coupling[c] = 2.0 * std::real(a_conj * da);
  }
  return out;
}

ControlGradient fidelity_with_gradient(const ChainSpec& spec,
                                       const Controller& ctrl) {
  const LandscapeGradient lg = fidelity_landscape_gradient(spec, ctrl);
  ControlGradient out;
  out.value = lg.value;
  out.grad = lg.d_delta;
  out.grad.push_back(lg.d_time);
  return out;
}

}  // namespace spinctl
