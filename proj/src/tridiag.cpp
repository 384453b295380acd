#include "spinctl/tridiag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spinctl {

double SymTridiag::at(std::size_t r, std::size_t c) const {
  if (r == c) return diag[r];
  const std::size_t lo = std::min(r, c);
  if (std::max(r, c) - lo == 1) return off[lo];
  return 0.0;
}

EigenSystem eigendecompose(const SymTridiag& h) {
  const std::size_t n = h.size();
  if (n == 0) throw std::invalid_argument("empty matrix");
  if (h.off.size() + 1 != n)
    throw std::invalid_argument("off-diagonal length must be n-1");

  EigenSystem es;
  es.n = n;
  std::vector<double> d = h.diag;
  std::vector<double> e(n, 0.0);
  std::copy(h.off.begin(), h.off.end(), e.begin());  // e[n-1] stays 0
  std::vector<double>& z = es.vectors;
  z.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw std::runtime_error("QL iteration failed to converge");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        bool deflated_early = false;
        for (std::size_t i1 = m; i1-- > l;) {
          double f = s * e[i1];
          const double b = c * e[i1];
          r = std::hypot(f, g);
          e[i1 + 1] = r;
          if (r == 0.0) {  // deflate early to recover orthogonality
            d[i1 + 1] -= p;
            e[m] = 0.0;
            deflated_early = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i1 + 1] - p;
          r = (d[i1] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i1 + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < n; ++k) {
            f = z[k * n + i1 + 1];
            z[k * n + i1 + 1] = s * z[k * n + i1] + c * f;
            z[k * n + i1] = c * z[k * n + i1] - s * f;
          }
        }
        if (deflated_early) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }

  // Sort eigenpairs ascending, permuting eigenvector columns alongside.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  es.values.resize(n);
  std::vector<double> sorted(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    es.values[j] = d[order[j]];
    for (std::size_t k = 0; k < n; ++k)
      sorted[k * n + j] = z[k * n + order[j]];
  }
  es.vectors = std::move(sorted);
  return es;
}

}  // namespace spinctl
