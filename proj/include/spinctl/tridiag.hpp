#pragma once

// Real symmetric tridiagonal matrices and their full eigendecomposition.
// The solver is the implicit-shift QL iteration with eigenvector
// accumulation, which is exact-arithmetic-stable for symmetric input and
// needs no external linear-algebra dependency.

#include <cstddef>
#include <vector>

namespace spinctl {

struct SymTridiag {
  std::vector<double> diag;  // n entries
  std::vector<double> off;   // n-1 entries; off[i] couples i and i+1

  std::size_t size() const { return diag.size(); }
  double at(std::size_t r, std::size_t c) const;
};

struct EigenSystem {
  std::size_t n = 0;
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // row-major: vectors[k * n + j] is component
                                // k of the eigenvector for values[j]

  double vec(std::size_t component, std::size_t which) const {
    return vectors[component * n + which];
  }
};

// Full eigendecomposition; eigenvalues ascending, eigenvector columns
// orthonormal to machine precision. Throws std::runtime_error if the QL
// iteration fails to deflate (not reachable for finite symmetric input).
EigenSystem eigendecompose(const SymTridiag& h);

}  // namespace spinctl
