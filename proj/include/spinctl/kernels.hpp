#pragma once

// Dense linear-algebra primitives used by the network trainer and the
// optimizers. Every operation has a scalar reference implementation and,
// on x86-64 hardware with AVX2+FMA, a vectorized variant. The backend is
// chosen at runtime; both variants compute the same quantities but may
// differ in floating-point reduction order, so cross-backend comparisons
// are tolerance-based, never bitwise.

#include <cstddef>
#include <string>

namespace spinctl::kern {

enum class Backend { scalar, avx2 };

// Maps "scalar" or "avx2" to the enum; throws std::invalid_argument on
// anything else.
Backend parse_backend(const std::string& name);

// True if the named backend can run on this machine (scalar always can).
bool backend_available(Backend b);

// Backend used by all kernel calls. Defaults to the fastest available.
Backend active_backend();

// Selects the backend for subsequent calls. Throws std::invalid_argument
// if the backend is not available on this machine.
void set_backend(Backend b);

const char* backend_name(Backend b);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// y[i] += alpha * x[i]
void axpy(double alpha, const double* x, double* y, std::size_t n);

// x[i] *= alpha
void scal(double alpha, double* x, std::size_t n);

// Dense row-major matrix-vector product: y = W x + bias.
// W is rows x cols; bias may be nullptr (treated as zero).
void gemv(const double* w, std::size_t rows, std::size_t cols,
          const double* x, const double* bias, double* y);

// Transposed accumulation: y[j] += sum_i W[i][j] * g[i]. Backpropagates a
// row-space vector g into the column space of the same row-major W.
void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                const double* g, double* y);

// Rank-one accumulation: W[i][j] += alpha * g[i] * x[j].
void ger_acc(double alpha, const double* g, std::size_t rows,
             const double* x, std::size_t cols, double* w);

// One adaptive-moment step over a parameter buffer:
//   m = beta1 m + (1-beta1) g,  v = beta2 v + (1-beta2) g^2,
//   p -= lr * (m / bias1) / (sqrt(v / bias2) + eps).
// bias1/bias2 are the caller-computed corrections 1 - beta^t.
void adam_step(double* p, const double* g, double* m, double* v,
               std::size_t n, double lr, double beta1, double beta2,
               double eps, double bias1, double bias2);

// y[i] = tanh(x[i]). Both backends evaluate std::tanh element-wise so the
// nonlinearity is bit-identical across backends; only reductions differ.
void tanh_vec(const double* x, double* y, std::size_t n);

namespace detail {
struct Ops {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*scal)(double, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*,
               const double*, double*);
  void (*gemv_t_acc)(const double*, std::size_t, std::size_t, const double*,
                     double*);
  void (*ger_acc)(double, const double*, std::size_t, const double*,
                  std::size_t, double*);
  void (*adam_step)(double*, const double*, double*, double*, std::size_t,
                    double, double, double, double, double, double);
};
const Ops& scalar_ops();
#if defined(SPINCTL_HAVE_AVX2)
const Ops& avx2_ops();
#endif
}  // namespace detail

}  // namespace spinctl::kern
