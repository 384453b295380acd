#include "spinctl/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace spinctl::kern {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal_scalar(double alpha, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void gemv_scalar(const double* w, std::size_t rows, std::size_t cols,
                 const double* x, const double* bias, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias ? bias[r] : 0.0;
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

void gemv_t_acc_scalar(const double* w, std::size_t rows, std::size_t cols,
                       const double* g, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double* row = w + r * cols;
    const double gr = g[r];
    for (std::size_t c = 0; c < cols; ++c) y[c] += gr * row[c];
  }
}

void ger_acc_scalar(double alpha, const double* g, std::size_t rows,
                    const double* x, std::size_t cols, double* w) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = w + r * cols;
    const double ag = alpha * g[r];
    for (std::size_t c = 0; c < cols; ++c) row[c] += ag * x[c];
  }
}

void adam_step_scalar(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bias1, double bias2) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
    p[i] -= lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + eps);
  }
}

const detail::Ops* g_active = nullptr;
Backend g_backend = Backend::scalar;

void init_default() {
  if (g_active) return;
#if defined(SPINCTL_HAVE_AVX2)
  if (backend_available(Backend::avx2)) {
    g_active = &detail::avx2_ops();
    g_backend = Backend::avx2;
    return;
  }
#endif
  g_active = &detail::scalar_ops();
  g_backend = Backend::scalar;
}

const detail::Ops& ops() {
  init_default();
  return *g_active;
}

}  // namespace

namespace detail {
const Ops& scalar_ops() {
  static const Ops table = {dot_scalar,        axpy_scalar,    scal_scalar,
                            gemv_scalar,       gemv_t_acc_scalar,
                            ger_acc_scalar,    adam_step_scalar};
  return table;
}
}  // namespace detail

bool backend_available(Backend b) {
  if (b == Backend::scalar) return true;
#if defined(SPINCTL_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() {
  init_default();
  return g_backend;
}

void set_backend(Backend b) {
  if (!backend_available(b))
    throw std::invalid_argument("kernel backend not available on this host");
  if (b == Backend::scalar) {
    g_active = &detail::scalar_ops();
  } else {
#if defined(SPINCTL_HAVE_AVX2)
    g_active = &detail::avx2_ops();
#endif
  }
  g_backend = b;
}

const char* backend_name(Backend b) {
  return b == Backend::scalar ? "scalar" : "avx2";
}

Backend parse_backend(const std::string& name) {
  if (name == "scalar") return Backend::scalar;
  if (name == "avx2") return Backend::avx2;
  throw std::invalid_argument("unknown kernel backend: " + name);
}

double dot(const double* a, const double* b, std::size_t n) {
  return ops().dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  ops().axpy(alpha, x, y, n);
}
void scal(double alpha, double* x, std::size_t n) { ops().scal(alpha, x, n); }
void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x,
          const double* bias, double* y) {
  ops().gemv(w, rows, cols, x, bias, y);
}
void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols,
                const double* g, double* y) {
  ops().gemv_t_acc(w, rows, cols, g, y);
}
void ger_acc(double alpha, const double* g, std::size_t rows, const double* x,
             std::size_t cols, double* w) {
  ops().ger_acc(alpha, g, rows, x, cols, w);
}
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps, double bias1,
               double bias2) {
  ops().adam_step(p, g, m, v, n, lr, beta1, beta2, eps, bias1, bias2);
}

void tanh_vec(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

}  // namespace spinctl::kern
