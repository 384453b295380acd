#include "spinctl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "spinctl/kernels.hpp"

namespace spinctl {

namespace {
void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, Rng& rng) {
  const double lim = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& x : w) x = rng.uniform(-lim, lim);
}
}  // namespace

Mlp::Mlp(int in, int h1, int h2, int out, Rng& rng)
    : in_(in), h1_(h1), h2_(h2), out_(out) {
  if (in < 1 || h1 < 1 || h2 < 1 || out < 1)
    throw std::invalid_argument("layer widths must be positive");
  w1_.resize(static_cast<std::size_t>(h1) * in);
  b1_.assign(h1, 0.0);
  w2_.resize(static_cast<std::size_t>(h2) * h1);
  b2_.assign(h2, 0.0);
  w3_.resize(static_cast<std::size_t>(out) * h2);
  b3_.assign(out, 0.0);
  xavier_fill(w1_, in, h1, rng);
  xavier_fill(w2_, h1, h2, rng);
  xavier_fill(w3_, h2, out, rng);
}

std::size_t Mlp::param_count() const {
  return w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() +
         b3_.size();
}

void Mlp::forward(const double* x, int batch, double* y, Cache* cache) const {
  if (cache) {
    cache->batch = batch;
    cache->x.assign(x, x + static_cast<std::size_t>(batch) * in_);
    cache->a1.resize(static_cast<std::size_t>(batch) * h1_);
    cache->a2.resize(static_cast<std::size_t>(batch) * h2_);
  }
  std::vector<double> z1(h1_), z2(h2_);
  for (int i = 0; i < batch; ++i) {
    const double* xi = x + static_cast<std::size_t>(i) * in_;
    kern::gemv(w1_.data(), h1_, in_, xi, b1_.data(), z1.data());
    kern::tanh_vec(z1.data(), z1.data(), h1_);
    kern::gemv(w2_.data(), h2_, h1_, z1.data(), b2_.data(), z2.data());
    kern::tanh_vec(z2.data(), z2.data(), h2_);
    kern::gemv(w3_.data(), out_, h2_, z2.data(), b3_.data(),
               y + static_cast<std::size_t>(i) * out_);
    if (cache) {
      std::copy(z1.begin(), z1.end(),
                cache->a1.begin() + static_cast<std::size_t>(i) * h1_);
      std::copy(z2.begin(), z2.end(),
                cache->a2.begin() + static_cast<std::size_t>(i) * h2_);
    }
  }
}

void Mlp::Grads::zero() {
  auto clear = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
  clear(w1);
  clear(b1);
  clear(w2);
  clear(b2);
  clear(w3);
  clear(b3);
}

Mlp::Grads Mlp::make_grads() const {
  Grads g;
  g.w1.assign(w1_.size(), 0.0);
  g.b1.assign(b1_.size(), 0.0);
  g.w2.assign(w2_.size(), 0.0);
  g.b2.assign(b2_.size(), 0.0);
  g.w3.assign(w3_.size(), 0.0);
  g.b3.assign(b3_.size(), 0.0);
  return g;
}

void Mlp::backward(const Cache& cache, const double* dy, Grads& g) const {
  std::vector<double> g2(h2_), g1(h1_);
  for (int i = 0; i < cache.batch; ++i) {
    const double* xi = cache.x.data() + static_cast<std::size_t>(i) * in_;
    const double* a1 = cache.a1.data() + static_cast<std::size_t>(i) * h1_;
    const double* a2 = cache.a2.data() + static_cast<std::size_t>(i) * h2_;
    const double* dyi = dy + static_cast<std::size_t>(i) * out_;

    kern::ger_acc(1.0, dyi, out_, a2, h2_, g.w3.data());
    kern::axpy(1.0, dyi, g.b3.data(), out_);

    std::fill(g2.begin(), g2.end(), 0.0);
    kern::gemv_t_acc(w3_.data(), out_, h2_, dyi, g2.data());
    for (int k = 0; k < h2_; ++k) g2[k] *= 1.0 - a2[k] * a2[k];

    kern::ger_acc(1.0, g2.data(), h2_, a1, h1_, g.w2.data());
    kern::axpy(1.0, g2.data(), g.b2.data(), h2_);

    std::fill(g1.begin(), g1.end(), 0.0);
    kern::gemv_t_acc(w2_.data(), h2_, h1_, g2.data(), g1.data());
    for (int k = 0; k < h1_; ++k) g1[k] *= 1.0 - a1[k] * a1[k];

    kern::ger_acc(1.0, g1.data(), h1_, xi, in_, g.w1.data());
    kern::axpy(1.0, g1.data(), g.b1.data(), h1_);
  }
}

std::vector<double*> Mlp::param_buffers() {
  return {w1_.data(), b1_.data(), w2_.data(),
          b2_.data(), w3_.data(), b3_.data()};
}

std::vector<const double*> Mlp::param_buffers() const {
  return {w1_.data(), b1_.data(), w2_.data(),
          b2_.data(), w3_.data(), b3_.data()};
}

std::vector<std::size_t> Mlp::param_sizes() const {
  return {w1_.size(), b1_.size(), w2_.size(),
          b2_.size(), w3_.size(), b3_.size()};
}

std::vector<const double*> Mlp::grad_buffers(const Grads& g) {
  return {g.w1.data(), g.b1.data(), g.w2.data(),
          g.b2.data(), g.w3.data(), g.b3.data()};
}

Adam::Adam(std::vector<std::size_t> sizes, double lr, double beta1,
           double beta2, double eps)
    : sizes_(std::move(sizes)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  m_.reserve(sizes_.size());
  v_.reserve(sizes_.size());
  for (std::size_t s : sizes_) {
    m_.emplace_back(s, 0.0);
    v_.emplace_back(s, 0.0);
  }
}

void Adam::step(const std::vector<double*>& params,
                const std::vector<const double*>& grads) {
  if (params.size() != sizes_.size() || grads.size() != sizes_.size())
    throw std::invalid_argument("buffer count mismatch");
  ++t_;
  const double bias1 = 1.0 - std::pow(beta1_, t_);
  const double bias2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < sizes_.size(); ++i)
    kern::adam_step(params[i], grads[i], m_[i].data(), v_[i].data(),
                    sizes_[i], lr_, beta1_, beta2_, eps_, bias1, bias2);
}

void Adam::restore(int t, std::vector<std::vector<double>> m,
                   std::vector<std::vector<double>> v) {
  if (m.size() != sizes_.size() || v.size() != sizes_.size())
    throw std::invalid_argument("moment shape mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace spinctl
