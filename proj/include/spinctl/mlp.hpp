#pragma once

// Two-hidden-layer tanh perceptron with explicit backpropagation, plus an
// adaptive-moment optimizer over arbitrary parameter buffers. These are
// the only learnable function approximators in the project; all heavy
// loops route through the kernels module.

#include <cstddef>
#include <vector>

#include "spinctl/rng.hpp"

namespace spinctl {

class Mlp {
 public:
  // Layer widths in -> h1 -> h2 -> out, tanh on both hidden layers,
  // linear output. Weights start Xavier-uniform, biases at zero.
  Mlp(int in, int h1, int h2, int out, Rng& rng);

  int input_dim() const { return in_; }
  int output_dim() const { return out_; }
  std::size_t param_count() const;

  struct Cache {
    int batch = 0;
    std::vector<double> x;   // batch x in
    std::vector<double> a1;  // batch x h1
    std::vector<double> a2;  // batch x h2
  };

  // Row-major batched forward pass; fills cache when given one.
  void forward(const double* x, int batch, double* y,
               Cache* cache = nullptr) const;

  struct Grads {
    std::vector<double> w1, b1, w2, b2, w3, b3;
    void zero();
  };
  Grads make_grads() const;

  // Accumulates dLoss/dparams into g for upstream gradient dy
  // (batch x out), using the activations cached by forward.
  void backward(const Cache& cache, const double* dy, Grads& g) const;

  // Buffer views shared by the optimizer and the checkpoint writer.
  std::vector<double*> param_buffers();
  std::vector<const double*> param_buffers() const;
  std::vector<std::size_t> param_sizes() const;
  static std::vector<const double*> grad_buffers(const Grads& g);

 private:
  int in_, h1_, h2_, out_;
  std::vector<double> w1_, b1_, w2_, b2_, w3_, b3_;
};

class Adam {
 public:
  Adam(std::vector<std::size_t> sizes, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  // One update over all registered buffers; params[i] and grads[i] must
  // have the size registered at construction.
  void step(const std::vector<double*>& params,
            const std::vector<const double*>& grads);

  double learning_rate() const { return lr_; }
  int steps_taken() const { return t_; }

  // Moment access for checkpointing.
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }
  void restore(int t, std::vector<std::vector<double>> m,
               std::vector<std::vector<double>> v);

 private:
  std::vector<std::size_t> sizes_;
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace spinctl
