#ifndef STM_NN_HPP
#define STM_NN_HPP

#include <random>
#include <vector>

#include "stm/errors.hpp"

namespace stm {

// Row-major dense matrix, rows = batch dimension.
struct Tensor2 {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Tensor2() = default;
  Tensor2(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

  double& at(int r, int c) { return v[size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[size_t(r) * cols + c]; }
  static Tensor2 zeros_like(const Tensor2& t) { return Tensor2(t.rows, t.cols); }
};

struct LinearLayer {
  Tensor2 weight;             // out x in
  std::vector<double> bias;   // empty when the layer has no bias
  bool has_bias = true;
};

struct LinearGrads {
  Tensor2 grad_x;
  Tensor2 grad_w;
  std::vector<double> grad_b;
};

Tensor2 linear_forward(const LinearLayer& layer, const Tensor2& x);
LinearGrads linear_backward(const LinearLayer& layer, const Tensor2& x,
                            const Tensor2& grad_out);

Tensor2 softplus_forward(const Tensor2& x);
Tensor2 softplus_backward(const Tensor2& x, const Tensor2& grad_out);

Tensor2 softmax_forward(const Tensor2& x);  // rowwise
Tensor2 softmax_backward(const Tensor2& y, const Tensor2& grad_out);

struct BatchNormLayer {
  std::vector<double> gain;
  std::vector<double> shift;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
  bool learn_shift = true;  // frozen at 0 when false

  explicit BatchNormLayer(int features = 0)
      : gain(features, 1.0), shift(features, 0.0),
        running_mean(features, 0.0), running_var(features, 1.0) {}
};

struct BatchNormCache {
  std::vector<double> mean;
  std::vector<double> inv_std;
  Tensor2 xhat;
};

// Train mode normalizes by batch statistics and updates the running stats;
// eval mode uses the running stats. Train mode needs batch size >= 2.
Tensor2 batchnorm_forward(BatchNormLayer& layer, const Tensor2& x, bool train,
                          BatchNormCache* cache);

struct BatchNormGrads {
  Tensor2 grad_x;
  std::vector<double> grad_gain;
  std::vector<double> grad_shift;
};

BatchNormGrads batchnorm_backward(const BatchNormLayer& layer,
                                  const BatchNormCache& cache,
                                  const Tensor2& grad_out);

// Inverted dropout: train mode zeroes with probability p and scales survivors
// by 1/(1-p); eval mode is the identity. mask receives the applied scale.
Tensor2 dropout_forward(const Tensor2& x, double p, bool train,
                        std::mt19937_64& rng, Tensor2* mask);
Tensor2 dropout_backward(const Tensor2& mask, const Tensor2& grad_out);

struct AdamState {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long long step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<std::vector<double>*>& params);
  void update(const std::vector<std::vector<double>*>& params,
              const std::vector<const std::vector<double>*>& grads);
};

}  // namespace stm

#endif
