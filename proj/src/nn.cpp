#include "stm/nn.hpp"

#include <algorithm>
#include <cmath>

namespace stm {

namespace {

void check(bool ok, const char* msg) {
  if (!ok) throw ValidationError(msg);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor2 linear_forward(const LinearLayer& layer, const Tensor2& x) {
  check(x.cols == layer.weight.cols, "linear: input width mismatch");
  const int out = layer.weight.rows;
  Tensor2 y(x.rows, out);
  for (int r = 0; r < x.rows; ++r)
    for (int o = 0; o < out; ++o) {
      double s = layer.has_bias ? layer.bias[o] : 0.0;
      for (int i = 0; i < x.cols; ++i) s += layer.weight.at(o, i) * x.at(r, i);
      y.at(r, o) = s;
    }
  return y;
}

LinearGrads linear_backward(const LinearLayer& layer, const Tensor2& x,
                            const Tensor2& grad_out) {
  check(grad_out.rows == x.rows && grad_out.cols == layer.weight.rows,
        "linear: grad shape mismatch");
  LinearGrads g;
  g.grad_x = Tensor2(x.rows, x.cols);
  g.grad_w = Tensor2::zeros_like(layer.weight);
  if (layer.has_bias) g.grad_b.assign(layer.weight.rows, 0.0);
  for (int r = 0; r < x.rows; ++r)
    for (int o = 0; o < layer.weight.rows; ++o) {
      const double go = grad_out.at(r, o);
      if (layer.has_bias) g.grad_b[o] += go;
      for (int i = 0; i < x.cols; ++i) {
        g.grad_x.at(r, i) += go * layer.weight.at(o, i);
        g.grad_w.at(o, i) += go * x.at(r, i);
      }
    }
  return g;
}

Tensor2 softplus_forward(const Tensor2& x) {
  Tensor2 y = x;
  for (auto& t : y.v) t = std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
  return y;
}

Tensor2 softplus_backward(const Tensor2& x, const Tensor2& grad_out) {
  Tensor2 g = grad_out;
  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] *= logistic(x.v[i]);
  return g;
}

Tensor2 softmax_forward(const Tensor2& x) {
  Tensor2 y = x;
  for (int r = 0; r < x.rows; ++r) {
    double mx = y.at(r, 0);
    for (int c = 1; c < x.cols; ++c) mx = std::max(mx, y.at(r, c));
    double norm = 0.0;
    for (int c = 0; c < x.cols; ++c) {
      y.at(r, c) = std::exp(y.at(r, c) - mx);
      norm += y.at(r, c);
    }
    for (int c = 0; c < x.cols; ++c) y.at(r, c) /= norm;
  }
  return y;
}

Tensor2 softmax_backward(const Tensor2& y, const Tensor2& grad_out) {
  Tensor2 g(y.rows, y.cols);
  for (int r = 0; r < y.rows; ++r) {
    double dot = 0.0;
    for (int c = 0; c < y.cols; ++c) dot += grad_out.at(r, c) * y.at(r, c);
    for (int c = 0; c < y.cols; ++c)
      g.at(r, c) = y.at(r, c) * (grad_out.at(r, c) - dot);
  }
  return g;
}

Tensor2 batchnorm_forward(BatchNormLayer& layer, const Tensor2& x, bool train,
                          BatchNormCache* cache) {
  const int F = static_cast<int>(layer.gain.size());
  check(x.cols == F, "batchnorm: feature width mismatch");
  Tensor2 y(x.rows, x.cols);
  if (!train) {
    for (int r = 0; r < x.rows; ++r)
      for (int c = 0; c < F; ++c) {
        double xhat = (x.at(r, c) - layer.running_mean[c]) /
                      std::sqrt(layer.running_var[c] + layer.epsilon);
        y.at(r, c) = layer.gain[c] * xhat + (layer.learn_shift ? layer.shift[c] : 0.0);
      }
    return y;
  }
  if (x.rows < 2) throw ValidationError("batchnorm: train mode needs batch size >= 2");
  std::vector<double> mean(F, 0.0), var(F, 0.0);
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < F; ++c) mean[c] += x.at(r, c);
  for (int c = 0; c < F; ++c) mean[c] /= x.rows;
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < F; ++c) {
      double d = x.at(r, c) - mean[c];
      var[c] += d * d;
    }
  for (int c = 0; c < F; ++c) var[c] /= x.rows;  // biased, as normalization uses it

  if (cache) {
    cache->mean = mean;
    cache->inv_std.resize(F);
    cache->xhat = Tensor2(x.rows, x.cols);
  }
  for (int c = 0; c < F; ++c) {
    double inv_std = 1.0 / std::sqrt(var[c] + layer.epsilon);
    if (cache) cache->inv_std[c] = inv_std;
    for (int r = 0; r < x.rows; ++r) {
      double xhat = (x.at(r, c) - mean[c]) * inv_std;
      if (cache) cache->xhat.at(r, c) = xhat;
      y.at(r, c) = layer.gain[c] * xhat + (layer.learn_shift ? layer.shift[c] : 0.0);
    }
    layer.running_mean[c] =
        (1.0 - layer.momentum) * layer.running_mean[c] + layer.momentum * mean[c];
    layer.running_var[c] =
        (1.0 - layer.momentum) * layer.running_var[c] + layer.momentum * var[c];
  }
  return y;
}

BatchNormGrads batchnorm_backward(const BatchNormLayer& layer,
                                  const BatchNormCache& cache,
                                  const Tensor2& grad_out) {
  const int F = static_cast<int>(layer.gain.size());
  const int B = grad_out.rows;
  BatchNormGrads g;
  g.grad_x = Tensor2(B, F);
  g.grad_gain.assign(F, 0.0);
  g.grad_shift.assign(F, 0.0);
  for (int c = 0; c < F; ++c) {
    double sum_gy = 0.0, sum_gy_xhat = 0.0;
    for (int r = 0; r < B; ++r) {
      sum_gy += grad_out.at(r, c);
      sum_gy_xhat += grad_out.at(r, c) * cache.xhat.at(r, c);
    }
    g.grad_gain[c] = sum_gy_xhat;
    g.grad_shift[c] = sum_gy;
    const double scale = layer.gain[c] * cache.inv_std[c] / B;
    for (int r = 0; r < B; ++r)
      g.grad_x.at(r, c) = scale * (B * grad_out.at(r, c) - sum_gy -
                                   cache.xhat.at(r, c) * sum_gy_xhat);
  }
  return g;
}

Tensor2 dropout_forward(const Tensor2& x, double p, bool train,
                        std::mt19937_64& rng, Tensor2* mask) {
  if (p < 0.0 || p >= 1.0) throw ValidationError("dropout: p must be in [0, 1)");
  if (!train || p == 0.0) {
    if (mask) {
      *mask = Tensor2(x.rows, x.cols);
      std::fill(mask->v.begin(), mask->v.end(), 1.0);
    }
    return x;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  Tensor2 y = x;
  Tensor2 local_mask(x.rows, x.cols);
  for (size_t i = 0; i < y.v.size(); ++i) {
    double scale = unif(rng) < p ? 0.0 : keep_scale;
    local_mask.v[i] = scale;
    y.v[i] *= scale;
  }
  if (mask) *mask = std::move(local_mask);
  return y;
}

Tensor2 dropout_backward(const Tensor2& mask, const Tensor2& grad_out) {
  Tensor2 g = grad_out;
  for (size_t i = 0; i < g.v.size(); ++i) g.v[i] *= mask.v[i];
  return g;
}

void AdamState::init(const std::vector<std::vector<double>*>& params) {
  step = 0;
  m.clear();
  v.clear();
  for (const auto* p : params) {
    m.emplace_back(p->size(), 0.0);
    v.emplace_back(p->size(), 0.0);
  }
}

void AdamState::update(const std::vector<std::vector<double>*>& params,
                       const std::vector<const std::vector<double>*>& grads) {
  if (params.size() != m.size() || grads.size() != m.size())
    throw ValidationError("adam: parameter list mismatch");
  ++step;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    const auto& g = *grads[i];
    if (p.size() != g.size() || p.size() != m[i].size())
      throw ValidationError("adam: shape mismatch");
    for (size_t j = 0; j < p.size(); ++j) {
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
      const double mhat = m[i][j] / bc1;
      const double vhat = v[i][j] / bc2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + epsilon);
    }
  }
}

}  // namespace stm
