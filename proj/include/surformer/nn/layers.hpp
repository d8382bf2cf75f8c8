#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "surformer/core/rng.hpp"
#include "surformer/core/tensor.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::nn {

enum class Activation { None, Relu };

/// Glorot-style uniform initialization, seeded; biases are zeroed separately.
inline Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor w({fan_in, fan_out});
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-limit, limit);
  return w;
}

/// Fully connected layer, y = act(x W + b). Accepts any rank >= 2 input whose
/// last dimension equals the weight's input dimension; leading dimensions are
/// flattened into rows.
class Dense {
 public:
  Dense(std::size_t in, std::size_t out, Activation act, Rng& rng)
      : weight(glorot_uniform(in, out, rng)),
        bias(Tensor({out}, 0.0)),
        in_(in),
        out_(out),
        act_(act) {}

  Tensor forward(const Tensor& x, bool training) {
    if (x.rank() < 2 || x.shape().back() != in_) {
      throw DimensionError("dense_forward: input " + x.shape_str() +
                           " does not match weight " + weight.value.shape_str());
    }
    const std::size_t rows = x.size() / in_;
    std::vector<std::size_t> out_shape = x.shape();
    out_shape.back() = out_;
    Tensor y(out_shape);
    gemm_nn(x.data(), weight.value.data(), y.data(), rows, in_, out_);
    for (std::size_t r = 0; r < rows; ++r) {
      double* row = y.data() + r * out_;
      for (std::size_t j = 0; j < out_; ++j) row[j] += bias.value[j];
    }
    if (act_ == Activation::Relu) {
      if (training) {
        relu_mask_.assign(y.size(), 0);
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] > 0.0) {
            relu_mask_[i] = 1;
          } else {
            y[i] = 0.0;
          }
        }
      } else {
        for (std::size_t i = 0; i < y.size(); ++i) {
          if (y[i] < 0.0) y[i] = 0.0;
        }
      }
    }
    if (training) x_cache_ = x;
    return y;
  }

  /// Accumulates parameter gradients and returns the gradient w.r.t. x.
  Tensor backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    if (act_ == Activation::Relu) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!relu_mask_[i]) g[i] = 0.0;
      }
    }
    const std::size_t rows = g.size() / out_;
    gemm_tn(x_cache_.data(), g.data(), weight.grad.data(), in_, rows, out_, true);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = g.data() + r * out_;
      for (std::size_t j = 0; j < out_; ++j) bias.grad[j] += row[j];
    }
    Tensor gx(x_cache_.shape());
    gemm_nt(g.data(), weight.value.data(), gx.data(), rows, out_, in_);
    return gx;
  }

  void register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".weight", &weight);
    reg.add(prefix + ".bias", &bias);
  }

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

  Parameter weight;
  Parameter bias;

 private:
  std::size_t in_;
  std::size_t out_;
  Activation act_;
  Tensor x_cache_;
  std::vector<unsigned char> relu_mask_;
};

/// Standalone ReLU (used where normalization sits between a dense layer and
/// its activation).
class Relu {
 public:
  Tensor forward(const Tensor& x, bool training) {
    Tensor y = x;
    if (training) mask_.assign(y.size(), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] > 0.0) {
        if (training) mask_[i] = 1;
      } else {
        y[i] = 0.0;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!mask_[i]) g[i] = 0.0;
    }
    return g;
  }

 private:
  std::vector<unsigned char> mask_;
};

/// Row-wise normalization over the last dimension (population variance),
/// followed by the learned affine transform.
class LayerNorm {
 public:
  explicit LayerNorm(std::size_t dim, double eps = 1e-5)
      : gamma(Tensor({dim}, 1.0)), beta(Tensor({dim}, 0.0)), dim_(dim), eps_(eps) {
    if (dim == 0) throw ValueError("layer_norm: zero-width input");
    if (eps <= 0.0) throw ValueError("layer_norm: eps must be positive");
  }

  Tensor forward(const Tensor& x, bool training) {
    if (x.rank() < 2 || x.shape().back() != dim_) {
      throw DimensionError("layer_norm: input " + x.shape_str() +
                           " does not end in dim " + std::to_string(dim_));
    }
    const std::size_t rows = x.size() / dim_;
    Tensor y(x.shape());
    if (training) {
      xhat_ = Tensor(x.shape());
      inv_std_.assign(rows, 0.0);
    }
    for (std::size_t r = 0; r < rows; ++r) {
      const double* in = x.data() + r * dim_;
      double* out = y.data() + r * dim_;
      double mean = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) mean += in[j];
      mean /= static_cast<double>(dim_);
      double var = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double d = in[j] - mean;
        var += d * d;
      }
      var /= static_cast<double>(dim_);
      const double inv_std = 1.0 / std::sqrt(var + eps_);
      for (std::size_t j = 0; j < dim_; ++j) {
        const double xh = (in[j] - mean) * inv_std;
        if (training) xhat_.data()[r * dim_ + j] = xh;
        out[j] = gamma.value[j] * xh + beta.value[j];
      }
      if (training) inv_std_[r] = inv_std;
    }
    return y;
  }

  Tensor backward(const Tensor& grad_out) {
    const std::size_t rows = grad_out.size() / dim_;
    Tensor gx(grad_out.shape());
    const double n = static_cast<double>(dim_);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* g = grad_out.data() + r * dim_;
      const double* xh = xhat_.data() + r * dim_;
      double* out = gx.data() + r * dim_;
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t j = 0; j < dim_; ++j) {
        const double gg = g[j] * gamma.value[j];
        sum_g += gg;
        sum_gx += gg * xh[j];
        gamma.grad[j] += g[j] * xh[j];
        beta.grad[j] += g[j];
      }
      for (std::size_t j = 0; j < dim_; ++j) {
        const double gg = g[j] * gamma.value[j];
        out[j] = inv_std_[r] * (gg - sum_g / n - xh[j] * sum_gx / n);
      }
    }
    return gx;
  }

  void register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".gamma", &gamma);
    reg.add(prefix + ".beta", &beta);
  }

  std::size_t dim() const { return dim_; }

  Parameter gamma;
  Parameter beta;

 private:
  std::size_t dim_;
  double eps_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

/// Batch normalization over the batch axis of a [B, D] tensor. Training mode
/// normalizes with batch statistics and updates the running estimates with
/// momentum 0.9; inference uses the running estimates only.
class BatchNorm {
 public:
  explicit BatchNorm(std::size_t dim, double momentum = 0.9, double eps = 1e-5)
      : gamma(Tensor({dim}, 1.0)),
        beta(Tensor({dim}, 0.0)),
        running_mean(Tensor({dim}, 0.0), /*trainable=*/false),
        running_var(Tensor({dim}, 1.0), /*trainable=*/false),
        dim_(dim),
        momentum_(momentum),
        eps_(eps) {}

  Tensor forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.dim(1) != dim_) {
      throw DimensionError("batch_norm: expected [B," + std::to_string(dim_) +
                           "], got " + x.shape_str());
    }
    const std::size_t batch = x.dim(0);
    Tensor y(x.shape());
    if (training) {
      if (batch < 2) {
        throw ValueError("batch_norm: training batch of " +
                         std::to_string(batch) + " is too small (need >= 2)");
      }
      xhat_ = Tensor(x.shape());
      inv_std_.assign(dim_, 0.0);
      const double bn = static_cast<double>(batch);
      for (std::size_t j = 0; j < dim_; ++j) {
        double mean = 0.0;
        for (std::size_t b = 0; b < batch; ++b) mean += x.at(b, j);
        mean /= bn;
        double var = 0.0;
        for (std::size_t b = 0; b < batch; ++b) {
          const double d = x.at(b, j) - mean;
          var += d * d;
        }
        var /= bn;
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        inv_std_[j] = inv_std;
        for (std::size_t b = 0; b < batch; ++b) {
          const double xh = (x.at(b, j) - mean) * inv_std;
          xhat_.at(b, j) = xh;
          y.at(b, j) = gamma.value[j] * xh + beta.value[j];
        }
        running_mean.value[j] = momentum_ * running_mean.value[j] + (1.0 - momentum_) * mean;
        running_var.value[j] = momentum_ * running_var.value[j] + (1.0 - momentum_) * var;
      }
    } else {
      for (std::size_t j = 0; j < dim_; ++j) {
        const double inv_std = 1.0 / std::sqrt(running_var.value[j] + eps_);
        for (std::size_t b = 0; b < batch; ++b) {
          y.at(b, j) = gamma.value[j] * (x.at(b, j) - running_mean.value[j]) * inv_std +
                       beta.value[j];
        }
      }
    }
    return y;
  }

  Tensor backward(const Tensor& grad_out) {
    const std::size_t batch = grad_out.dim(0);
    const double bn = static_cast<double>(batch);
    Tensor gx(grad_out.shape());
    for (std::size_t j = 0; j < dim_; ++j) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t b = 0; b < batch; ++b) {
        const double g = grad_out.at(b, j);
        sum_g += g;
        sum_gx += g * xhat_.at(b, j);
        gamma.grad[j] += g * xhat_.at(b, j);
        beta.grad[j] += g;
      }
      for (std::size_t b = 0; b < batch; ++b) {
        const double g = grad_out.at(b, j);
        gx.at(b, j) = gamma.value[j] * inv_std_[j] *
                      (g - sum_g / bn - xhat_.at(b, j) * sum_gx / bn);
      }
    }
    return gx;
  }

  void register_params(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".gamma", &gamma);
    reg.add(prefix + ".beta", &beta);
    reg.add(prefix + ".running_mean", &running_mean);
    reg.add(prefix + ".running_var", &running_var);
  }

  Parameter gamma;
  Parameter beta;
  Parameter running_mean;
  Parameter running_var;

 private:
  std::size_t dim_;
  double momentum_;
  double eps_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

/// Inverted dropout: training zeroes entries with probability `rate` and
/// scales survivors by 1/(1-rate), so inference is the identity. Owns its
/// seeded stream for reproducible masks.
class Dropout {
 public:
  Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
    if (rate < 0.0 || rate >= 1.0) {
      throw ValueError("dropout: rate must lie in [0,1), got " + std::to_string(rate));
    }
  }

  Tensor forward(const Tensor& x, bool training) {
    if (!training || rate_ == 0.0) {
      if (training) mask_.assign(x.size(), 1);
      return x;
    }
    mask_.assign(x.size(), 0);
    Tensor y(x.shape());
    const double scale = 1.0 / (1.0 - rate_);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (rng_.uniform() >= rate_) {
        mask_[i] = 1;
        y[i] = x[i] * scale;
      }
    }
    return y;
  }

  Tensor backward(const Tensor& grad_out) {
    if (rate_ == 0.0) return grad_out;
    Tensor g(grad_out.shape());
    const double scale = 1.0 / (1.0 - rate_);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] = mask_[i] ? grad_out[i] * scale : 0.0;
    }
    return g;
  }

  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<unsigned char> mask_;
};

}  // namespace surformer::nn
