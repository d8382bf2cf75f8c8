#pragma once

#include <memory>
#include <string>
#include <vector>

#include "surformer/nn/layers.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::model {

/// Modality encoder geometry. Defaults follow the reference architecture:
/// tactile 7 -> [64] -> 4 tokens of 128, vision 64 -> [96] -> 4 tokens of 128.
struct EncoderConfig {
  std::size_t input_dim = 7;
  std::vector<std::size_t> hidden_dims = {64};
  std::size_t latent_dim = 128;
  std::size_t tokens = 4;
  double dropout = 0.1;

  void validate() const {
    if (tokens < 1) throw ValueError("encoder: tokens must be >= 1");
    if (latent_dim < 1) throw ValueError("encoder: latent_dim must be >= 1");
  }
};

/// Dense -> batch-norm -> ReLU -> dropout per hidden width, then a final
/// dense layer emitting `tokens` latent vectors per sample.
class ModalityEncoder {
 public:
  ModalityEncoder(const EncoderConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    cfg_.validate();
    std::size_t in = cfg.input_dim;
    for (std::size_t h : cfg.hidden_dims) {
      dense_.emplace_back(in, h, nn::Activation::None, rng);
      norm_.emplace_back(h);
      relu_.emplace_back();
      drop_.emplace_back(cfg.dropout, rng.next_u64());
      in = h;
    }
    to_tokens_ = std::make_unique<nn::Dense>(in, cfg.tokens * cfg.latent_dim,
                                             nn::Activation::None, rng);
  }

  /// [B, input_dim] -> [B, tokens, latent_dim].
  Tensor forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.dim(1) != cfg_.input_dim) {
      throw DimensionError("encoder: expected [B," + std::to_string(cfg_.input_dim) +
                           "], got " + x.shape_str());
    }
    Tensor h = x;
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      h = dense_[i].forward(h, training);
      h = norm_[i].forward(h, training);
      h = relu_[i].forward(h, training);
      h = drop_[i].forward(h, training);
    }
    h = to_tokens_->forward(h, training);
    return h.reshaped({x.dim(0), cfg_.tokens, cfg_.latent_dim});
  }

  Tensor backward(const Tensor& grad_tokens) {
    Tensor g = grad_tokens.reshaped(
        {grad_tokens.dim(0), cfg_.tokens * cfg_.latent_dim});
    g = to_tokens_->backward(g);
    for (std::size_t i = dense_.size(); i-- > 0;) {
      g = drop_[i].backward(g);
      g = relu_[i].backward(g);
      g = norm_[i].backward(g);
      g = dense_[i].backward(g);
    }
    return g;
  }

  void register_params(nn::ParamRegistry& reg, const std::string& prefix) {
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      dense_[i].register_params(reg, prefix + ".dense" + std::to_string(i));
      norm_[i].register_params(reg, prefix + ".norm" + std::to_string(i));
    }
    to_tokens_->register_params(reg, prefix + ".to_tokens");
  }

  const EncoderConfig& config() const { return cfg_; }

 private:
  EncoderConfig cfg_;
  std::vector<nn::Dense> dense_;
  std::vector<nn::BatchNorm> norm_;
  std::vector<nn::Relu> relu_;
  std::vector<nn::Dropout> drop_;
  std::unique_ptr<nn::Dense> to_tokens_;
};

}  // namespace surformer::model
