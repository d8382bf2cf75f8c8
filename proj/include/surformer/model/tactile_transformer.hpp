#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "surformer/nn/attention.hpp"
#include "surformer/nn/layers.hpp"
#include "surformer/nn/loss.hpp"

namespace surformer::model {

/// Encoder-only transformer over the 7 tactile features: one token per
/// feature via a learned scalar-to-d_model affine plus positional embedding,
/// pre-LN encoder layers, mean pooling and a small dense head.
struct TactileTransformerConfig {
  std::size_t n_features = 7;
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 2;
  std::size_t ffn_dim = 128;
  std::size_t head_hidden = 32;
  std::size_t n_classes = 5;
  double dropout = 0.1;

  nn::AttentionConfig attention_config() const {
    return {d_model, n_heads, d_model / n_heads};
  }

  void validate() const {
    attention_config().validate();
    if (n_features < 1 || n_layers < 1) {
      throw ValueError("tactile transformer: need >= 1 feature and layer");
    }
  }
};

class TactileTransformer {
 public:
  TactileTransformer(const TactileTransformerConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    cfg_.validate();
    embed_scale_ = nn::Parameter(nn::glorot_uniform(cfg.n_features, cfg.d_model, rng_));
    embed_bias_ = nn::Parameter(Tensor({cfg.n_features, cfg.d_model}, 0.0));
    positional_ = nn::Parameter(Tensor({cfg.n_features, cfg.d_model}, 0.0));
    for (std::size_t i = 0; i < cfg.n_layers; ++i) {
      layers_.push_back(std::make_unique<EncoderLayer>(cfg, rng_));
    }
    head_dense_ = std::make_unique<nn::Dense>(cfg.d_model, cfg.head_hidden,
                                              nn::Activation::Relu, rng_);
    head_drop_ = std::make_unique<nn::Dropout>(cfg.dropout, rng_.next_u64());
    head_out_ = std::make_unique<nn::Dense>(cfg.head_hidden, cfg.n_classes,
                                            nn::Activation::None, rng_);
    register_params(registry_);
  }

  /// [B, n_features] -> logits [B, n_classes].
  Tensor forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.dim(1) != cfg_.n_features) {
      throw DimensionError("tactile transformer: expected [B," +
                           std::to_string(cfg_.n_features) + "], got " + x.shape_str());
    }
    const std::size_t b = x.dim(0), l = cfg_.n_features, d = cfg_.d_model;
    Tensor tokens({b, l, d});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < l; ++t) {
        const double xv = x.at(i, t);
        const double* w = embed_scale_.value.data() + t * d;
        const double* bb = embed_bias_.value.data() + t * d;
        const double* pp = positional_.value.data() + t * d;
        double* dst = tokens.data() + (i * l + t) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = xv * w[j] + bb[j] + pp[j];
      }
    }
    if (training) x_cache_ = x;

    for (auto& layer : layers_) tokens = layer->forward(tokens, training);

    Tensor pooled({b, d});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < l; ++t) {
        const double* src = tokens.data() + (i * l + t) * d;
        double* dst = pooled.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
      }
    }
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] *= inv;

    Tensor h = head_dense_->forward(pooled, training);
    h = head_drop_->forward(h, training);
    return head_out_->forward(h, training);
  }

  /// Returns the gradient w.r.t. the feature input.
  Tensor backward(const Tensor& grad_logits) {
    Tensor g = head_out_->backward(grad_logits);
    g = head_drop_->backward(g);
    g = head_dense_->backward(g);

    const std::size_t b = g.dim(0), l = cfg_.n_features, d = cfg_.d_model;
    Tensor g_tokens({b, l, d});
    const double inv = 1.0 / static_cast<double>(l);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < l; ++t) {
        const double* src = g.data() + i * d;
        double* dst = g_tokens.data() + (i * l + t) * d;
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * inv;
      }
    }

    for (std::size_t i = layers_.size(); i-- > 0;) {
      g_tokens = layers_[i]->backward(g_tokens);
    }

    Tensor gx({b, l});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t t = 0; t < l; ++t) {
        const double* gt = g_tokens.data() + (i * l + t) * d;
        const double* w = embed_scale_.value.data() + t * d;
        double* ws = embed_scale_.grad.data() + t * d;
        double* bs = embed_bias_.grad.data() + t * d;
        double* ps = positional_.grad.data() + t * d;
        const double xv = x_cache_.at(i, t);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          s += gt[j] * w[j];
          ws[j] += gt[j] * xv;
          bs[j] += gt[j];
          ps[j] += gt[j];
        }
        gx.at(i, t) = s;
      }
    }
    return gx;
  }

  Tensor predict_proba(const Tensor& x) {
    return nn::softmax_rows(forward(x, false));
  }

  void register_params(nn::ParamRegistry& reg) {
    reg.add("embed.scale", &embed_scale_);
    reg.add("embed.bias", &embed_bias_);
    reg.add("embed.positional", &positional_);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i]->register_params(reg, "layer" + std::to_string(i));
    }
    head_dense_->register_params(reg, "head.dense");
    head_out_->register_params(reg, "head.out");
  }

  nn::ParamRegistry& registry() { return registry_; }
  const TactileTransformerConfig& config() const { return cfg_; }

 private:
  struct EncoderLayer {
    EncoderLayer(const TactileTransformerConfig& cfg, Rng& rng)
        : ln1(cfg.d_model),
          ln2(cfg.d_model),
          attn(cfg.attention_config(), rng),
          ffn1(cfg.d_model, cfg.ffn_dim, nn::Activation::Relu, rng),
          ffn2(cfg.ffn_dim, cfg.d_model, nn::Activation::None, rng),
          drop_attn(cfg.dropout, rng.next_u64()),
          drop_ffn(cfg.dropout, rng.next_u64()) {}

    Tensor forward(const Tensor& x, bool training) {
      Tensor out = x;
      {
        const Tensor normed = ln1.forward(x, training);
        const Tensor a = drop_attn.forward(attn.forward(normed, normed, training), training);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += a[i];
      }
      {
        const Tensor f = drop_ffn.forward(
            ffn2.forward(ffn1.forward(ln2.forward(out, training), training), training),
            training);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += f[i];
      }
      return out;
    }

    Tensor backward(const Tensor& grad_out) {
      Tensor g1 = grad_out;
      {
        Tensor g = drop_ffn.backward(grad_out);
        g = ffn2.backward(g);
        g = ffn1.backward(g);
        g = ln2.backward(g);
        for (std::size_t i = 0; i < g1.size(); ++i) g1[i] += g[i];
      }
      Tensor gx = g1;
      {
        Tensor g = drop_attn.backward(g1);
        auto [gq, gkv] = attn.backward(g);
        for (std::size_t i = 0; i < gq.size(); ++i) gq[i] += gkv[i];
        const Tensor gn = ln1.backward(gq);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gn[i];
      }
      return gx;
    }

    void register_params(nn::ParamRegistry& reg, const std::string& prefix) {
      ln1.register_params(reg, prefix + ".ln1");
      attn.register_params(reg, prefix + ".attn");
      ln2.register_params(reg, prefix + ".ln2");
      ffn1.register_params(reg, prefix + ".ffn1");
      ffn2.register_params(reg, prefix + ".ffn2");
    }

    nn::LayerNorm ln1, ln2;
    nn::MultiHeadAttention attn;
    nn::Dense ffn1, ffn2;
    nn::Dropout drop_attn, drop_ffn;
  };

  TactileTransformerConfig cfg_;
  Rng rng_;
  nn::Parameter embed_scale_, embed_bias_, positional_;
  std::vector<std::unique_ptr<EncoderLayer>> layers_;
  std::unique_ptr<nn::Dense> head_dense_;
  std::unique_ptr<nn::Dropout> head_drop_;
  std::unique_ptr<nn::Dense> head_out_;
  nn::ParamRegistry registry_;
  Tensor x_cache_;
};

}  // namespace surformer::model
