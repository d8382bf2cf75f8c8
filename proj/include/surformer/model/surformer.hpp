#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "surformer/model/encoder.hpp"
#include "surformer/model/fusion.hpp"
#include "surformer/nn/loss.hpp"

namespace surformer::model {

/// Full network geometry. Latent tokens from both encoders meet in the
/// fusion blocks; pooled streams concatenate to 256, pass the fusion FFN
/// (256 -> 128 -> 256), a projection plus layer-normalized residual, and the
/// 256 -> 128 -> 64 -> 32 classification head ending in 5 logits.
struct SurformerConfig {
  EncoderConfig tactile{7, {64}, 128, 4, 0.1};
  EncoderConfig vision{64, {96}, 128, 4, 0.1};
  nn::AttentionConfig attention{128, 2, 64};
  std::size_t n_fusion_blocks = 1;
  std::size_t fusion_ffn_hidden = 128;
  std::vector<std::size_t> head_dims = {256, 128, 64, 32};
  std::size_t n_classes = 5;
  double dropout = 0.1;

  std::size_t concat_dim() const { return 2 * attention.model_dim; }

  void validate() const {
    tactile.validate();
    vision.validate();
    attention.validate();
    if (tactile.latent_dim != attention.model_dim ||
        vision.latent_dim != attention.model_dim) {
      throw ValueError("surformer: encoder latent dims must equal fusion model_dim");
    }
    if (head_dims.empty() || head_dims.front() != concat_dim()) {
      throw ValueError("surformer: head must start at the concat dim " +
                       std::to_string(concat_dim()));
    }
    if (n_fusion_blocks < 1) throw ValueError("surformer: need >= 1 fusion block");
  }
};

namespace detail {

/// [B, L, D] -> [B, D] token mean.
inline Tensor mean_pool(const Tensor& tokens) {
  const std::size_t b = tokens.dim(0), l = tokens.dim(1), d = tokens.dim(2);
  Tensor out({b, d});
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < l; ++t) {
      const double* src = tokens.data() + (i * l + t) * d;
      double* dst = out.data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(l);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
  return out;
}

inline Tensor mean_pool_backward(const Tensor& grad, std::size_t l) {
  const std::size_t b = grad.dim(0), d = grad.dim(1);
  Tensor out({b, l, d});
  const double inv = 1.0 / static_cast<double>(l);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t t = 0; t < l; ++t) {
      const double* src = grad.data() + i * d;
      double* dst = out.data() + (i * l + t) * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * inv;
    }
  }
  return out;
}

}  // namespace detail

/// Post-fusion classifier: pooling, concatenation, fusion FFN with residual
/// projection, and the progressive dense/batch-norm/dropout head.
class FusionHead {
 public:
  FusionHead(const SurformerConfig& cfg, Rng& rng)
      : concat_dim_(cfg.concat_dim()),
        tokens_(cfg.tactile.tokens),
        ffn1_(concat_dim_, cfg.fusion_ffn_hidden, nn::Activation::Relu, rng),
        ffn2_(cfg.fusion_ffn_hidden, concat_dim_, nn::Activation::None, rng),
        proj_(concat_dim_, concat_dim_, nn::Activation::None, rng),
        norm_(concat_dim_) {
    for (std::size_t i = 0; i + 1 < cfg.head_dims.size(); ++i) {
      stage_dense_.emplace_back(cfg.head_dims[i], cfg.head_dims[i + 1],
                                nn::Activation::None, rng);
      stage_norm_.emplace_back(cfg.head_dims[i + 1]);
      stage_relu_.emplace_back();
      stage_drop_.emplace_back(cfg.dropout, rng.next_u64());
    }
    out_ = std::make_unique<nn::Dense>(cfg.head_dims.back(), cfg.n_classes,
                                       nn::Activation::None, rng);
  }

  Tensor forward(const Tensor& v_tokens, const Tensor& t_tokens, bool training) {
    const Tensor vbar = detail::mean_pool(v_tokens);
    const Tensor tbar = detail::mean_pool(t_tokens);
    const std::size_t b = vbar.dim(0), d = vbar.dim(1);
    Tensor concat({b, 2 * d});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        concat.at(i, j) = vbar.at(i, j);
        concat.at(i, d + j) = tbar.at(i, j);
      }
    }
    if (training) concat_cache_ = concat;

    Tensor f = ffn2_.forward(ffn1_.forward(concat, training), training);
    f = proj_.forward(f, training);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += concat[i];
    Tensor h = norm_.forward(f, training);
    for (std::size_t s = 0; s < stage_dense_.size(); ++s) {
      h = stage_dense_[s].forward(h, training);
      h = stage_norm_[s].forward(h, training);
      h = stage_relu_[s].forward(h, training);
      h = stage_drop_[s].forward(h, training);
    }
    return out_->forward(h, training);
  }

  std::pair<Tensor, Tensor> backward(const Tensor& grad_logits) {
    Tensor g = out_->backward(grad_logits);
    for (std::size_t s = stage_dense_.size(); s-- > 0;) {
      g = stage_drop_[s].backward(g);
      g = stage_relu_[s].backward(g);
      g = stage_norm_[s].backward(g);
      g = stage_dense_[s].backward(g);
    }
    g = norm_.backward(g);
    Tensor g_concat = g;  // residual branch
    Tensor gp = proj_.backward(g);
    gp = ffn2_.backward(gp);
    gp = ffn1_.backward(gp);
    for (std::size_t i = 0; i < g_concat.size(); ++i) g_concat[i] += gp[i];

    const std::size_t b = g_concat.dim(0), d = g_concat.dim(1) / 2;
    Tensor gv({b, d}), gt({b, d});
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        gv.at(i, j) = g_concat.at(i, j);
        gt.at(i, j) = g_concat.at(i, d + j);
      }
    }
    return {detail::mean_pool_backward(gv, tokens_),
            detail::mean_pool_backward(gt, tokens_)};
  }

  void register_params(nn::ParamRegistry& reg, const std::string& prefix) {
    ffn1_.register_params(reg, prefix + ".fusion_ffn1");
    ffn2_.register_params(reg, prefix + ".fusion_ffn2");
    proj_.register_params(reg, prefix + ".proj");
    norm_.register_params(reg, prefix + ".norm");
    for (std::size_t s = 0; s < stage_dense_.size(); ++s) {
      stage_dense_[s].register_params(reg, prefix + ".stage" + std::to_string(s) + ".dense");
      stage_norm_[s].register_params(reg, prefix + ".stage" + std::to_string(s) + ".norm");
    }
    out_->register_params(reg, prefix + ".out");
  }

  const nn::Dense& fusion_ffn1() const { return ffn1_; }
  const nn::Dense& fusion_ffn2() const { return ffn2_; }
  const nn::Dense& projection() const { return proj_; }
  const std::vector<nn::Dense>& stages() const { return stage_dense_; }
  const nn::Dense& output_layer() const { return *out_; }

 private:
  std::size_t concat_dim_;
  std::size_t tokens_;
  nn::Dense ffn1_, ffn2_, proj_;
  nn::LayerNorm norm_;
  std::vector<nn::Dense> stage_dense_;
  std::vector<nn::BatchNorm> stage_norm_;
  std::vector<nn::Relu> stage_relu_;
  std::vector<nn::Dropout> stage_drop_;
  std::unique_ptr<nn::Dense> out_;
  Tensor concat_cache_;
};

/// The multimodal surface classifier: modality encoders, fusion blocks and
/// the classification head. Construction is fully seeded.
class SurformerModel {
 public:
  SurformerModel(const SurformerConfig& cfg, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    cfg_.validate();
    encoder_tactile_ = std::make_unique<ModalityEncoder>(cfg_.tactile, rng_);
    encoder_vision_ = std::make_unique<ModalityEncoder>(cfg_.vision, rng_);
    for (std::size_t i = 0; i < cfg_.n_fusion_blocks; ++i) {
      blocks_.push_back(std::make_unique<FusionBlock>(cfg_.attention,
                                                      cfg_.fusion_ffn_hidden,
                                                      cfg_.dropout, rng_));
    }
    head_ = std::make_unique<FusionHead>(cfg_, rng_);
    register_params(registry_);
  }

  /// ([B, tactile_dim], [B, vision_dim]) -> logits [B, n_classes].
  Tensor forward(const Tensor& tactile, const Tensor& vision, bool training) {
    Tensor t = encoder_tactile_->forward(tactile, training);
    Tensor v = encoder_vision_->forward(vision, training);
    for (auto& block : blocks_) {
      auto [v_next, t_next] = block->forward(v, t, training);
      v = std::move(v_next);
      t = std::move(t_next);
    }
    return head_->forward(v, t, training);
  }

  /// Returns gradients w.r.t. (tactile, vision) inputs.
  std::pair<Tensor, Tensor> backward(const Tensor& grad_logits) {
    auto [gv, gt] = head_->backward(grad_logits);
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      auto [gv_in, gt_in] = blocks_[i]->backward(gv, gt);
      gv = std::move(gv_in);
      gt = std::move(gt_in);
    }
    Tensor g_tactile = encoder_tactile_->backward(gt);
    Tensor g_vision = encoder_vision_->backward(gv);
    return {std::move(g_tactile), std::move(g_vision)};
  }

  Tensor predict_proba(const Tensor& tactile, const Tensor& vision) {
    return nn::softmax_rows(forward(tactile, vision, false));
  }

  void register_params(nn::ParamRegistry& reg) {
    encoder_tactile_->register_params(reg, "tactile_encoder");
    encoder_vision_->register_params(reg, "vision_encoder");
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i]->register_params(reg, "fusion_block" + std::to_string(i));
    }
    head_->register_params(reg, "head");
  }

  nn::ParamRegistry& registry() { return registry_; }
  const SurformerConfig& config() const { return cfg_; }
  std::vector<std::unique_ptr<FusionBlock>>& fusion_blocks() { return blocks_; }
  FusionHead& head() { return *head_; }
  ModalityEncoder& tactile_encoder() { return *encoder_tactile_; }
  ModalityEncoder& vision_encoder() { return *encoder_vision_; }

 private:
  SurformerConfig cfg_;
  Rng rng_;
  std::unique_ptr<ModalityEncoder> encoder_tactile_;
  std::unique_ptr<ModalityEncoder> encoder_vision_;
  std::vector<std::unique_ptr<FusionBlock>> blocks_;
  std::unique_ptr<FusionHead> head_;
  nn::ParamRegistry registry_;
};

}  // namespace surformer::model
