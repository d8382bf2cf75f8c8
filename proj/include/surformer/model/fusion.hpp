#pragma once

#include <string>
#include <utility>
#include <vector>

#include "surformer/nn/attention.hpp"
#include "surformer/nn/layers.hpp"

namespace surformer::model {

/// Bidirectional cross-modal fusion block. Each modality runs, in order and
/// with pre-layer normalization plus a residual around every sub-layer:
/// self-attention, cross-attention (queries from this modality, keys/values
/// from the other modality's post-self-attention state), and a feed-forward
/// network. Both cross-attention directions read the same snapshot, so the
/// exchange is parallel rather than sequential.
class FusionBlock {
 public:
  FusionBlock(const nn::AttentionConfig& cfg, std::size_t ffn_hidden, double dropout,
              Rng& rng)
      : cfg_(cfg),
        ln_self_v_(cfg.model_dim),
        ln_self_t_(cfg.model_dim),
        ln_q_v_(cfg.model_dim),
        ln_kv_t_(cfg.model_dim),
        ln_q_t_(cfg.model_dim),
        ln_kv_v_(cfg.model_dim),
        ln_ffn_v_(cfg.model_dim),
        ln_ffn_t_(cfg.model_dim),
        self_v_(cfg, rng),
        self_t_(cfg, rng),
        cross_v_(cfg, rng),
        cross_t_(cfg, rng),
        ffn_v1_(cfg.model_dim, ffn_hidden, nn::Activation::Relu, rng),
        ffn_v2_(ffn_hidden, cfg.model_dim, nn::Activation::None, rng),
        ffn_t1_(cfg.model_dim, ffn_hidden, nn::Activation::Relu, rng),
        ffn_t2_(ffn_hidden, cfg.model_dim, nn::Activation::None, rng),
        drop_self_v_(dropout, rng.next_u64()),
        drop_self_t_(dropout, rng.next_u64()),
        drop_cross_v_(dropout, rng.next_u64()),
        drop_cross_t_(dropout, rng.next_u64()),
        drop_ffn_v_(dropout, rng.next_u64()),
        drop_ffn_t_(dropout, rng.next_u64()) {}

  /// (vision tokens, tactile tokens) -> refined (vision, tactile) streams.
  std::pair<Tensor, Tensor> forward(const Tensor& v, const Tensor& t, bool training) {
    Tensor v1 = v;
    {
      const Tensor normed = ln_self_v_.forward(v, training);
      const Tensor attn = drop_self_v_.forward(self_v_.forward(normed, normed, training), training);
      for (std::size_t i = 0; i < v1.size(); ++i) v1[i] += attn[i];
    }
    Tensor t1 = t;
    {
      const Tensor normed = ln_self_t_.forward(t, training);
      const Tensor attn = drop_self_t_.forward(self_t_.forward(normed, normed, training), training);
      for (std::size_t i = 0; i < t1.size(); ++i) t1[i] += attn[i];
    }

    // Both directions read the (v1, t1) snapshot.
    const Tensor vq = ln_q_v_.forward(v1, training);
    const Tensor tk = ln_kv_t_.forward(t1, training);
    const Tensor tq = ln_q_t_.forward(t1, training);
    const Tensor vk = ln_kv_v_.forward(v1, training);

    Tensor v2 = v1;
    {
      const Tensor attn = drop_cross_v_.forward(cross_v_.forward(vq, tk, training), training);
      for (std::size_t i = 0; i < v2.size(); ++i) v2[i] += attn[i];
    }
    Tensor t2 = t1;
    {
      const Tensor attn = drop_cross_t_.forward(cross_t_.forward(tq, vk, training), training);
      for (std::size_t i = 0; i < t2.size(); ++i) t2[i] += attn[i];
    }

    Tensor v3 = v2;
    {
      const Tensor f = drop_ffn_v_.forward(
          ffn_v2_.forward(ffn_v1_.forward(ln_ffn_v_.forward(v2, training), training), training),
          training);
      for (std::size_t i = 0; i < v3.size(); ++i) v3[i] += f[i];
    }
    Tensor t3 = t2;
    {
      const Tensor f = drop_ffn_t_.forward(
          ffn_t2_.forward(ffn_t1_.forward(ln_ffn_t_.forward(t2, training), training), training),
          training);
      for (std::size_t i = 0; i < t3.size(); ++i) t3[i] += f[i];
    }
    return {std::move(v3), std::move(t3)};
  }

  std::pair<Tensor, Tensor> backward(const Tensor& gv3, const Tensor& gt3) {
    // FFN sub-layers.
    Tensor gv2 = gv3;
    {
      Tensor g = drop_ffn_v_.backward(gv3);
      g = ffn_v2_.backward(g);
      g = ffn_v1_.backward(g);
      g = ln_ffn_v_.backward(g);
      for (std::size_t i = 0; i < gv2.size(); ++i) gv2[i] += g[i];
    }
    Tensor gt2 = gt3;
    {
      Tensor g = drop_ffn_t_.backward(gt3);
      g = ffn_t2_.backward(g);
      g = ffn_t1_.backward(g);
      g = ln_ffn_t_.backward(g);
      for (std::size_t i = 0; i < gt2.size(); ++i) gt2[i] += g[i];
    }

    // Cross-attention sub-layers; gradients flow into both streams.
    Tensor gv1 = gv2;
    Tensor gt1 = gt2;
    {
      Tensor g = drop_cross_v_.backward(gv2);
      auto [gq, gkv] = cross_v_.backward(g);
      const Tensor gq_in = ln_q_v_.backward(gq);
      const Tensor gkv_in = ln_kv_t_.backward(gkv);
      for (std::size_t i = 0; i < gv1.size(); ++i) gv1[i] += gq_in[i];
      for (std::size_t i = 0; i < gt1.size(); ++i) gt1[i] += gkv_in[i];
    }
    {
      Tensor g = drop_cross_t_.backward(gt2);
      auto [gq, gkv] = cross_t_.backward(g);
      const Tensor gq_in = ln_q_t_.backward(gq);
      const Tensor gkv_in = ln_kv_v_.backward(gkv);
      for (std::size_t i = 0; i < gt1.size(); ++i) gt1[i] += gq_in[i];
      for (std::size_t i = 0; i < gv1.size(); ++i) gv1[i] += gkv_in[i];
    }

    // Self-attention sub-layers.
    Tensor gv = gv1;
    {
      Tensor g = drop_self_v_.backward(gv1);
      auto [gq, gkv] = self_v_.backward(g);
      for (std::size_t i = 0; i < gq.size(); ++i) gq[i] += gkv[i];
      const Tensor gx = ln_self_v_.backward(gq);
      for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += gx[i];
    }
    Tensor gt = gt1;
    {
      Tensor g = drop_self_t_.backward(gt1);
      auto [gq, gkv] = self_t_.backward(g);
      for (std::size_t i = 0; i < gq.size(); ++i) gq[i] += gkv[i];
      const Tensor gx = ln_self_t_.backward(gq);
      for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += gx[i];
    }
    return {std::move(gv), std::move(gt)};
  }

  void register_params(nn::ParamRegistry& reg, const std::string& prefix) {
    ln_self_v_.register_params(reg, prefix + ".ln_self_v");
    self_v_.register_params(reg, prefix + ".self_v");
    ln_self_t_.register_params(reg, prefix + ".ln_self_t");
    self_t_.register_params(reg, prefix + ".self_t");
    ln_q_v_.register_params(reg, prefix + ".ln_q_v");
    ln_kv_t_.register_params(reg, prefix + ".ln_kv_t");
    cross_v_.register_params(reg, prefix + ".cross_v");
    ln_q_t_.register_params(reg, prefix + ".ln_q_t");
    ln_kv_v_.register_params(reg, prefix + ".ln_kv_v");
    cross_t_.register_params(reg, prefix + ".cross_t");
    ln_ffn_v_.register_params(reg, prefix + ".ln_ffn_v");
    ffn_v1_.register_params(reg, prefix + ".ffn_v1");
    ffn_v2_.register_params(reg, prefix + ".ffn_v2");
    ln_ffn_t_.register_params(reg, prefix + ".ln_ffn_t");
    ffn_t1_.register_params(reg, prefix + ".ffn_t1");
    ffn_t2_.register_params(reg, prefix + ".ffn_t2");
  }

  const nn::AttentionConfig& attention_config() const { return cfg_; }
  std::size_t ffn_hidden_dim() const { return ffn_v1_.out_dim(); }

  nn::MultiHeadAttention& self_attention_vision() { return self_v_; }
  nn::MultiHeadAttention& self_attention_tactile() { return self_t_; }
  nn::MultiHeadAttention& cross_attention_vision() { return cross_v_; }
  nn::MultiHeadAttention& cross_attention_tactile() { return cross_t_; }
  nn::Dense& ffn_second_vision() { return ffn_v2_; }
  nn::Dense& ffn_second_tactile() { return ffn_t2_; }

 private:
  nn::AttentionConfig cfg_;
  nn::LayerNorm ln_self_v_, ln_self_t_;
  nn::LayerNorm ln_q_v_, ln_kv_t_, ln_q_t_, ln_kv_v_;
  nn::LayerNorm ln_ffn_v_, ln_ffn_t_;
  nn::MultiHeadAttention self_v_, self_t_, cross_v_, cross_t_;
  nn::Dense ffn_v1_, ffn_v2_, ffn_t1_, ffn_t2_;
  nn::Dropout drop_self_v_, drop_self_t_, drop_cross_v_, drop_cross_t_;
  nn::Dropout drop_ffn_v_, drop_ffn_t_;
};

}  // namespace surformer::model
