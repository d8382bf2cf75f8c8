#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "surformer/core/tensor.hpp"
#include "surformer/nn/layers.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::nn {

/// Head geometry of every attention block. The default mirrors the fusion
/// stage: two heads on 64-dimensional subspaces of a 128-dimensional space.
struct AttentionConfig {
  std::size_t model_dim = 128;
  std::size_t num_heads = 2;
  std::size_t head_dim = 64;

  void validate() const {
    if (num_heads * head_dim != model_dim) {
      throw ValueError("attention config: num_heads (" + std::to_string(num_heads) +
                       ") * head_dim (" + std::to_string(head_dim) +
                       ") must equal model_dim (" + std::to_string(model_dim) + ")");
    }
  }
};

struct SdpaCache {
  Tensor q, k, v, weights;
};

namespace detail {

inline void as_batched(const Tensor& t, std::size_t& batch, std::size_t& len,
                       std::size_t& depth) {
  if (t.rank() == 2) {
    batch = 1;
    len = t.dim(0);
    depth = t.dim(1);
  } else if (t.rank() == 3) {
    batch = t.dim(0);
    len = t.dim(1);
    depth = t.dim(2);
  } else {
    throw DimensionError("attention: expected rank 2 or 3 tensor, got " + t.shape_str());
  }
}

}  // namespace detail

/// softmax(Q K^T / sqrt(d_k)) V over full (unmasked) attention. Returns the
/// output and the attention weights; every weight row sums to one.
inline std::pair<Tensor, Tensor> scaled_dot_product_attention(
    const Tensor& q, const Tensor& k, const Tensor& v, SdpaCache* cache = nullptr) {
  std::size_t bq, lq, d, bk, lk, dk, bv, lv, dv;
  detail::as_batched(q, bq, lq, d);
  detail::as_batched(k, bk, lk, dk);
  detail::as_batched(v, bv, lv, dv);
  if (d != dk) {
    throw DimensionError("attention: query depth " + std::to_string(d) +
                         " does not match key depth " + std::to_string(dk));
  }
  if (bq != bk || bk != bv || lk != lv) {
    throw DimensionError("attention: incompatible shapes " + q.shape_str() + ", " +
                         k.shape_str() + ", " + v.shape_str());
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor weights(q.rank() == 3 ? std::vector<std::size_t>{bq, lq, lk}
                               : std::vector<std::size_t>{lq, lk});
  Tensor out(q.rank() == 3 ? std::vector<std::size_t>{bq, lq, dv}
                           : std::vector<std::size_t>{lq, dv});

  for (std::size_t b = 0; b < bq; ++b) {
    const double* qb = q.data() + b * lq * d;
    const double* kb = k.data() + b * lk * d;
    const double* vb = v.data() + b * lk * dv;
    double* wb = weights.data() + b * lq * lk;
    double* ob = out.data() + b * lq * dv;
    gemm_nt(qb, kb, wb, lq, d, lk);
    for (std::size_t r = 0; r < lq; ++r) {
      double* row = wb + r * lk;
      double mx = row[0] * scale;
      for (std::size_t j = 0; j < lk; ++j) {
        row[j] *= scale;
        if (row[j] > mx) mx = row[j];
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < lk; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (std::size_t j = 0; j < lk; ++j) row[j] /= sum;
    }
    gemm_nn(wb, vb, ob, lq, lk, dv);
  }
  if (cache) {
    cache->q = q;
    cache->k = k;
    cache->v = v;
    cache->weights = weights;
  }
  return {std::move(out), std::move(weights)};
}

/// Exact gradients of scaled_dot_product_attention w.r.t. Q, K, V.
inline void sdpa_backward(const SdpaCache& cache, const Tensor& grad_out,
                          Tensor& gq, Tensor& gk, Tensor& gv) {
  std::size_t batch, lq, d, bk, lk, dv;
  detail::as_batched(cache.q, batch, lq, d);
  {
    std::size_t lv;
    detail::as_batched(cache.v, bk, lv, dv);
    lk = lv;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));

  gq = Tensor(cache.q.shape());
  gk = Tensor(cache.k.shape());
  gv = Tensor(cache.v.shape());
  std::vector<double> gw(lq * lk), gs(lq * lk);

  for (std::size_t b = 0; b < batch; ++b) {
    const double* qb = cache.q.data() + b * lq * d;
    const double* kb = cache.k.data() + b * lk * d;
    const double* vb = cache.v.data() + b * lk * dv;
    const double* wb = cache.weights.data() + b * lq * lk;
    const double* gob = grad_out.data() + b * lq * dv;

    gemm_nt(gob, vb, gw.data(), lq, dv, lk);          // dL/dW
    gemm_tn(wb, gob, gv.data() + b * lk * dv, lk, lq, dv);  // dL/dV

    // Softmax backward per row: gS = W * (gW - <gW, W>).
    for (std::size_t r = 0; r < lq; ++r) {
      const double* wr = wb + r * lk;
      const double* gwr = gw.data() + r * lk;
      double dot = 0.0;
      for (std::size_t j = 0; j < lk; ++j) dot += gwr[j] * wr[j];
      double* gsr = gs.data() + r * lk;
      for (std::size_t j = 0; j < lk; ++j) gsr[j] = wr[j] * (gwr[j] - dot) * scale;
    }
    gemm_nn(gs.data(), kb, gq.data() + b * lq * d, lq, lk, d);
    gemm_tn(gs.data(), qb, gk.data() + b * lk * d, lk, lq, d);
  }
}

/// Multi-head attention with combined per-head Q/K/V projections and an
/// output projection. Self-attention is the q_in == kv_in case.
class MultiHeadAttention {
 public:
  MultiHeadAttention(const AttentionConfig& cfg, Rng& rng)
      : cfg_(cfg),
        wq(cfg.model_dim, cfg.model_dim, Activation::None, rng),
        wk(cfg.model_dim, cfg.model_dim, Activation::None, rng),
        wv(cfg.model_dim, cfg.model_dim, Activation::None, rng),
        wo(cfg.model_dim, cfg.model_dim, Activation::None, rng) {
    cfg_.validate();
  }

  Tensor forward(const Tensor& q_in, const Tensor& kv_in, bool training) {
    std::size_t batch, lq, d, bk, lk, dk;
    detail::as_batched(q_in, batch, lq, d);
    detail::as_batched(kv_in, bk, lk, dk);
    if (d != cfg_.model_dim || dk != cfg_.model_dim || batch != bk) {
      throw DimensionError("multi_head_attention: inputs " + q_in.shape_str() +
                           ", " + kv_in.shape_str() + " do not match model_dim " +
                           std::to_string(cfg_.model_dim));
    }
    const Tensor q = wq.forward(q_in, training);
    const Tensor k = wk.forward(kv_in, training);
    const Tensor v = wv.forward(kv_in, training);

    const std::size_t hd = cfg_.head_dim;
    Tensor concat(q.shape());
    if (training) {
      caches_.assign(cfg_.num_heads, SdpaCache{});
      lq_ = lq;
      lk_ = lk;
      batch_ = batch;
    }
    for (std::size_t h = 0; h < cfg_.num_heads; ++h) {
      Tensor qh = slice_last(q, batch, lq, h * hd, hd);
      Tensor kh = slice_last(k, batch, lk, h * hd, hd);
      Tensor vh = slice_last(v, batch, lk, h * hd, hd);
      auto [oh, w] = scaled_dot_product_attention(qh, kh, vh,
                                                  training ? &caches_[h] : nullptr);
      write_slice_last(concat, oh, batch, lq, h * hd, hd);
    }
    return wo.forward(concat, training);
  }

  /// Returns gradients w.r.t. (q_in, kv_in); the caller adds them when both
  /// came from one tensor (self-attention).
  std::pair<Tensor, Tensor> backward(const Tensor& grad_out) {
    Tensor g_concat = wo.backward(grad_out);
    const std::size_t hd = cfg_.head_dim;
    Tensor gq(g_concat.shape());
    std::vector<std::size_t> kv_shape = g_concat.shape();
    kv_shape[kv_shape.size() - 2] = lk_;
    Tensor gk_total(kv_shape), gv_total(kv_shape);
    for (std::size_t h = 0; h < cfg_.num_heads; ++h) {
      Tensor goh = slice_last(g_concat, batch_, lq_, h * hd, hd);
      Tensor gqh, gkh, gvh;
      sdpa_backward(caches_[h], goh, gqh, gkh, gvh);
      write_slice_last(gq, gqh, batch_, lq_, h * hd, hd);
      write_slice_last(gk_total, gkh, batch_, lk_, h * hd, hd);
      write_slice_last(gv_total, gvh, batch_, lk_, h * hd, hd);
    }
    Tensor gq_in = wq.backward(gq);
    Tensor gkv = wk.backward(gk_total);
    const Tensor gkv_v = wv.backward(gv_total);
    for (std::size_t i = 0; i < gkv.size(); ++i) gkv[i] += gkv_v[i];
    return {std::move(gq_in), std::move(gkv)};
  }

  void register_params(ParamRegistry& reg, const std::string& prefix) {
    wq.register_params(reg, prefix + ".wq");
    wk.register_params(reg, prefix + ".wk");
    wv.register_params(reg, prefix + ".wv");
    wo.register_params(reg, prefix + ".wo");
  }

  const AttentionConfig& config() const { return cfg_; }

  Dense wq, wk, wv, wo;

 private:
  static Tensor slice_last(const Tensor& t, std::size_t batch, std::size_t len,
                           std::size_t offset, std::size_t width) {
    const std::size_t d = t.shape().back();
    Tensor s(t.rank() == 3 ? std::vector<std::size_t>{batch, len, width}
                           : std::vector<std::size_t>{len, width});
    const std::size_t rows = batch * len;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = t.data() + r * d + offset;
      double* dst = s.data() + r * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
    }
    return s;
  }

  static void write_slice_last(Tensor& t, const Tensor& s, std::size_t batch,
                               std::size_t len, std::size_t offset, std::size_t width) {
    const std::size_t d = t.shape().back();
    const std::size_t rows = batch * len;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* src = s.data() + r * width;
      double* dst = t.data() + r * d + offset;
      for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
    }
  }

  AttentionConfig cfg_;
  std::vector<SdpaCache> caches_;
  std::size_t batch_ = 0, lq_ = 0, lk_ = 0;
};

}  // namespace surformer::nn
