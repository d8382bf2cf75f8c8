#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "surformer/core/tensor.hpp"

namespace surformer::nn {

struct CrossEntropyResult {
  double loss = 0.0;
  Tensor probs;
};

/// Mean negative log-likelihood over a [B, C] logit batch, max-shifted for
/// stability. probs rows sum to one.
inline CrossEntropyResult softmax_cross_entropy(const Tensor& logits,
                                                const std::vector<int>& labels) {
  if (logits.rank() != 2) {
    throw DimensionError("softmax_cross_entropy: expected [B,C] logits, got " +
                         logits.shape_str());
  }
  const std::size_t batch = logits.dim(0);
  const std::size_t classes = logits.dim(1);
  if (labels.size() != batch) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(batch) +
                         " logit rows vs " + std::to_string(labels.size()) + " labels");
  }
  CrossEntropyResult res;
  res.probs = Tensor(logits.shape());
  double total = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const int label = labels[b];
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ValueError("softmax_cross_entropy: label " + std::to_string(label) +
                       " at row " + std::to_string(b) + " outside [0," +
                       std::to_string(classes) + ")");
    }
    const double* row = logits.data() + b * classes;
    double mx = row[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, row[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double e = std::exp(row[c] - mx);
      res.probs.at(b, c) = e;
      sum += e;
    }
    for (std::size_t c = 0; c < classes; ++c) res.probs.at(b, c) /= sum;
    total += -(row[label] - mx - std::log(sum));
  }
  res.loss = total / static_cast<double>(batch);
  return res;
}

/// d loss / d logits = (probs - onehot) / B.
inline Tensor softmax_cross_entropy_backward(const Tensor& probs,
                                             const std::vector<int>& labels) {
  Tensor g = probs;
  const std::size_t batch = probs.dim(0);
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    g.at(b, static_cast<std::size_t>(labels[b])) -= 1.0;
    for (std::size_t c = 0; c < probs.dim(1); ++c) g.at(b, c) *= inv_b;
  }
  return g;
}

/// Row-wise softmax (inference-side probabilities from logits).
inline Tensor softmax_rows(const Tensor& logits) {
  Tensor p(logits.shape());
  const std::size_t classes = logits.shape().back();
  const std::size_t rows = logits.size() / classes;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = logits.data() + r * classes;
    double* out = p.data() + r * classes;
    double mx = in[0];
    for (std::size_t c = 1; c < classes; ++c) mx = std::max(mx, in[c]);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    for (std::size_t c = 0; c < classes; ++c) out[c] /= sum;
  }
  return p;
}

inline std::size_t argmax_row(const double* row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

}  // namespace surformer::nn
