#pragma once

#include <string>
#include <vector>

#include "surformer/core/error.hpp"

namespace surformer::eval {

/// Per-class and macro-averaged classification metrics plus the confusion
/// matrix (rows = truth, columns = prediction). Zero-denominator metrics are
/// defined as 0, and macro averages run over all classes.
struct MetricsReport {
  std::string model;
  std::size_t n_classes = 0;
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::size_t> confusion;  // row-major n_classes x n_classes

  std::size_t confusion_at(std::size_t truth, std::size_t pred) const {
    return confusion[truth * n_classes + pred];
  }
};

inline MetricsReport compute_metrics(const std::vector<int>& predictions,
                                     const std::vector<int>& truth,
                                     std::size_t n_classes) {
  if (predictions.size() != truth.size()) {
    throw DimensionError("compute_metrics: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(truth.size()) + " labels");
  }
  if (predictions.empty()) throw ValueError("compute_metrics: empty input");

  MetricsReport r;
  r.n_classes = n_classes;
  r.n_samples = predictions.size();
  r.confusion.assign(n_classes * n_classes, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto p = static_cast<std::size_t>(predictions[i]);
    if (t >= n_classes || p >= n_classes) {
      throw ValueError("compute_metrics: label outside [0," + std::to_string(n_classes) +
                       ") at index " + std::to_string(i));
    }
    ++r.confusion[t * n_classes + p];
  }

  std::size_t correct = 0;
  r.precision.assign(n_classes, 0.0);
  r.recall.assign(n_classes, 0.0);
  r.f1.assign(n_classes, 0.0);
  for (std::size_t c = 0; c < n_classes; ++c) {
    const double tp = static_cast<double>(r.confusion[c * n_classes + c]);
    correct += r.confusion[c * n_classes + c];
    double fp = 0.0, fn = 0.0;
    for (std::size_t o = 0; o < n_classes; ++o) {
      if (o == c) continue;
      fp += static_cast<double>(r.confusion[o * n_classes + c]);
      fn += static_cast<double>(r.confusion[c * n_classes + o]);
    }
    r.precision[c] = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    r.recall[c] = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    r.f1[c] = r.precision[c] + r.recall[c] > 0.0
                  ? 2.0 * r.precision[c] * r.recall[c] / (r.precision[c] + r.recall[c])
                  : 0.0;
    r.macro_precision += r.precision[c];
    r.macro_recall += r.recall[c];
    r.macro_f1 += r.f1[c];
  }
  r.macro_precision /= static_cast<double>(n_classes);
  r.macro_recall /= static_cast<double>(n_classes);
  r.macro_f1 /= static_cast<double>(n_classes);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n_samples);
  return r;
}

}  // namespace surformer::eval
