#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "surformer/core/error.hpp"

namespace surformer::eval {

/// Batch-inference latency in milliseconds per sample. The protocol is fixed:
/// warmup batches run first and are discarded, then each repeat times one
/// full batch on the monotonic clock.
struct LatencyReport {
  std::string model;
  std::size_t batch_size = 100;
  std::size_t warmup_batches = 10;
  std::size_t repeats = 50;
  double median_ms_per_sample = 0.0;
  double mean_ms_per_sample = 0.0;
  double p95_ms_per_sample = 0.0;
  std::size_t parameter_count = 0;
};

/// `run_batch(rep)` must execute inference over one batch of `batch_size`
/// inputs. Reps 0..warmup-1 are warmup; the following `repeats` are timed.
inline LatencyReport benchmark_inference(const std::function<void(std::size_t)>& run_batch,
                                         std::size_t n_inputs, std::size_t batch_size = 100,
                                         std::size_t warmup = 10, std::size_t repeats = 50,
                                         std::size_t parameter_count = 0,
                                         const std::string& model_name = "") {
  if (n_inputs < batch_size) {
    throw ValueError("benchmark: " + std::to_string(n_inputs) + " inputs is fewer than batch size " +
                     std::to_string(batch_size));
  }
  if (repeats == 0) throw ValueError("benchmark: need at least one repeat");

  using clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) run_batch(i);

  std::vector<double> per_sample_ms;
  per_sample_ms.reserve(repeats);
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = clock::now();
    run_batch(warmup + i);
    const auto t1 = clock::now();
    const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    per_sample_ms.push_back(ms / static_cast<double>(batch_size));
  }
  std::sort(per_sample_ms.begin(), per_sample_ms.end());

  LatencyReport r;
  r.model = model_name;
  r.batch_size = batch_size;
  r.warmup_batches = warmup;
  r.repeats = repeats;
  const std::size_t n = per_sample_ms.size();
  r.median_ms_per_sample = n % 2 == 1
                               ? per_sample_ms[n / 2]
                               : 0.5 * (per_sample_ms[n / 2 - 1] + per_sample_ms[n / 2]);
  double sum = 0.0;
  for (double v : per_sample_ms) sum += v;
  r.mean_ms_per_sample = sum / static_cast<double>(n);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  r.p95_ms_per_sample = per_sample_ms[std::min(n - 1, rank == 0 ? 0 : rank - 1)];
  r.parameter_count = parameter_count;
  return r;
}

}  // namespace surformer::eval
