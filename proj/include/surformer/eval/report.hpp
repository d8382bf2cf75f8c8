#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "surformer/eval/benchmark.hpp"
#include "surformer/eval/metrics.hpp"

namespace surformer::eval {

inline nlohmann::json metrics_to_json(const MetricsReport& m) {
  return {{"model", m.model},
          {"n_classes", m.n_classes},
          {"n_samples", m.n_samples},
          {"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"macro_precision", m.macro_precision},
          {"macro_recall", m.macro_recall},
          {"macro_f1", m.macro_f1},
          {"confusion", m.confusion}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.model = j.at("model").get<std::string>();
  m.n_classes = j.at("n_classes").get<std::size_t>();
  m.n_samples = j.at("n_samples").get<std::size_t>();
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<std::vector<double>>();
  m.recall = j.at("recall").get<std::vector<double>>();
  m.f1 = j.at("f1").get<std::vector<double>>();
  m.macro_precision = j.at("macro_precision").get<double>();
  m.macro_recall = j.at("macro_recall").get<double>();
  m.macro_f1 = j.at("macro_f1").get<double>();
  m.confusion = j.at("confusion").get<std::vector<std::size_t>>();
  return m;
}

inline nlohmann::json latency_to_json(const LatencyReport& l) {
  return {{"model", l.model},
          {"batch_size", l.batch_size},
          {"warmup_batches", l.warmup_batches},
          {"repeats", l.repeats},
          {"median_ms_per_sample", l.median_ms_per_sample},
          {"mean_ms_per_sample", l.mean_ms_per_sample},
          {"p95_ms_per_sample", l.p95_ms_per_sample},
          {"parameter_count", l.parameter_count}};
}

inline LatencyReport latency_from_json(const nlohmann::json& j) {
  LatencyReport l;
  l.model = j.at("model").get<std::string>();
  l.batch_size = j.at("batch_size").get<std::size_t>();
  l.warmup_batches = j.at("warmup_batches").get<std::size_t>();
  l.repeats = j.at("repeats").get<std::size_t>();
  l.median_ms_per_sample = j.at("median_ms_per_sample").get<double>();
  l.mean_ms_per_sample = j.at("mean_ms_per_sample").get<double>();
  l.p95_ms_per_sample = j.at("p95_ms_per_sample").get<double>();
  l.parameter_count = j.at("parameter_count").get<std::size_t>();
  return l;
}

inline void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("report: cannot open " + path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("report: write failed for " + path);
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("report: cannot open " + path);
  nlohmann::json j;
  is >> j;
  return j;
}

/// One comparison row; latency and parameter cells may be absent when no
/// timing run matched the model.
struct ComparisonRow {
  std::string model;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  std::size_t parameters = 0;
  double inference_ms = -1.0;  // negative = not measured
};

/// Joins metrics with latency reports by model name, keeping metric order.
inline std::vector<ComparisonRow> build_comparison(
    const std::vector<MetricsReport>& metrics, const std::vector<LatencyReport>& latencies) {
  std::vector<ComparisonRow> rows;
  for (const MetricsReport& m : metrics) {
    ComparisonRow row;
    row.model = m.model;
    row.precision = m.macro_precision;
    row.recall = m.macro_recall;
    row.f1 = m.macro_f1;
    row.accuracy = m.accuracy;
    for (const LatencyReport& l : latencies) {
      if (l.model == m.model) {
        row.parameters = l.parameter_count;
        row.inference_ms = l.median_ms_per_sample;
        break;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

/// Writes <prefix>.json and an aligned <prefix>.txt table with columns
/// Model | Precision | Recall | F1 | Accuracy | Parameters | Inference (ms).
inline void emit_report(const std::vector<MetricsReport>& metrics,
                        const std::vector<LatencyReport>& latencies,
                        const std::string& prefix) {
  if (metrics.empty()) throw ValueError("report: no metrics to report");
  const std::vector<ComparisonRow> rows = build_comparison(metrics, latencies);

  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const ComparisonRow& r : rows) {
    j["rows"].push_back({{"model", r.model},
                         {"precision", r.precision},
                         {"recall", r.recall},
                         {"f1", r.f1},
                         {"accuracy", r.accuracy},
                         {"parameters", r.parameters},
                         {"inference_ms", r.inference_ms}});
  }
  save_json(prefix + ".json", j);

  std::size_t name_width = 5;
  for (const ComparisonRow& r : rows) name_width = std::max(name_width, r.model.size());
  std::ofstream os(prefix + ".txt");
  if (!os) throw IoError("report: cannot open " + prefix + ".txt");
  char line[512];
  std::snprintf(line, sizeof(line), "%-*s | %9s | %9s | %9s | %9s | %10s | %14s\n",
                static_cast<int>(name_width), "Model", "Precision", "Recall", "F1",
                "Accuracy", "Parameters", "Inference (ms)");
  os << line;
  os << std::string(name_width + 3 + 12 * 4 + 13 + 17, '-') << '\n';
  for (const ComparisonRow& r : rows) {
    char ms[32];
    if (r.inference_ms >= 0.0) {
      std::snprintf(ms, sizeof(ms), "%.4f", r.inference_ms);
    } else {
      std::snprintf(ms, sizeof(ms), "n/a");
    }
    std::snprintf(line, sizeof(line), "%-*s | %9.4f | %9.4f | %9.4f | %9.4f | %10zu | %14s\n",
                  static_cast<int>(name_width), r.model.c_str(), r.precision, r.recall,
                  r.f1, r.accuracy, r.parameters, ms);
    os << line;
  }
  if (!os) throw IoError("report: write failed for " + prefix + ".txt");
}

inline std::vector<ComparisonRow> parse_report_json(const std::string& path) {
  const nlohmann::json j = load_json(path);
  std::vector<ComparisonRow> rows;
  for (const auto& item : j.at("rows")) {
    ComparisonRow r;
    r.model = item.at("model").get<std::string>();
    r.precision = item.at("precision").get<double>();
    r.recall = item.at("recall").get<double>();
    r.f1 = item.at("f1").get<double>();
    r.accuracy = item.at("accuracy").get<double>();
    r.parameters = item.at("parameters").get<std::size_t>();
    r.inference_ms = item.at("inference_ms").get<double>();
    rows.push_back(r);
  }
  return rows;
}

}  // namespace surformer::eval
