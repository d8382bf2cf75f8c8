#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include "surformer/core/error.hpp"
#include "surformer/core/tensor.hpp"

namespace surformer::tactile {

/// Grayscale tactile frame, intensities in [0,1], row-major.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w, fill) {}

  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  std::size_t size() const { return pixels.size(); }

  void validate() const {
    if (height < 8 || width < 8) {
      throw ValueError("tactile image " + std::to_string(height) + "x" +
                       std::to_string(width) + " is too small (need >= 8x8)");
    }
    if (pixels.size() != height * width) {
      throw DimensionError("tactile image: pixel buffer does not match dimensions");
    }
    for (double p : pixels) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValueError("tactile image: pixel outside [0,1]");
      }
    }
  }
};

struct TextureFeatures {
  double roughness = 0.0;
  double gradient_magnitude = 0.0;
  double contrast = 0.0;
  double uniformity = 1.0;
  double edge_density = 0.0;
};

struct PressureFeatures {
  double avg_pressure = 0.0;
  double max_pressure = 0.0;
  double contact_area = 0.0;
  double pressure_std = 0.0;
  double center_deviation = 0.0;
};

/// Ordered top-7 tactile vector. Index order is a fixed contract:
/// [roughness, gradient_magnitude, contrast, pressure_std, max_pressure,
///  center_deviation, uniformity].
struct TactileVector7 {
  std::array<double, 7> values{};

  double operator[](std::size_t i) const { return values[i]; }
};

inline constexpr std::array<const char*, 7> kTop7FeatureNames = {
    "roughness",      "gradient_magnitude", "contrast",  "pressure_std",
    "max_pressure",   "center_deviation",   "uniformity"};

/// All ten engineered features in export order (top-7 first, then the three
/// dropped by selection).
inline constexpr std::array<const char*, 10> kAllFeatureNames = {
    "roughness",        "gradient_magnitude", "contrast",     "pressure_std",
    "max_pressure",     "center_deviation",   "uniformity",   "edge_density",
    "avg_pressure",     "contact_area"};

/// Indices of the texture/roughness and pressure/contact sets within
/// kAllFeatureNames.
inline constexpr std::array<std::size_t, 5> kTextureSetIndices = {0, 1, 2, 6, 7};
inline constexpr std::array<std::size_t, 5> kPressureSetIndices = {3, 4, 5, 8, 9};

/// Extraction constants. The defaults are part of the feature definitions;
/// Sobel magnitudes are normalized by the operator's max response (4*sqrt(2)
/// per axis pair on unit-range input) so they land in [0,1].
struct FeatureConfig {
  std::size_t histogram_bins = 32;
  std::size_t contrast_tile = 7;
  double edge_threshold = 0.1;
  double contact_k = 0.5;          // contact threshold = mean + k * std
  double max_pressure_pct = 0.99;  // percentile for max_pressure
};

namespace detail {

inline double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

constexpr double kSobelMaxResponse = 5.656854249492380;  // 4 * sqrt(2)

/// Normalized Sobel magnitude at an interior pixel.
inline double sobel_magnitude(const GrayImage& img, std::size_t r, std::size_t c) {
  const auto p = [&](std::size_t rr, std::size_t cc) { return img.at(rr, cc); };
  const double gx = (p(r - 1, c + 1) + 2.0 * p(r, c + 1) + p(r + 1, c + 1)) -
                    (p(r - 1, c - 1) + 2.0 * p(r, c - 1) + p(r + 1, c - 1));
  const double gy = (p(r + 1, c - 1) + 2.0 * p(r + 1, c) + p(r + 1, c + 1)) -
                    (p(r - 1, c - 1) + 2.0 * p(r - 1, c) + p(r - 1, c + 1));
  return std::sqrt(gx * gx + gy * gy) / kSobelMaxResponse;
}

}  // namespace detail

inline TextureFeatures extract_texture_features(const GrayImage& img,
                                                const FeatureConfig& cfg = {}) {
  img.validate();
  TextureFeatures f;

  // Roughness: population std over all pixels. Accumulating in sorted order
  // makes the value exactly invariant under spatial permutation.
  {
    std::vector<double> sorted = img.pixels;
    std::sort(sorted.begin(), sorted.end());
    f.roughness = detail::population_std(sorted);
  }

  // Gradient magnitude and edge density over interior pixels.
  double grad_sum = 0.0;
  std::size_t edges = 0;
  const std::size_t interior = (img.height - 2) * (img.width - 2);
  for (std::size_t r = 1; r + 1 < img.height; ++r) {
    for (std::size_t c = 1; c + 1 < img.width; ++c) {
      const double m = detail::sobel_magnitude(img, r, c);
      grad_sum += m;
      if (m > cfg.edge_threshold) ++edges;
    }
  }
  f.gradient_magnitude = grad_sum / static_cast<double>(interior);
  f.edge_density = static_cast<double>(edges) / static_cast<double>(interior);

  // Contrast: mean per-tile population std over full tiles.
  const std::size_t ts = cfg.contrast_tile;
  const std::size_t tiles_r = img.height / ts;
  const std::size_t tiles_c = img.width / ts;
  double contrast_sum = 0.0;
  std::vector<double> tile(ts * ts);
  for (std::size_t tr = 0; tr < tiles_r; ++tr) {
    for (std::size_t tc = 0; tc < tiles_c; ++tc) {
      std::size_t i = 0;
      for (std::size_t r = 0; r < ts; ++r) {
        for (std::size_t c = 0; c < ts; ++c) {
          tile[i++] = img.at(tr * ts + r, tc * ts + c);
        }
      }
      contrast_sum += detail::population_std(tile);
    }
  }
  f.contrast = tiles_r * tiles_c ? contrast_sum / static_cast<double>(tiles_r * tiles_c) : 0.0;

  // Uniformity: sum of squared histogram probabilities.
  std::vector<std::size_t> hist(cfg.histogram_bins, 0);
  for (double p : img.pixels) {
    auto bin = static_cast<std::size_t>(p * static_cast<double>(cfg.histogram_bins));
    if (bin >= cfg.histogram_bins) bin = cfg.histogram_bins - 1;
    ++hist[bin];
  }
  double uni = 0.0;
  for (std::size_t count : hist) {
    const double p = static_cast<double>(count) / static_cast<double>(img.size());
    uni += p * p;
  }
  f.uniformity = uni;
  return f;
}

inline PressureFeatures extract_pressure_features(const GrayImage& img,
                                                  const FeatureConfig& cfg = {}) {
  img.validate();
  PressureFeatures f;
  const std::size_t n = img.size();

  // All intensity statistics run over the sorted copy so spatially permuted
  // frames produce bit-identical values.
  std::vector<double> sorted = img.pixels;
  std::sort(sorted.begin(), sorted.end());

  double mean = 0.0;
  for (double p : sorted) mean += p;
  mean /= static_cast<double>(n);
  f.avg_pressure = mean;

  double var = 0.0;
  for (double p : sorted) var += (p - mean) * (p - mean);
  const double std_all = std::sqrt(var / static_cast<double>(n));

  // Nearest-rank percentile; clamped below by the mean so the ordering
  // invariant max_pressure >= avg_pressure holds on nearly-empty frames.
  const auto rank = static_cast<std::size_t>(
      std::ceil(cfg.max_pressure_pct * static_cast<double>(n)));
  f.max_pressure = std::max(sorted[std::min(n - 1, rank == 0 ? 0 : rank - 1)], mean);

  const double tau = mean + cfg.contact_k * std_all;
  const auto first_contact = std::upper_bound(sorted.begin(), sorted.end(), tau);
  const std::vector<double> contact(first_contact, sorted.end());
  f.contact_area = (std_all == 0.0)
                       ? 0.0
                       : static_cast<double>(contact.size()) / static_cast<double>(n);
  f.pressure_std = contact.empty() ? 0.0 : detail::population_std(contact);

  double total = 0.0, wr = 0.0, wc = 0.0;
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double p = img.at(r, c);
      total += p;
      wr += p * static_cast<double>(r);
      wc += p * static_cast<double>(c);
    }
  }
  if (total > 0.0) {
    const double cr = wr / total - static_cast<double>(img.height - 1) / 2.0;
    const double cc = wc / total - static_cast<double>(img.width - 1) / 2.0;
    const double half_diag =
        0.5 * std::hypot(static_cast<double>(img.height - 1),
                         static_cast<double>(img.width - 1));
    f.center_deviation = std::hypot(cr, cc) / half_diag;
  }
  return f;
}

/// Canonical top-7 assembly; drops edge_density, avg_pressure, contact_area.
inline TactileVector7 assemble_top7(const TextureFeatures& tex,
                                    const PressureFeatures& pres) {
  TactileVector7 v;
  v.values = {tex.roughness,       tex.gradient_magnitude, tex.contrast,
              pres.pressure_std,   pres.max_pressure,      pres.center_deviation,
              tex.uniformity};
  return v;
}

/// All ten features in kAllFeatureNames order.
inline std::array<double, 10> extract_all_features(const GrayImage& img,
                                                   const FeatureConfig& cfg = {}) {
  const TextureFeatures t = extract_texture_features(img, cfg);
  const PressureFeatures p = extract_pressure_features(img, cfg);
  return {t.roughness,         t.gradient_magnitude, t.contrast,
          p.pressure_std,      p.max_pressure,       p.center_deviation,
          t.uniformity,        t.edge_density,       p.avg_pressure,
          p.contact_area};
}

/// Per-class mean/std profiles plus the Pearson correlation matrix over all
/// samples. Zero-variance columns correlate 0 off-diagonal.
struct FeatureStats {
  Tensor class_means;   // [C, F]
  Tensor class_stds;    // [C, F]
  Tensor correlation;   // [F, F]
};

inline FeatureStats compute_feature_stats(const Tensor& x, const std::vector<int>& y,
                                          std::size_t n_classes) {
  if (x.rank() != 2) throw DimensionError("feature stats: expected [N,F] matrix");
  const std::size_t n = x.dim(0);
  const std::size_t f = x.dim(1);
  if (y.size() != n) throw DimensionError("feature stats: label count mismatch");

  std::vector<std::size_t> counts(n_classes, 0);
  for (int label : y) ++counts[static_cast<std::size_t>(label)];
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] < 2) {
      throw DataError("feature stats: class " + std::to_string(c) +
                      " has fewer than 2 samples");
    }
  }

  FeatureStats s;
  s.class_means = Tensor({n_classes, f});
  s.class_stds = Tensor({n_classes, f});
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    for (std::size_t j = 0; j < f; ++j) s.class_means.at(c, j) += x.at(i, j);
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t j = 0; j < f; ++j) {
      s.class_means.at(c, j) /= static_cast<double>(counts[c]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(y[i]);
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x.at(i, j) - s.class_means.at(c, j);
      s.class_stds.at(c, j) += d * d;
    }
  }
  for (std::size_t c = 0; c < n_classes; ++c) {
    for (std::size_t j = 0; j < f; ++j) {
      s.class_stds.at(c, j) =
          std::sqrt(s.class_stds.at(c, j) / static_cast<double>(counts[c]));
    }
  }

  std::vector<double> mean(f, 0.0), stddev(f, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) mean[j] += x.at(i, j);
  }
  for (std::size_t j = 0; j < f; ++j) mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x.at(i, j) - mean[j];
      stddev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < f; ++j) stddev[j] = std::sqrt(stddev[j]);

  s.correlation = Tensor({f, f});
  for (std::size_t a = 0; a < f; ++a) {
    s.correlation.at(a, a) = 1.0;
    for (std::size_t b = a + 1; b < f; ++b) {
      double cov = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cov += (x.at(i, a) - mean[a]) * (x.at(i, b) - mean[b]);
      }
      const double denom = stddev[a] * stddev[b];
      const double r = denom > 0.0 ? cov / denom : 0.0;
      s.correlation.at(a, b) = r;
      s.correlation.at(b, a) = r;
    }
  }
  return s;
}

/// Feature table CSV export, one row per sample, all ten features.
inline void write_feature_csv(const std::string& path,
                              const std::vector<std::string>& sample_ids,
                              const std::vector<int>& labels, const Tensor& features) {
  if (features.rank() != 2 || features.dim(1) != 10) {
    throw DimensionError("feature csv: expected [N,10] matrix");
  }
  std::ofstream os(path);
  if (!os) throw IoError("feature csv: cannot open " + path);
  os << "sample_id,label";
  for (const char* name : kAllFeatureNames) os << ',' << name;
  os << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < features.dim(0); ++i) {
    os << sample_ids[i] << ',' << labels[i];
    for (std::size_t j = 0; j < 10; ++j) os << ',' << features.at(i, j);
    os << '\n';
  }
  if (!os) throw IoError("feature csv: write failed for " + path);
}

struct FeatureTable {
  std::vector<std::string> sample_ids;
  std::vector<int> labels;
  Tensor features;  // [N,10]
};

inline FeatureTable read_feature_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("feature csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw DataError("feature csv: empty file " + path);
  FeatureTable t;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 12) {
      throw DataError("feature csv: row " + std::to_string(t.labels.size() + 1) +
                      " has " + std::to_string(cells.size()) + " cells, expected 12");
    }
    t.sample_ids.push_back(cells[0]);
    t.labels.push_back(std::stoi(cells[1]));
    for (std::size_t j = 2; j < 12; ++j) values.push_back(std::stod(cells[j]));
  }
  t.features = Tensor::from({t.labels.size(), 10}, std::move(values));
  return t;
}

}  // namespace surformer::tactile
