#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "surformer/core/rng.hpp"
#include "surformer/core/tensor.hpp"
#include "surformer/data/augment.hpp"
#include "surformer/tactile/features.hpp"

namespace surformer::data {

/// Surface material labels; the ordering is fixed everywhere labels appear.
enum class SurfaceClass : int {
  Concrete = 0,
  Wood = 1,
  Brick = 2,
  SyntheticFabric = 3,
  Grass = 4,
};

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::array<const char*, kNumClasses> kClassNames = {
    "concrete", "wood", "brick", "synthetic_fabric", "grass"};

/// Initial per-class sample counts of the unbalanced corpus.
inline constexpr std::array<std::size_t, kNumClasses> kInitialClassCounts = {
    288, 364, 661, 364, 600};

inline constexpr std::size_t kBalancedPerClass = 1000;

/// Procedural texture parameters for one class. spatial_frequency counts
/// noise lattice cells across the frame; blobs model localized pressure
/// contacts.
struct ClassTextureProfile {
  double base_intensity = 0.5;
  double noise_std = 0.05;
  double spatial_frequency = 16.0;
  double blob_count = 2.0;
  double blob_pressure = 0.3;
};

/// Calibrated so the five classes separate cleanly in the engineered tactile
/// feature space (margins are verified by the generator calibration test).
inline std::array<ClassTextureProfile, kNumClasses> default_profiles() {
  return {{
      {0.45, 0.16, 96.0, 3.0, 0.45},   // concrete: fine grain, strong gradients
      {0.50, 0.015, 10.0, 1.0, 0.22},  // wood: smooth wide grain
      {0.62, 0.04, 4.0, 2.0, 0.32},    // brick: coarse high-contrast patches
      {0.25, 0.004, 20.0, 1.0, 0.10},  // synthetic fabric: flat and uniform
      {0.38, 0.09, 48.0, 7.0, 0.60},   // grass: dense bright contact spots
  }};
}

namespace detail {

/// Band-limited amplitude of the lattice noise; shared by all classes.
inline constexpr double kValueNoiseAmplitude = 0.20;

/// Bilinear value noise over a seeded (n+1)x(n+1) lattice of [-1,1] values.
class ValueNoise {
 public:
  ValueNoise(std::size_t cells, Rng& rng) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
    for (double& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double sample(double u, double v) const {
    const double x = u * static_cast<double>(cells_);
    const double y = v * static_cast<double>(cells_);
    const auto x0 = std::min(static_cast<std::size_t>(x), cells_ - 1);
    const auto y0 = std::min(static_cast<std::size_t>(y), cells_ - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const std::size_t stride = cells_ + 1;
    const double v00 = lattice_[y0 * stride + x0];
    const double v01 = lattice_[y0 * stride + x0 + 1];
    const double v10 = lattice_[(y0 + 1) * stride + x0];
    const double v11 = lattice_[(y0 + 1) * stride + x0 + 1];
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
           fy * ((1.0 - fx) * v10 + fx * v11);
  }

 private:
  std::size_t cells_;
  std::vector<double> lattice_;
};

}  // namespace detail

/// One procedural tactile frame: base intensity + band-limited lattice noise
/// at the class frequency + Gaussian pressure blobs + white noise, clipped to
/// [0,1].
inline tactile::GrayImage generate_tactile_image(const ClassTextureProfile& profile,
                                                 std::size_t height, std::size_t width,
                                                 Rng& rng) {
  const auto cells = static_cast<std::size_t>(std::max(1.0, profile.spatial_frequency));
  detail::ValueNoise noise(cells, rng);

  struct Blob {
    double r, c, sigma, amp;
  };
  std::vector<Blob> blobs;
  const auto blob_count = static_cast<std::size_t>(std::lround(profile.blob_count));
  blobs.reserve(blob_count);
  const double min_dim = static_cast<double>(std::min(height, width));
  for (std::size_t i = 0; i < blob_count; ++i) {
    Blob b;
    b.r = rng.uniform(0.18, 0.82) * static_cast<double>(height);
    b.c = rng.uniform(0.18, 0.82) * static_cast<double>(width);
    b.sigma = (0.035 + 0.035 * rng.uniform()) * min_dim;
    b.amp = profile.blob_pressure * (0.85 + 0.3 * rng.uniform());
    blobs.push_back(b);
  }

  tactile::GrayImage img(height, width);
  const double inv_h = 1.0 / static_cast<double>(height - 1);
  const double inv_w = 1.0 / static_cast<double>(width - 1);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      double v = profile.base_intensity +
                 detail::kValueNoiseAmplitude *
                     noise.sample(static_cast<double>(c) * inv_w,
                                  static_cast<double>(r) * inv_h);
      if (profile.noise_std > 0.0) v += rng.normal(0.0, profile.noise_std);
      img.at(r, c) = v;
    }
  }
  for (const Blob& b : blobs) {
    const double reach = 4.0 * b.sigma;
    const auto r_lo = static_cast<std::size_t>(std::max(0.0, b.r - reach));
    const auto r_hi = std::min(height, static_cast<std::size_t>(std::max(0.0, b.r + reach)) + 1);
    const auto c_lo = static_cast<std::size_t>(std::max(0.0, b.c - reach));
    const auto c_hi = std::min(width, static_cast<std::size_t>(std::max(0.0, b.c + reach)) + 1);
    const double inv_two_sigma_sq = 1.0 / (2.0 * b.sigma * b.sigma);
    for (std::size_t r = r_lo; r < r_hi; ++r) {
      for (std::size_t c = c_lo; c < c_hi; ++c) {
        const double dr = static_cast<double>(r) - b.r;
        const double dc = static_cast<double>(c) - b.c;
        img.at(r, c) += b.amp * std::exp(-(dr * dr + dc * dc) * inv_two_sigma_sq);
      }
    }
  }
  for (double& p : img.pixels) p = std::clamp(p, 0.0, 1.0);
  return img;
}

/// Class-tinted procedural RGB frame sharing the tactile texture statistics;
/// the stand-in for real scene imagery in the image-mode archive.
inline RgbImage generate_vision_image(int label, const ClassTextureProfile& profile,
                                      std::size_t height, std::size_t width, Rng& rng) {
  static constexpr double kPalette[5][3] = {
      {0.55, 0.55, 0.58},  // concrete
      {0.55, 0.38, 0.22},  // wood
      {0.62, 0.30, 0.24},  // brick
      {0.78, 0.74, 0.80},  // synthetic fabric
      {0.28, 0.52, 0.25},  // grass
  };
  const std::size_t cls = static_cast<std::size_t>(label) % 5;
  const auto cells = static_cast<std::size_t>(std::max(1.0, profile.spatial_frequency));
  detail::ValueNoise noise(cells, rng);
  RgbImage img(height, width);
  const double inv_h = 1.0 / static_cast<double>(height - 1);
  const double inv_w = 1.0 / static_cast<double>(width - 1);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double n = detail::kValueNoiseAmplitude *
                       noise.sample(static_cast<double>(c) * inv_w,
                                    static_cast<double>(r) * inv_h);
      const double w = profile.noise_std > 0.0 ? rng.normal(0.0, profile.noise_std) : 0.0;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        img.at(r, c, ch) = std::clamp(kPalette[cls][ch] + n + w, 0.0, 1.0);
      }
    }
  }
  return img;
}

/// Synthetic 2048-D embedding source with a planted 64-D signal subspace:
/// class means live in the subspace, isotropic noise fills the ambient
/// space. The subspace basis and class means derive from a fixed internal
/// seed, so every dataset shares one class geometry; per-sample draws come
/// from the caller's stream. Variance constants are tuned so PCA to 64
/// components retains about 90.7% of total variance.
class EmbeddingGenerator {
 public:
  explicit EmbeddingGenerator(std::size_t dim = 2048, std::size_t signal_dim = 64,
                              std::size_t n_classes = kNumClasses)
      : dim_(dim), signal_dim_(signal_dim), basis_(dim * signal_dim) {
    Rng rng(kBasisSeed);
    // Random orthonormal basis via Gram-Schmidt on Gaussian columns.
    std::vector<std::vector<double>> cols(signal_dim, std::vector<double>(dim));
    for (auto& col : cols) {
      for (double& v : col) v = rng.normal();
    }
    for (std::size_t i = 0; i < signal_dim; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < dim; ++k) dot += cols[i][k] * cols[j][k];
        for (std::size_t k = 0; k < dim; ++k) cols[i][k] -= dot * cols[j][k];
      }
      double norm = 0.0;
      for (double v : cols[i]) norm += v * v;
      norm = std::sqrt(norm);
      for (double& v : cols[i]) v /= norm;
      for (std::size_t k = 0; k < dim; ++k) basis_[k * signal_dim + i] = cols[i][k];
    }
    // Class means: fixed-norm directions in the signal subspace.
    const double mean_norm = kClassMeanScale * std::sqrt(static_cast<double>(signal_dim));
    class_means_.assign(n_classes, std::vector<double>(signal_dim));
    for (auto& mu : class_means_) {
      double norm = 0.0;
      for (double& v : mu) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double& v : mu) v *= mean_norm / norm;
    }
  }

  std::vector<double> sample(int label, Rng& rng) const {
    const auto& mu = class_means_.at(static_cast<std::size_t>(label));
    std::vector<double> z(signal_dim_);
    for (std::size_t i = 0; i < signal_dim_; ++i) {
      z[i] = mu[i] + kWithinClassStd * rng.normal();
    }
    std::vector<double> x(dim_);
    for (std::size_t k = 0; k < dim_; ++k) {
      const double* row = basis_.data() + k * signal_dim_;
      double s = 0.0;
      for (std::size_t i = 0; i < signal_dim_; ++i) s += row[i] * z[i];
      x[k] = s + kAmbientNoiseStd * rng.normal();
    }
    return x;
  }

  std::size_t dim() const { return dim_; }
  std::size_t signal_dim() const { return signal_dim_; }

  static constexpr std::uint64_t kBasisSeed = 0x5f0ba515u;
  static constexpr double kClassMeanScale = 17.0;   // per-dim scale of class means
  static constexpr double kWithinClassStd = 6.3;
  static constexpr double kAmbientNoiseStd = 1.0;

 private:
  std::size_t dim_;
  std::size_t signal_dim_;
  std::vector<double> basis_;  // dim x signal_dim, row-major
  std::vector<std::vector<double>> class_means_;
};

/// Deterministic image-to-embedding featurizer for image-mode archives: the
/// frame is average-pooled to a 16x16x3 grid and passed through a fixed
/// seeded random projection. No pretrained network is involved.
class ImageEmbedder {
 public:
  explicit ImageEmbedder(std::size_t dim = 2048) : dim_(dim), pooled_(16 * 16 * 3) {
    Rng rng(kProjectionSeed);
    const std::size_t in_dim = pooled_.size();
    projection_.resize(dim * in_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_dim));
    for (double& v : projection_) v = rng.normal() * scale;
  }

  std::vector<double> embed(const RgbImage& img) {
    const std::size_t grid = 16;
    std::fill(pooled_.begin(), pooled_.end(), 0.0);
    std::vector<std::size_t> counts(grid * grid, 0);
    for (std::size_t r = 0; r < img.height; ++r) {
      const std::size_t gr = r * grid / img.height;
      for (std::size_t c = 0; c < img.width; ++c) {
        const std::size_t gc = c * grid / img.width;
        ++counts[gr * grid + gc];
        for (std::size_t ch = 0; ch < 3; ++ch) {
          pooled_[(gr * grid + gc) * 3 + ch] += img.at(r, c, ch);
        }
      }
    }
    for (std::size_t cell = 0; cell < grid * grid; ++cell) {
      if (counts[cell] == 0) continue;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        pooled_[cell * 3 + ch] /= static_cast<double>(counts[cell]);
      }
    }
    std::vector<double> out(dim_);
    const std::size_t in_dim = pooled_.size();
    for (std::size_t i = 0; i < dim_; ++i) {
      const double* row = projection_.data() + i * in_dim;
      double s = 0.0;
      for (std::size_t j = 0; j < in_dim; ++j) s += row[j] * pooled_[j];
      out[i] = s;
    }
    return out;
  }

  std::size_t dim() const { return dim_; }

  static constexpr std::uint64_t kProjectionSeed = 0xe0b5eedu;

 private:
  std::size_t dim_;
  std::vector<double> pooled_;
  std::vector<double> projection_;
};

}  // namespace surformer::data
