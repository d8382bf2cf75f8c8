#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "surformer/core/rng.hpp"
#include "surformer/tactile/features.hpp"

namespace surformer::data {

/// Interleaved RGB frame, values in [0,1].
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // h * w * 3

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), pixels(h * w * 3, fill) {}

  double at(std::size_t r, std::size_t c, std::size_t ch) const {
    return pixels[(r * width + c) * 3 + ch];
  }
  double& at(std::size_t r, std::size_t c, std::size_t ch) {
    return pixels[(r * width + c) * 3 + ch];
  }
};

/// Augmentation ranges. Geometric draws are uniform; resampling is bilinear
/// with nearest-edge fill. Two presets mirror the per-modality policies.
struct AugmentPolicy {
  double rotation_deg = 0.0;
  double shift_frac = 0.0;
  double zoom_range = 0.0;
  bool h_flip = false;
  bool v_flip = false;
  double brightness_lo = 1.0;
  double brightness_hi = 1.0;
  double channel_shift = 0.0;
  enum class Fill { Nearest } fill = Fill::Nearest;

  static AugmentPolicy vision() {
    return {25.0, 0.10, 0.05, true, false, 0.8, 1.2, 0.1, Fill::Nearest};
  }

  static AugmentPolicy tactile() {
    return {20.0, 0.10, 0.05, true, false, 0.9, 1.1, 0.0, Fill::Nearest};
  }

  static AugmentPolicy identity() { return AugmentPolicy{}; }
};

namespace detail {

template <typename Img>
struct ImageTraits;

template <>
struct ImageTraits<tactile::GrayImage> {
  static constexpr std::size_t channels = 1;
  static double get(const tactile::GrayImage& img, std::size_t r, std::size_t c,
                    std::size_t) {
    return img.at(r, c);
  }
  static void set(tactile::GrayImage& img, std::size_t r, std::size_t c, std::size_t,
                  double v) {
    img.at(r, c) = v;
  }
  static tactile::GrayImage make(std::size_t h, std::size_t w) {
    return tactile::GrayImage(h, w);
  }
};

template <>
struct ImageTraits<RgbImage> {
  static constexpr std::size_t channels = 3;
  static double get(const RgbImage& img, std::size_t r, std::size_t c, std::size_t ch) {
    return img.at(r, c, ch);
  }
  static void set(RgbImage& img, std::size_t r, std::size_t c, std::size_t ch, double v) {
    img.at(r, c, ch) = v;
  }
  static RgbImage make(std::size_t h, std::size_t w) { return RgbImage(h, w); }
};

}  // namespace detail

/// Rotation (degrees, about the image center), translation (pixels) and zoom,
/// resampled bilinearly with coordinates clamped to the frame (nearest-edge
/// fill).
template <typename Img>
Img warp_image(const Img& img, double angle_deg, double shift_r, double shift_c,
               double zoom) {
  using T = detail::ImageTraits<Img>;
  Img out = T::make(img.height, img.width);
  const double angle = angle_deg * M_PI / 180.0;
  const double cos_a = std::cos(angle);
  const double sin_a = std::sin(angle);
  const double cr = static_cast<double>(img.height - 1) / 2.0;
  const double cc = static_cast<double>(img.width - 1) / 2.0;
  const double max_r = static_cast<double>(img.height - 1);
  const double max_c = static_cast<double>(img.width - 1);

  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      // Inverse map: undo shift, then rotation and zoom about the center.
      const double dr = (static_cast<double>(r) - cr - shift_r) / zoom;
      const double dc = (static_cast<double>(c) - cc - shift_c) / zoom;
      double src_r = cos_a * dr + sin_a * dc + cr;
      double src_c = -sin_a * dr + cos_a * dc + cc;
      src_r = std::clamp(src_r, 0.0, max_r);
      src_c = std::clamp(src_c, 0.0, max_c);

      const auto r0 = static_cast<std::size_t>(src_r);
      const auto c0 = static_cast<std::size_t>(src_c);
      const std::size_t r1 = std::min(r0 + 1, img.height - 1);
      const std::size_t c1 = std::min(c0 + 1, img.width - 1);
      const double fr = src_r - static_cast<double>(r0);
      const double fc = src_c - static_cast<double>(c0);
      for (std::size_t ch = 0; ch < T::channels; ++ch) {
        const double v00 = T::get(img, r0, c0, ch);
        const double v01 = T::get(img, r0, c1, ch);
        const double v10 = T::get(img, r1, c0, ch);
        const double v11 = T::get(img, r1, c1, ch);
        const double v = (1.0 - fr) * ((1.0 - fc) * v00 + fc * v01) +
                         fr * ((1.0 - fc) * v10 + fc * v11);
        T::set(out, r, c, ch, v);
      }
    }
  }
  return out;
}

template <typename Img>
Img flip_horizontal(const Img& img) {
  using T = detail::ImageTraits<Img>;
  Img out = T::make(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      for (std::size_t ch = 0; ch < T::channels; ++ch) {
        T::set(out, r, c, ch, T::get(img, r, img.width - 1 - c, ch));
      }
    }
  }
  return out;
}

template <typename Img>
Img flip_vertical(const Img& img) {
  using T = detail::ImageTraits<Img>;
  Img out = T::make(img.height, img.width);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      for (std::size_t ch = 0; ch < T::channels; ++ch) {
        T::set(out, r, c, ch, T::get(img, img.height - 1 - r, c, ch));
      }
    }
  }
  return out;
}

/// One stochastic augmentation draw. Draw order is fixed: angle, row shift,
/// column shift, zoom, flips (where enabled), brightness, channel shifts
/// (RGB only). Output pixels are clipped to [0,1].
template <typename Img>
Img augment_image(const Img& img, const AugmentPolicy& policy, Rng& rng) {
  using T = detail::ImageTraits<Img>;
  const double angle = rng.uniform(-policy.rotation_deg, policy.rotation_deg);
  const double shift_r =
      rng.uniform(-policy.shift_frac, policy.shift_frac) * static_cast<double>(img.height);
  const double shift_c =
      rng.uniform(-policy.shift_frac, policy.shift_frac) * static_cast<double>(img.width);
  const double zoom = rng.uniform(1.0 - policy.zoom_range, 1.0 + policy.zoom_range);

  Img out = warp_image(img, angle, shift_r, shift_c, zoom);
  if (policy.h_flip && rng.bernoulli(0.5)) out = flip_horizontal(out);
  if (policy.v_flip && rng.bernoulli(0.5)) out = flip_vertical(out);

  const double brightness = rng.uniform(policy.brightness_lo, policy.brightness_hi);
  double shift[3] = {0.0, 0.0, 0.0};
  if constexpr (T::channels == 3) {
    for (double& s : shift) {
      s = rng.uniform(-policy.channel_shift, policy.channel_shift);
    }
  }
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    double v = out.pixels[i] * brightness;
    if constexpr (T::channels == 3) v += shift[i % 3];
    out.pixels[i] = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

}  // namespace surformer::data
