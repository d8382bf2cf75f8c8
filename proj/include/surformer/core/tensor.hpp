#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "surformer/core/error.hpp"

namespace surformer {

/// Dense row-major tensor of doubles. All training and test computation runs
/// in 64-bit; 32-bit is supported only as a storage dtype in weight snapshots.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  static Tensor from(std::vector<std::size_t> shape, std::vector<double> data) {
    if (element_count(shape) != data.size()) {
      throw DimensionError("Tensor::from: shape " + shape_string(shape) +
                           " expects " + std::to_string(element_count(shape)) +
                           " values, got " + std::to_string(data.size()));
    }
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = std::move(data);
    return t;
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// 2-D accessors (row-major).
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  /// 3-D accessors.
  double& at(std::size_t b, std::size_t r, std::size_t c) {
    return data_[(b * shape_[1] + r) * shape_[2] + c];
  }
  double at(std::size_t b, std::size_t r, std::size_t c) const {
    return data_[(b * shape_[1] + r) * shape_[2] + c];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

  /// Returns a tensor with identical data and a new shape of equal size.
  Tensor reshaped(std::vector<std::size_t> new_shape) const {
    if (element_count(new_shape) != data_.size()) {
      throw DimensionError("reshape: cannot view " + shape_string(shape_) +
                           " as " + shape_string(new_shape));
    }
    Tensor t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  std::string shape_str() const { return shape_string(shape_); }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
  }

  static std::string shape_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (i) os << ",";
      os << shape[i];
    }
    os << "]";
    return os.str();
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Raw matrix kernels. A, B, C are row-major. Loops are ordered for contiguous
// inner access on a single core.
// ---------------------------------------------------------------------------

/// C (m x n) = A (m x k) * B (k x n); accumulates when acc is true.
inline void gemm_nn(const double* A, const double* B, double* C, std::size_t m,
                    std::size_t k, std::size_t n, bool acc = false) {
  if (!acc) std::fill(C, C + m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double a = a_row[p];
      if (a == 0.0) continue;
      const double* b_row = B + p * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

/// C (m x n) = A (m x k) * B^T where B is (n x k).
inline void gemm_nt(const double* A, const double* B, double* C, std::size_t m,
                    std::size_t k, std::size_t n, bool acc = false) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* a_row = A + i * k;
    double* c_row = C + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* b_row = B + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a_row[p] * b_row[p];
      c_row[j] = acc ? c_row[j] + s : s;
    }
  }
}

/// C (m x n) = A^T * B where A is (k x m) and B is (k x n).
inline void gemm_tn(const double* A, const double* B, double* C, std::size_t m,
                    std::size_t k, std::size_t n, bool acc = false) {
  if (!acc) std::fill(C, C + m * n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double* a_row = A + p * m;
    const double* b_row = B + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double a = a_row[i];
      if (a == 0.0) continue;
      double* c_row = C + i * n;
      for (std::size_t j = 0; j < n; ++j) c_row[j] += a * b_row[j];
    }
  }
}

/// 2-D matrix product of tensors.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + a.shape_str() +
                         " x " + b.shape_str());
  }
  Tensor c({a.dim(0), b.dim(1)});
  gemm_nn(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

}  // namespace surformer
