#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "surformer/core/error.hpp"
#include "surformer/core/tensor.hpp"
#include "surformer/nn/snapshot.hpp"

namespace surformer::pca {

/// PCA model from an SVD of the centered data. Component rows are
/// orthonormal; the sign convention makes each row's largest-magnitude entry
/// positive so fits are reproducible.
struct PcaModel {
  std::vector<double> mean;              // [D]
  Tensor components;                     // [K, D]
  std::vector<double> explained_variance;  // [K], non-increasing
  double total_variance = 0.0;           // total variance of the centered fit data
  std::size_t k = 0;
  std::size_t input_dim = 0;

  void save(const std::string& path) const {
    Tensor mean_t = Tensor::from({mean.size()}, mean);
    Tensor ev_t = Tensor::from({explained_variance.size()}, explained_variance);
    Tensor tv_t({1}, total_variance);
    nn::save_weights(path, {{"mean", &mean_t},
                            {"components", &components},
                            {"explained_variance", &ev_t},
                            {"total_variance", &tv_t}});
  }

  static PcaModel load(const std::string& path) {
    auto m = nn::load_weights_map(path);
    PcaModel model;
    model.mean = m.at("mean").vec();
    model.components = m.at("components");
    model.explained_variance = m.at("explained_variance").vec();
    model.total_variance = m.at("total_variance")[0];
    model.k = model.components.dim(0);
    model.input_dim = model.components.dim(1);
    return model;
  }
};

inline PcaModel fit_pca(const Tensor& x, std::size_t k) {
  if (x.rank() != 2) throw DimensionError("fit_pca: expected [N,D] matrix");
  const std::size_t n = x.dim(0);
  const std::size_t d = x.dim(1);
  if (n < 2) throw DataError("fit_pca: need at least 2 rows");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw ValueError("fit_pca: k=" + std::to_string(k) + " outside [1, min(N-1,D)=" +
                     std::to_string(std::min(n - 1, d)) + "]");
  }
  if (!x.all_finite()) throw DataError("fit_pca: non-finite input");

  Eigen::MatrixXd centered(n, d);
  PcaModel model;
  model.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += x.at(i, j);
  }
  for (std::size_t j = 0; j < d; ++j) model.mean[j] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      centered(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          x.at(i, j) - model.mean[j];
    }
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();  // D x min(N,D)

  const double denom = static_cast<double>(n - 1);
  model.total_variance = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    model.total_variance += sigma(i) * sigma(i) / denom;
  }
  model.k = k;
  model.input_dim = d;
  model.components = Tensor({k, d});
  model.explained_variance.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    model.explained_variance[i] = sigma(static_cast<Eigen::Index>(i)) *
                                  sigma(static_cast<Eigen::Index>(i)) / denom;
    // Sign convention: flip so the largest-magnitude entry is positive.
    Eigen::Index arg_max = 0;
    v.col(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff(&arg_max);
    const double flip = v(arg_max, static_cast<Eigen::Index>(i)) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      model.components.at(i, j) = flip * v(static_cast<Eigen::Index>(j),
                                           static_cast<Eigen::Index>(i));
    }
  }
  return model;
}

/// y = components * (x - mean).
inline std::vector<double> pca_transform(const PcaModel& model,
                                         const std::vector<double>& x) {
  if (x.size() != model.input_dim) {
    throw DimensionError("pca_transform: input has " + std::to_string(x.size()) +
                         " dims, model expects " + std::to_string(model.input_dim));
  }
  std::vector<double> y(model.k, 0.0);
  for (std::size_t i = 0; i < model.k; ++i) {
    const double* row = model.components.data() + i * model.input_dim;
    double s = 0.0;
    for (std::size_t j = 0; j < model.input_dim; ++j) {
      s += row[j] * (x[j] - model.mean[j]);
    }
    y[i] = s;
  }
  return y;
}

inline Tensor pca_transform_batch(const PcaModel& model, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != model.input_dim) {
    throw DimensionError("pca_transform: batch " + x.shape_str() +
                         " does not match model input dim " +
                         std::to_string(model.input_dim));
  }
  Tensor y({x.dim(0), model.k});
  std::vector<double> row(model.input_dim);
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < model.input_dim; ++j) row[j] = x.at(i, j);
    const std::vector<double> t = pca_transform(model, row);
    for (std::size_t j = 0; j < model.k; ++j) y.at(i, j) = t[j];
  }
  return y;
}

/// Fractions of the fit data's total variance captured per component.
inline std::vector<double> explained_variance_ratio(const PcaModel& model,
                                                    double total_variance) {
  if (total_variance <= 0.0) {
    throw ValueError("explained_variance_ratio: total variance must be positive");
  }
  std::vector<double> ratios(model.explained_variance.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    ratios[i] = model.explained_variance[i] / total_variance;
  }
  return ratios;
}

inline std::vector<double> explained_variance_ratio(const PcaModel& model) {
  return explained_variance_ratio(model, model.total_variance);
}

// ---------------------------------------------------------------------------
// Embedding matrix I/O. Text format: header "EMB v1 N D" then N rows of D
// space-separated decimals (printed with round-trip precision). The binary
// alternative is the SFV1-W1 container with a single "embeddings" entry.
// ---------------------------------------------------------------------------

inline void save_embeddings_text(const std::string& path, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("save_embeddings: expected [N,D]");
  std::ofstream os(path);
  if (!os) throw IoError("save_embeddings: cannot open " + path);
  os << "EMB v1 " << x.dim(0) << ' ' << x.dim(1) << '\n';
  char buf[32];
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < x.dim(1); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", x.at(i, j));
      if (j) os << ' ';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw IoError("save_embeddings: write failed for " + path);
}

inline void save_embeddings_binary(const std::string& path, const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("save_embeddings: expected [N,D]");
  nn::save_weights(path, {{"embeddings", &x}});
}

inline Tensor load_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("load_embeddings: cannot open " + path);
  std::string head;
  std::getline(is, head);
  if (head.rfind("EMB v1 ", 0) != 0) {
    // Fall back to the binary container.
    is.close();
    auto m = nn::load_weights_map(path);
    const auto it = m.find("embeddings");
    if (it == m.end() || it->second.rank() != 2) {
      throw DataError("load_embeddings: " + path +
                      " holds no [N,D] 'embeddings' entry");
    }
    if (!it->second.all_finite()) {
      throw DataError("load_embeddings: non-finite value in " + path);
    }
    return it->second;
  }
  std::size_t n = 0, d = 0;
  if (std::sscanf(head.c_str(), "EMB v1 %zu %zu", &n, &d) != 2 || n == 0 || d == 0) {
    throw DataError("load_embeddings: malformed header '" + head + "'");
  }
  Tensor x({n, d});
  std::string line;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(is, line)) {
      throw DataError("load_embeddings: truncated file, expected " +
                      std::to_string(n) + " rows, got " + std::to_string(i));
    }
    std::size_t count = 0;
    const char* p = line.c_str();
    char* endp = nullptr;
    while (*p) {
      const double v = std::strtod(p, &endp);
      if (endp == p) break;
      if (count < d) x.at(i, count) = v;
      ++count;
      p = endp;
    }
    if (count != d) {
      throw DataError("load_embeddings: row " + std::to_string(i) + " has " +
                      std::to_string(count) + " values, expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(x.at(i, j))) {
        throw DataError("load_embeddings: non-finite value at row " + std::to_string(i));
      }
    }
  }
  return x;
}

}  // namespace surformer::pca
