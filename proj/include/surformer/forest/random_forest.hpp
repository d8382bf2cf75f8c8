#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "surformer/core/error.hpp"
#include "surformer/core/rng.hpp"
#include "surformer/core/tensor.hpp"

namespace surformer::forest {

struct ForestConfig {
  std::size_t n_trees = 200;
  std::size_t max_depth = 15;
  std::size_t min_samples_split = 5;
  std::size_t min_samples_leaf = 2;
  enum class MaxFeatures { Sqrt, All } max_features = MaxFeatures::Sqrt;
  std::uint64_t seed = 0;
  bool bootstrap = true;

  void validate() const {
    if (n_trees < 1) throw ValueError("forest: n_trees must be >= 1");
    if (min_samples_split < 2 * min_samples_leaf) {
      throw ValueError("forest: min_samples_split must be >= 2 * min_samples_leaf");
    }
  }
};

/// Split node (feature >= 0) or leaf (feature < 0, class_counts populated).
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
  std::size_t n_samples = 0;
  int left = -1;
  int right = -1;
  std::vector<double> class_counts;

  bool is_leaf() const { return feature < 0; }
};

namespace detail {

inline double gini(const std::vector<std::size_t>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::size_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(n);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

}  // namespace detail

class DecisionTree {
 public:
  void fit(const Tensor& x, const std::vector<int>& y,
           const std::vector<std::size_t>& sample_indices, std::size_t n_classes,
           const ForestConfig& cfg, std::uint64_t tree_seed) {
    nodes_.clear();
    n_classes_ = n_classes;
    total_samples_ = sample_indices.size();
    std::vector<std::size_t> idx = sample_indices;
    grow(x, y, idx, 0, idx.size(), 0, 1, cfg, tree_seed);
  }

  std::vector<double> predict_proba(const double* sample) const {
    int node = 0;
    while (!nodes_[node].is_leaf()) {
      node = sample[nodes_[node].feature] <= nodes_[node].threshold
                 ? nodes_[node].left
                 : nodes_[node].right;
    }
    const auto& counts = nodes_[node].class_counts;
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    std::vector<double> probs(counts.size(), 0.0);
    for (std::size_t c = 0; c < counts.size(); ++c) probs[c] = counts[c] / total;
    return probs;
  }

  /// Accumulates (node fraction) * (impurity decrease) per split feature.
  void add_importance(std::vector<double>& importance) const {
    for (const TreeNode& node : nodes_) {
      if (!node.is_leaf()) {
        importance[static_cast<std::size_t>(node.feature)] +=
            (static_cast<double>(node.n_samples) / static_cast<double>(total_samples_)) *
            node.impurity_decrease;
      }
    }
  }

  bool has_split() const {
    return !nodes_.empty() && !nodes_[0].is_leaf();
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  std::size_t total_samples() const { return total_samples_; }
  void set_total_samples(std::size_t n) { total_samples_ = n; }

 private:
  // Grows the subtree over idx[begin, end). Node RNG streams are derived from
  // (tree seed, node path id) so a depth-limited tree is a prefix of a deeper
  // one grown from the same seed.
  int grow(const Tensor& x, const std::vector<int>& y, std::vector<std::size_t>& idx,
           std::size_t begin, std::size_t end, std::size_t depth,
           std::uint64_t node_id, const ForestConfig& cfg, std::uint64_t tree_seed) {
    const std::size_t n = end - begin;
    std::vector<std::size_t> counts(n_classes_, 0);
    for (std::size_t i = begin; i < end; ++i) {
      ++counts[static_cast<std::size_t>(y[idx[i]])];
    }
    const double impurity = detail::gini(counts, n);

    const int node_index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[node_index].n_samples = n;

    const bool pure = impurity <= 0.0;
    if (pure || depth >= cfg.max_depth || n < cfg.min_samples_split) {
      make_leaf(node_index, counts);
      return node_index;
    }

    const std::size_t n_features = x.dim(1);
    std::size_t k = cfg.max_features == ForestConfig::MaxFeatures::All
                        ? n_features
                        : static_cast<std::size_t>(
                              std::ceil(std::sqrt(static_cast<double>(n_features))));
    k = std::min(k, n_features);

    Rng rng = Rng::fork(tree_seed, node_id);
    std::vector<std::size_t> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(features[i], features[i + rng.uniform_index(n_features - i)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_decrease = 1e-12;
    std::vector<std::pair<double, int>> column(n);
    std::vector<std::size_t> left_counts(n_classes_);
    for (std::size_t fi = 0; fi < k; ++fi) {
      const std::size_t f = features[fi];
      for (std::size_t i = 0; i < n; ++i) {
        column[i] = {x.at(idx[begin + i], f), y[idx[begin + i]]};
      }
      std::sort(column.begin(), column.end());
      std::fill(left_counts.begin(), left_counts.end(), 0);
      for (std::size_t i = 1; i < n; ++i) {
        ++left_counts[static_cast<std::size_t>(column[i - 1].second)];
        if (column[i].first == column[i - 1].first) continue;
        const std::size_t nl = i, nr = n - i;
        if (nl < cfg.min_samples_leaf || nr < cfg.min_samples_leaf) continue;
        double left_sq = 0.0, right_sq = 0.0;
        for (std::size_t c = 0; c < n_classes_; ++c) {
          const double lc = static_cast<double>(left_counts[c]);
          const double rc = static_cast<double>(counts[c] - left_counts[c]);
          left_sq += lc * lc;
          right_sq += rc * rc;
        }
        const double imp_l = 1.0 - left_sq / (static_cast<double>(nl) * nl);
        const double imp_r = 1.0 - right_sq / (static_cast<double>(nr) * nr);
        const double decrease =
            impurity - (static_cast<double>(nl) * imp_l + static_cast<double>(nr) * imp_r) /
                           static_cast<double>(n);
        if (decrease > best_decrease) {
          best_decrease = decrease;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (column[i - 1].first + column[i].first);
        }
      }
    }

    if (best_feature < 0) {
      make_leaf(node_index, counts);
      return node_index;
    }

    const auto mid = std::partition(idx.begin() + begin, idx.begin() + end,
                                    [&](std::size_t s) {
                                      return x.at(s, best_feature) <= best_threshold;
                                    });
    const std::size_t split_at = static_cast<std::size_t>(mid - idx.begin());
    // Stable order within each side keeps growth deterministic.
    std::sort(idx.begin() + begin, idx.begin() + split_at);
    std::sort(idx.begin() + split_at, idx.begin() + end);

    nodes_[node_index].feature = best_feature;
    nodes_[node_index].threshold = best_threshold;
    nodes_[node_index].impurity_decrease = best_decrease;
    const int left = grow(x, y, idx, begin, split_at, depth + 1, node_id * 2, cfg, tree_seed);
    const int right = grow(x, y, idx, split_at, end, depth + 1, node_id * 2 + 1, cfg, tree_seed);
    nodes_[node_index].left = left;
    nodes_[node_index].right = right;
    return node_index;
  }

  void make_leaf(int node_index, const std::vector<std::size_t>& counts) {
    nodes_[node_index].feature = -1;
    nodes_[node_index].class_counts.assign(counts.begin(), counts.end());
  }

  std::vector<TreeNode> nodes_;
  std::size_t n_classes_ = 0;
  std::size_t total_samples_ = 0;
};

class RandomForest {
 public:
  /// Trains n_trees trees on bootstrap samples. A single-class or splitless
  /// dataset yields a degenerate single-leaf forest with the warning flag set.
  void fit(const Tensor& x, const std::vector<int>& y, std::size_t n_classes,
           const ForestConfig& cfg) {
    cfg.validate();
    if (x.rank() != 2 || x.dim(0) != y.size()) {
      throw DimensionError("forest fit: features " + x.shape_str() + " vs " +
                           std::to_string(y.size()) + " labels");
    }
    const std::size_t n = x.dim(0);
    if (n == 0) throw DataError("forest fit: empty dataset");
    for (int label : y) {
      if (label < 0 || static_cast<std::size_t>(label) >= n_classes) {
        throw ValueError("forest fit: label " + std::to_string(label) +
                         " outside [0," + std::to_string(n_classes) + ")");
      }
    }
    n_features_ = x.dim(1);
    n_classes_ = n_classes;
    cfg_ = cfg;
    degenerate_ = std::all_of(y.begin(), y.end(), [&](int l) { return l == y[0]; });

    trees_.assign(cfg.n_trees, {});
    std::vector<std::size_t> sample(n);
    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
      const std::uint64_t tree_seed = Rng::mix(cfg.seed, t);
      if (cfg.bootstrap) {
        Rng boot = Rng::fork(tree_seed, 0xb007);
        for (std::size_t i = 0; i < n; ++i) sample[i] = boot.uniform_index(n);
        std::sort(sample.begin(), sample.end());
      } else {
        std::iota(sample.begin(), sample.end(), 0);
      }
      trees_[t].fit(x, y, sample, n_classes, cfg, tree_seed);
    }
  }

  std::vector<double> predict_proba(const std::vector<double>& sample) const {
    if (sample.size() != n_features_) {
      throw DimensionError("forest predict: sample has " +
                           std::to_string(sample.size()) + " features, expected " +
                           std::to_string(n_features_));
    }
    std::vector<double> probs(n_classes_, 0.0);
    for (const DecisionTree& tree : trees_) {
      const std::vector<double> p = tree.predict_proba(sample.data());
      for (std::size_t c = 0; c < n_classes_; ++c) probs[c] += p[c];
    }
    for (double& p : probs) p /= static_cast<double>(trees_.size());
    return probs;
  }

  int predict(const std::vector<double>& sample) const {
    const std::vector<double> p = predict_proba(sample);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  /// Mean over trees of per-feature weighted impurity decrease, normalized to
  /// sum to one. A splitless forest returns all zeros (warning case).
  std::vector<double> gini_importance() const {
    std::vector<double> importance(n_features_, 0.0);
    for (const DecisionTree& tree : trees_) tree.add_importance(importance);
    for (double& v : importance) v /= static_cast<double>(trees_.size());
    const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
    if (total > 0.0) {
      for (double& v : importance) v /= total;
    }
    return importance;
  }

  bool has_any_split() const {
    return std::any_of(trees_.begin(), trees_.end(),
                       [](const DecisionTree& t) { return t.has_split(); });
  }

  bool degenerate() const { return degenerate_; }
  std::size_t n_features() const { return n_features_; }
  std::size_t n_classes() const { return n_classes_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }
  const ForestConfig& config() const { return cfg_; }

  /// Leaf-count total across trees, the forest's analogue of a parameter
  /// count for comparison tables.
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const DecisionTree& tree : trees_) {
      for (const TreeNode& node : tree.nodes()) {
        n += node.is_leaf() ? n_classes_ : 2;  // counts vs (feature, threshold)
      }
    }
    return n;
  }

  void save(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("forest save: cannot open " + path);
    os << "SFRF 1\n";
    os << "n_features " << n_features_ << "\n";
    os << "n_classes " << n_classes_ << "\n";
    os << "n_trees " << trees_.size() << "\n";
    os << "degenerate " << (degenerate_ ? 1 : 0) << "\n";
    os << std::setprecision(17);
    for (const DecisionTree& tree : trees_) {
      os << "tree " << tree.nodes().size() << ' ' << tree.total_samples() << "\n";
      for (const TreeNode& node : tree.nodes()) {
        os << node.feature << ' ' << node.threshold << ' ' << node.impurity_decrease
           << ' ' << node.n_samples << ' ' << node.left << ' ' << node.right;
        if (node.is_leaf()) {
          for (double c : node.class_counts) os << ' ' << c;
        }
        os << "\n";
      }
    }
    if (!os) throw IoError("forest save: write failed for " + path);
  }

  static RandomForest load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("forest load: cannot open " + path);
    std::string tag;
    int version = 0;
    is >> tag >> version;
    if (tag != "SFRF" || version != 1) {
      throw DataError("forest load: unrecognized format in " + path);
    }
    RandomForest f;
    std::string key;
    std::size_t n_trees = 0;
    int degenerate_flag = 0;
    is >> key >> f.n_features_ >> key >> f.n_classes_ >> key >> n_trees >> key >>
        degenerate_flag;
    f.degenerate_ = degenerate_flag != 0;
    f.trees_.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
      std::size_t n_nodes = 0, total = 0;
      is >> key >> n_nodes >> total;
      if (!is || key != "tree") throw DataError("forest load: truncated tree header");
      f.trees_[t].set_total_samples(total);
      auto& nodes = f.trees_[t].mutable_nodes();
      nodes.resize(n_nodes);
      for (TreeNode& node : nodes) {
        is >> node.feature >> node.threshold >> node.impurity_decrease >>
            node.n_samples >> node.left >> node.right;
        if (node.is_leaf()) {
          node.class_counts.resize(f.n_classes_);
          for (double& c : node.class_counts) is >> c;
        }
        if (!is) throw DataError("forest load: truncated node data");
      }
    }
    return f;
  }

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  bool degenerate_ = false;
  ForestConfig cfg_;
};

/// Indices of the k largest importances, descending, ties broken by lower
/// index.
inline std::vector<std::size_t> rank_features(const std::vector<double>& importance,
                                              std::size_t k) {
  if (k > importance.size()) {
    throw ValueError("rank_features: k=" + std::to_string(k) + " exceeds " +
                     std::to_string(importance.size()) + " features");
  }
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return importance[a] > importance[b];
  });
  order.resize(k);
  return order;
}

}  // namespace surformer::forest
