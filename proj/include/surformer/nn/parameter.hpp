#pragma once

#include <string>
#include <utility>
#include <vector>

#include "surformer/core/tensor.hpp"

namespace surformer::nn {

/// A tensor with an accumulated gradient of the same shape. Non-trainable
/// parameters (batch-norm running statistics) participate in snapshots but
/// are skipped by optimizers and parameter counts.
struct Parameter {
  Tensor value;
  Tensor grad;
  bool trainable = true;

  Parameter() = default;
  explicit Parameter(Tensor v, bool trainable_ = true)
      : value(std::move(v)), grad(value.shape(), 0.0), trainable(trainable_) {}

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

/// Ordered (name, parameter) registry shared by optimizers, snapshots,
/// early-stopping and parameter counting.
class ParamRegistry {
 public:
  void add(const std::string& name, Parameter* p) { items_.emplace_back(name, p); }

  const std::vector<std::pair<std::string, Parameter*>>& items() const {
    return items_;
  }

  std::vector<Parameter*> parameters() const {
    std::vector<Parameter*> out;
    out.reserve(items_.size());
    for (const auto& [name, p] : items_) out.push_back(p);
    return out;
  }

  void zero_grad() {
    for (auto& [name, p] : items_) p->zero_grad();
  }

 private:
  std::vector<std::pair<std::string, Parameter*>> items_;
};

/// Sum of element counts over trainable parameters.
inline std::size_t count_parameters(const std::vector<Parameter*>& params) {
  std::size_t n = 0;
  for (const Parameter* p : params) {
    if (p->trainable) n += p->size();
  }
  return n;
}

inline std::size_t count_parameters(const ParamRegistry& reg) {
  return count_parameters(reg.parameters());
}

}  // namespace surformer::nn
