#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "surformer/core/tensor.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // true selects AdamW semantics

  void validate() const {
    if (lr < 0.0) throw ValueError("adam: lr must be non-negative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
      throw ValueError("adam: betas must lie in [0,1)");
    }
  }
};

/// Bias-corrected Adam / AdamW over a fixed parameter list. Per-parameter
/// first and second moments start at zero; decoupled weight decay shrinks the
/// value before the Adam delta.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig cfg)
      : params_(std::move(params)), cfg_(cfg) {
    cfg_.validate();
    first_.reserve(params_.size());
    second_.reserve(params_.size());
    for (const Parameter* p : params_) {
      first_.emplace_back(p->value.shape(), 0.0);
      second_.emplace_back(p->value.shape(), 0.0);
    }
  }

  void step() {
    ++step_count_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, step_count_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, step_count_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter& p = *params_[i];
      if (!p.trainable) continue;
      if (!p.grad.all_finite()) {
        throw Error("adam_step: non-finite gradient at step " +
                    std::to_string(step_count_));
      }
      Tensor& m = first_[i];
      Tensor& v = second_[i];
      for (std::size_t j = 0; j < p.value.size(); ++j) {
        double g = p.grad[j];
        if (cfg_.weight_decay != 0.0) {
          if (cfg_.decoupled) {
            p.value[j] -= cfg_.lr * cfg_.weight_decay * p.value[j];
          } else {
            g += cfg_.weight_decay * p.value[j];
          }
        }
        m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
        v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        p.value[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
  }

  void zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
  }

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  int step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<Tensor> first_;
  std::vector<Tensor> second_;
  int step_count_ = 0;
};

/// Reduce-on-plateau schedule. After `patience` consecutive epochs without
/// strict improvement the rate is multiplied by `factor`, never dropping
/// below `min_lr`. Ties count as non-improvement.
class PlateauSchedule {
 public:
  enum class Mode { MinLoss, MaxAccuracy };

  PlateauSchedule(int patience, double factor, double min_lr, Mode mode)
      : patience_(patience), factor_(factor), min_lr_(min_lr), mode_(mode) {
    if (factor <= 0.0 || factor >= 1.0) {
      throw ValueError("plateau: factor must lie in (0,1)");
    }
    best_ = (mode == Mode::MinLoss) ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity();
  }

  /// Feeds one epoch metric; returns the (possibly reduced) learning rate.
  double update(double epoch_metric, double current_lr) {
    const bool improved = (mode_ == Mode::MinLoss) ? epoch_metric < best_
                                                   : epoch_metric > best_;
    if (improved) {
      best_ = epoch_metric;
      wait_ = 0;
      return current_lr;
    }
    if (++wait_ >= patience_) {
      wait_ = 0;
      return std::max(current_lr * factor_, min_lr_);
    }
    return current_lr;
  }

  double best() const { return best_; }
  int wait() const { return wait_; }

 private:
  int patience_;
  double factor_;
  double min_lr_;
  Mode mode_;
  double best_;
  int wait_ = 0;
};

/// Early stopping on a maximized validation metric, snapshotting all
/// parameters (including non-trainable state) at every improvement so the
/// best epoch can be restored bit-for-bit.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true when training should stop. Call once per epoch.
  bool update(double val_metric, const std::vector<Parameter*>& params) {
    ++epoch_;
    if (val_metric > best_metric_) {
      best_metric_ = val_metric;
      best_epoch_ = epoch_;
      wait_ = 0;
      snapshot_.clear();
      snapshot_.reserve(params.size());
      for (const Parameter* p : params) snapshot_.push_back(p->value);
      return false;
    }
    return ++wait_ >= patience_;
  }

  void restore(const std::vector<Parameter*>& params) const {
    if (snapshot_.size() != params.size()) {
      throw StateError("early_stopping: no snapshot to restore");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i]->value = snapshot_[i];
    }
  }

  bool has_snapshot() const { return !snapshot_.empty(); }
  double best_metric() const { return best_metric_; }
  int best_epoch() const { return best_epoch_; }
  int wait() const { return wait_; }

 private:
  int patience_;
  int epoch_ = 0;
  int wait_ = 0;
  int best_epoch_ = 0;
  double best_metric_ = -std::numeric_limits<double>::infinity();
  std::vector<Tensor> snapshot_;
};

}  // namespace surformer::nn
