#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "surformer/core/rng.hpp"
#include "surformer/nn/loss.hpp"
#include "surformer/nn/optim.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::model {

/// Optimization recipe for a classifier. The two named presets carry the
/// reference settings: the multimodal model trains with Adam at 5e-6 and
/// plateau/early-stop callbacks on validation loss/accuracy; the tactile
/// transformer with AdamW at 1e-3, weight decay 0.01 and a plateau schedule
/// on validation loss.
struct TrainSpec {
  enum class Optimizer { Adam, AdamW };

  Optimizer optimizer = Optimizer::Adam;
  double lr = 5e-6;
  int epochs = 100;
  std::size_t batch_size = 32;
  double weight_decay = 0.0;
  int plateau_patience = 8;
  double plateau_factor = 0.5;
  double plateau_min_lr = 1e-7;
  nn::PlateauSchedule::Mode plateau_mode = nn::PlateauSchedule::Mode::MinLoss;
  int early_stop_patience = 15;  // 0 disables early stopping
  std::uint64_t seed = 0;

  static TrainSpec surformer_defaults() { return TrainSpec{}; }

  static TrainSpec tactile_transformer_defaults() {
    TrainSpec s;
    s.optimizer = Optimizer::AdamW;
    s.lr = 1e-3;
    s.epochs = 150;
    s.batch_size = 64;
    s.weight_decay = 0.01;
    s.plateau_patience = 10;
    s.plateau_factor = 0.5;
    s.plateau_min_lr = 0.0;
    s.early_stop_patience = 0;
    return s;
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  bool stopped_early = false;

  std::string to_csv() const {
    std::string out = "epoch,train_loss,train_acc,val_loss,val_acc,lr\n";
    char buf[192];
    for (const EpochStats& e : epochs) {
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", e.epoch,
                    e.train_loss, e.train_acc, e.val_loss, e.val_acc, e.lr);
      out += buf;
    }
    return out;
  }

  void save_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("history: cannot open " + path);
    os << to_csv();
    if (!os) throw IoError("history: write failed for " + path);
  }
};

/// Model hooks for the generic loop: `forward` gathers the given sample
/// indices and returns logits, `backward` propagates the logit gradient.
struct ClassifierHooks {
  std::function<Tensor(const std::vector<std::size_t>&, bool)> forward;
  std::function<void(const Tensor&)> backward;
};

namespace detail {

/// Consecutive chunks of batch_size; a trailing singleton is folded into the
/// previous chunk so batch normalization always sees at least two samples.
inline std::vector<std::vector<std::size_t>> make_batches(
    const std::vector<std::size_t>& order, std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
};

inline EvalResult evaluate_split(const ClassifierHooks& hooks,
                                 const std::vector<int>& labels,
                                 const std::vector<std::size_t>& indices,
                                 std::size_t batch_size) {
  EvalResult r;
  std::size_t correct = 0;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, indices.size());
    const std::vector<std::size_t> batch(indices.begin() + start, indices.begin() + end);
    std::vector<int> batch_labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) batch_labels[i] = labels[batch[i]];
    const Tensor logits = hooks.forward(batch, false);
    const auto ce = nn::softmax_cross_entropy(logits, batch_labels);
    loss_sum += ce.loss * static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::size_t pred =
          nn::argmax_row(ce.probs.data() + i * ce.probs.dim(1), ce.probs.dim(1));
      if (static_cast<int>(pred) == batch_labels[i]) ++correct;
    }
  }
  r.loss = loss_sum / static_cast<double>(indices.size());
  r.accuracy = static_cast<double>(correct) / static_cast<double>(indices.size());
  return r;
}

}  // namespace detail

/// Mini-batch loop with seeded per-epoch shuffling, plateau learning-rate
/// reduction, early stopping on validation accuracy with best-weight
/// restoration, and a per-epoch history record.
inline TrainHistory train_classifier(const ClassifierHooks& hooks,
                                     const std::vector<int>& labels,
                                     const std::vector<std::size_t>& train_idx,
                                     const std::vector<std::size_t>& val_idx,
                                     nn::ParamRegistry& registry,
                                     const TrainSpec& spec) {
  if (train_idx.empty() || val_idx.empty()) {
    throw ValueError("train: empty train or validation split");
  }
  nn::AdamConfig opt_cfg;
  opt_cfg.lr = spec.lr;
  opt_cfg.weight_decay = spec.weight_decay;
  opt_cfg.decoupled = spec.optimizer == TrainSpec::Optimizer::AdamW;
  const std::vector<nn::Parameter*> params = registry.parameters();
  nn::Adam optimizer(params, opt_cfg);
  nn::PlateauSchedule plateau(spec.plateau_patience, spec.plateau_factor,
                              spec.plateau_min_lr, spec.plateau_mode);
  nn::EarlyStopping early(spec.early_stop_patience);

  TrainHistory history;
  std::vector<std::size_t> order = train_idx;
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    Rng shuffle_rng = Rng::fork(spec.seed, static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double train_loss_sum = 0.0;
    std::size_t train_correct = 0;
    std::size_t batch_no = 0;
    for (const auto& batch : detail::make_batches(order, spec.batch_size)) {
      ++batch_no;
      std::vector<int> batch_labels(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) batch_labels[i] = labels[batch[i]];
      registry.zero_grad();
      const Tensor logits = hooks.forward(batch, true);
      const auto ce = nn::softmax_cross_entropy(logits, batch_labels);
      if (!std::isfinite(ce.loss)) {
        throw Error("training diverged: non-finite loss at epoch " +
                    std::to_string(epoch) + ", batch " + std::to_string(batch_no));
      }
      hooks.backward(nn::softmax_cross_entropy_backward(ce.probs, batch_labels));
      optimizer.step();
      train_loss_sum += ce.loss * static_cast<double>(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::size_t pred =
            nn::argmax_row(ce.probs.data() + i * ce.probs.dim(1), ce.probs.dim(1));
        if (static_cast<int>(pred) == batch_labels[i]) ++train_correct;
      }
    }

    const auto val = detail::evaluate_split(hooks, labels, val_idx, spec.batch_size);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = train_loss_sum / static_cast<double>(order.size());
    stats.train_acc =
        static_cast<double>(train_correct) / static_cast<double>(order.size());
    stats.val_loss = val.loss;
    stats.val_acc = val.accuracy;
    stats.lr = optimizer.lr();
    history.epochs.push_back(stats);

    const double monitored = spec.plateau_mode == nn::PlateauSchedule::Mode::MinLoss
                                 ? val.loss
                                 : val.accuracy;
    optimizer.set_lr(plateau.update(monitored, optimizer.lr()));

    if (spec.early_stop_patience > 0) {
      if (early.update(val.accuracy, params)) {
        early.restore(params);
        history.best_epoch = early.best_epoch();
        history.stopped_early = true;
        break;
      }
      history.best_epoch = early.best_epoch();
    } else {
      history.best_epoch = epoch;
    }
  }
  return history;
}

}  // namespace surformer::model
