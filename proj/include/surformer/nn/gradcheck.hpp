#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "surformer/core/tensor.hpp"
#include "surformer/nn/parameter.hpp"

namespace surformer::nn {

/// Central finite differences against the gradients already accumulated in
/// `params`. `loss_fn` must recompute the scalar loss from the current
/// parameter values (and be deterministic, so dropout must be off). Returns
/// the max over all checked elements of |a-n| / max(|a|,|n|,1e-8).
inline double finite_difference_check(const std::vector<Parameter*>& params,
                                      const std::function<double()>& loss_fn,
                                      double h = 1e-5) {
  double max_rel_err = 0.0;
  for (Parameter* p : params) {
    if (!p->trainable) continue;
    for (std::size_t j = 0; j < p->value.size(); ++j) {
      const double saved = p->value[j];
      p->value[j] = saved + h;
      const double lp = loss_fn();
      p->value[j] = saved - h;
      const double lm = loss_fn();
      p->value[j] = saved;
      const double numeric = (lp - lm) / (2.0 * h);
      if (!std::isfinite(numeric)) {
        throw Error("finite_difference_check: non-finite numeric gradient");
      }
      const double analytic = p->grad[j];
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      max_rel_err = std::max(max_rel_err, std::fabs(analytic - numeric) / denom);
    }
  }
  return max_rel_err;
}

}  // namespace surformer::nn
