// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_OPTIM_HPP
#define LCUMINI_OPTIM_HPP

#include <cmath>
#include <vector>

#include "lcumini/tensor.hpp"

namespace lcumini {

struct ClipResult {
  double norm_before = 0.0;
  double norm_after = 0.0;
  double scale = 1.0;
};

/// Global L2 norm over the gradients of `params` (missing gradients count as zero).
template <typename T>
double global_grad_norm(const std::vector<Tensor<T>>& params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

/// Rescales all gradients by clip_norm / norm when the global norm exceeds clip_norm.
template <typename T>
ClipResult clip_gradients(std::vector<Tensor<T>>& params, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ContractError("clip_gradients: clip_norm must be positive");
  ClipResult r;
  r.norm_before = global_grad_norm(params);
  if (!std::isfinite(r.norm_before)) throw TrainingError("clip_gradients: non-finite gradient norm");
  if (r.norm_before > clip_norm) {
    r.scale = clip_norm / r.norm_before;
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (T& g : p.mutable_grad()) g = static_cast<T>(static_cast<double>(g) * r.scale);
    }
  }
  r.norm_after = global_grad_norm(params);
  return r;
}

struct AdamWOptions {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay: w <- w - lr*wd*w, then the bias-corrected Adam update.
template <typename T>
class AdamW {
 public:
  AdamW(std::vector<Tensor<T>> params, AdamWOptions options) : params_(std::move(params)), options_(options) {
    for (const auto& p : params_) {
      first_.emplace_back(p.numel(), 0.0);
      second_.emplace_back(p.numel(), 0.0);
    }
  }

  void step() {
    ++steps_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    const double decay = 1.0 - options_.lr * options_.weight_decay;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto w = params_[i].mutable_data();
      const bool has_grad = params_[i].has_grad();
      const auto g = params_[i].grad();
      auto& m = first_[i];
      auto& v = second_[i];
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double gj = has_grad ? static_cast<double>(g[j]) : 0.0;
        m[j] = options_.beta1 * m[j] + (1.0 - options_.beta1) * gj;
        v[j] = options_.beta2 * v[j] + (1.0 - options_.beta2) * gj * gj;
        const double mhat = m[j] / bc1;
        const double vhat = v[j] / bc2;
        double wj = static_cast<double>(w[j]) * decay;
        wj -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
        w[j] = static_cast<T>(wj);
      }
    }
  }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  std::size_t steps() const { return steps_; }
  const std::vector<Tensor<T>>& params() const { return params_; }
  const AdamWOptions& options() const { return options_; }

 private:
  std::vector<Tensor<T>> params_;
  AdamWOptions options_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  std::size_t steps_ = 0;
};

}  // namespace lcumini

#endif  // LCUMINI_OPTIM_HPP
