// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_GRADCHECK_HPP
#define LCUMINI_GRADCHECK_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "lcumini/tensor.hpp"

namespace lcumini {

/// Compares backprop gradients of a scalar function against central differences.
///
/// `loss_fn` must rebuild its graph from the current parameter values on every
/// call. Returns max over all parameter elements of
/// |analytic - numeric| / (|analytic| + |numeric| + 1e-12).
template <typename T>
T finite_diff_check(const std::function<Tensor<T>()>& loss_fn, std::vector<Tensor<T>> params, T epsilon) {
  if (!(epsilon > T{0})) throw ContractError("finite_diff_check: epsilon must be positive");
  for (auto& p : params) p.zero_grad();
  const Tensor<T> loss = loss_fn();
  if (!std::isfinite(loss.item())) throw EvaluationError("finite_diff_check: loss is not finite");
  loss.backward();

  auto evaluate = [&]() {
    NoGradGuard no_grad;
    const T v = loss_fn().item();
    if (!std::isfinite(v)) throw EvaluationError("finite_diff_check: perturbed loss is not finite");
    return v;
  };

  T worst{0};
  for (auto& p : params) {
    std::vector<T> analytic = p.has_grad() ? std::vector<T>(p.grad().begin(), p.grad().end())
                                           : std::vector<T>(p.numel(), T{0});
    auto values = p.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T saved = values[i];
      values[i] = saved + epsilon;
      const T up = evaluate();
      values[i] = saved - epsilon;
      const T down = evaluate();
      values[i] = saved;
      const T numeric = (up - down) / (T{2} * epsilon);
      const T err = std::abs(analytic[i] - numeric) / (std::abs(analytic[i]) + std::abs(numeric) + T{1e-12});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace lcumini

#endif  // LCUMINI_GRADCHECK_HPP
