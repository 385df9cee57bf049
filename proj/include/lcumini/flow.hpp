// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_FLOW_HPP
#define LCUMINI_FLOW_HPP

// Flow matching on the straight path x_t = (1 - t) x0 + t x1.
// t = 0 is pure noise, t = 1 is data; the target velocity is x1 - x0.

#include <random>
#include <vector>

#include "lcumini/tensor.hpp"

namespace lcumini {

using Rng = std::mt19937_64;

inline double sample_timestep(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

template <typename T>
Tensor<T> sample_noise(const Shape& shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<T> data(numel_of(shape));
  for (auto& v : data) v = static_cast<T>(normal(rng));
  return Tensor<T>::from(shape, std::move(data));
}

template <typename T>
Tensor<T> interpolate(const Tensor<T>& x0, const Tensor<T>& x1, T t) {
  if (x0.shape() != x1.shape()) {
    throw ShapeError("interpolate: " + shape_str(x0.shape()) + " vs " + shape_str(x1.shape()));
  }
  if (!(t >= T{0} && t <= T{1})) throw ContractError("interpolate: t must lie in [0, 1]");
  return add(scale(x0, T{1} - t), scale(x1, t));
}

template <typename T>
Tensor<T> velocity_target(const Tensor<T>& x0, const Tensor<T>& x1) {
  if (x0.shape() != x1.shape()) {
    throw ShapeError("velocity_target: " + shape_str(x0.shape()) + " vs " + shape_str(x1.shape()));
  }
  return sub(x1, x0);
}

template <typename T>
struct FlowState {
  T t{};
  Tensor<T> x0;
  Tensor<T> x1;
  Tensor<T> xt;

  static FlowState draw(const Tensor<T>& data, T t, Rng& rng) {
    FlowState s{t, sample_noise<T>(data.shape(), rng), data, {}};
    s.xt = interpolate(s.x0, s.x1, t);
    return s;
  }
};

struct LossBreakdown {
  double total = 0.0;
  double ref = 0.0;
  double tar = 0.0;
};

/// Differentiable loss terms; `total` is the node to call backward() on.
template <typename T>
struct LossTerms {
  Tensor<T> total;
  Tensor<T> ref;
  Tensor<T> tar;

  LossBreakdown values() const {
    return {static_cast<double>(total.item()), static_cast<double>(ref.item()), static_cast<double>(tar.item())};
  }
};

/// ref = mean over the first N-1 units of per-element MSE (0 when N = 1);
/// tar = per-element MSE of unit N; total = ref + tar.
template <typename T>
LossTerms<T> compute_loss(const std::vector<Tensor<T>>& predicted, const std::vector<Tensor<T>>& target,
                          std::size_t n_ref) {
  if (predicted.empty() || predicted.size() != target.size()) {
    throw ShapeError("compute_loss: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(target.size()) + " targets");
  }
  if (n_ref + 1 != predicted.size()) {
    throw ContractError("compute_loss: n_ref must equal the number of units minus one");
  }
  LossTerms<T> terms;
  if (n_ref == 0) {
    terms.ref = Tensor<T>::scalar(T{0});
  } else {
    Tensor<T> acc = mse(predicted[0], target[0]);
    for (std::size_t i = 1; i < n_ref; ++i) acc = add(acc, mse(predicted[i], target[i]));
    terms.ref = n_ref == 1 ? acc : scale(acc, T{1} / static_cast<T>(n_ref));
  }
  terms.tar = mse(predicted.back(), target.back());
  terms.total = add(terms.ref, terms.tar);
  return terms;
}

}  // namespace lcumini

#endif  // LCUMINI_FLOW_HPP
