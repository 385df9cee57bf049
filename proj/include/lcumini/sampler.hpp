// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_SAMPLER_HPP
#define LCUMINI_SAMPLER_HPP

// Mask-fill sampling: every CU's noise channels start from a standard normal
// draw and are integrated jointly with explicit Euler from t = 0 to t = 1.
// Reference reconstructions are discarded; the target is composited so that
// pixels outside the mask come straight from the input image.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "lcumini/flow.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/model.hpp"
#include "lcumini/tensor.hpp"

namespace lcumini {

struct SampleConfig {
  std::size_t steps = 20;
  double guidance_scale = 1.0;
  std::uint64_t seed = 0;
};

/// v_uncond + w * (v_cond - v_uncond); w = 1 and w = 0 return the operands exactly.
template <typename T>
Tensor<T> cfg_combine(const Tensor<T>& v_cond, const Tensor<T>& v_uncond, double omega) {
  if (v_cond.shape() != v_uncond.shape()) {
    throw ShapeError("cfg_combine: " + shape_str(v_cond.shape()) + " vs " + shape_str(v_uncond.shape()));
  }
  if (omega == 1.0) return v_cond;
  if (omega == 0.0) return v_uncond;
  std::vector<T> out(v_cond.numel());
  const T w = static_cast<T>(omega);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = v_uncond.data()[i] + w * (v_cond.data()[i] - v_uncond.data()[i]);
  }
  return Tensor<T>::from(v_cond.shape(), std::move(out));
}

template <typename T>
using VelocityFn = std::function<std::vector<Tensor<T>>(const std::vector<Tensor<T>>&, T)>;

/// x <- x + (1/steps) * v(x, k/steps) for k = 0 .. steps-1.
template <typename T>
std::vector<Tensor<T>> euler_integrate(const VelocityFn<T>& velocity, std::vector<Tensor<T>> x, std::size_t steps) {
  if (steps == 0) throw ContractError("euler_integrate: steps must be at least 1");
  const T dt = T{1} / static_cast<T>(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    const T t = static_cast<T>(k) / static_cast<T>(steps);
    const auto v = velocity(x, t);
    if (v.size() != x.size()) throw ShapeError("euler_integrate: velocity returned the wrong number of states");
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (v[i].shape() != x[i].shape()) {
        throw ShapeError("euler_integrate: velocity " + shape_str(v[i].shape()) + " for state " + shape_str(x[i].shape()));
      }
      std::vector<T> next(x[i].numel());
      for (std::size_t j = 0; j < next.size(); ++j) {
        next[j] = x[i].data()[j] + dt * v[i].data()[j];
        if (!std::isfinite(next[j])) throw EvaluationError("euler_integrate: state became non-finite");
      }
      x[i] = Tensor<T>::from(x[i].shape(), std::move(next));
    }
  }
  return x;
}

/// mask * generated + (1 - mask) * input, evaluated as an exact per-pixel select.
template <typename T>
Tensor<T> composite_masked(const Tensor<T>& generated, const Tensor<T>& input, const Tensor<T>& mask) {
  if (generated.shape() != input.shape() || generated.rank() != 3 || mask.rank() != 3 || mask.dim(0) != 1 ||
      mask.dim(1) != input.dim(1) || mask.dim(2) != input.dim(2)) {
    throw ShapeError("composite_masked: generated " + shape_str(generated.shape()) + ", input " +
                     shape_str(input.shape()) + ", mask " + shape_str(mask.shape()));
  }
  const std::size_t plane = mask.numel();
  std::vector<T> out(input.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T m = mask.data()[i % plane];
    if (m != T{0} && m != T{1}) throw ContractError("composite_masked: mask must be binary");
    out[i] = m == T{1} ? generated.data()[i] : input.data()[i];
  }
  return Tensor<T>::from(input.shape(), std::move(out));
}

template <typename T>
Tensor<T> clamp01(const Tensor<T>& x) {
  std::vector<T> out(x.numel());
  std::transform(x.data().begin(), x.data().end(), out.begin(), [](T v) { return std::clamp(v, T{0}, T{1}); });
  return Tensor<T>::from(x.shape(), std::move(out));
}

template <typename T>
struct GenerateRequest {
  TextInstruction instruction;
  std::vector<Tensor<T>> references;  // each 3 x H x W
  Tensor<T> input_image;              // 3 x H x W; all zeros for reference generation
  Tensor<T> mask;                     // 1 x H x W
};

template <typename T>
struct GenerateResult {
  Tensor<T> image;
  std::size_t forward_calls = 0;
};

template <typename T>
GenerateResult<T> generate(const ModelWeights<T>& w, const GenerateRequest<T>& req, const SampleConfig& cfg) {
  if (cfg.steps == 0) throw ContractError("generate: steps must be at least 1");
  const auto& mc = w.config;
  const Shape image_shape{kImageChannels, mc.image_size, mc.image_size};
  if (req.input_image.shape() != image_shape) {
    throw ShapeError("generate: input image " + shape_str(req.input_image.shape()) + " does not match model geometry " +
                     shape_str(image_shape));
  }
  for (const auto& r : req.references) {
    if (r.shape() != image_shape) throw ShapeError("generate: reference " + shape_str(r.shape()) + " does not match model geometry");
  }
  NoGradGuard no_grad;

  const auto ones = Tensor<T>::full({kMaskChannels, mc.image_size, mc.image_size}, T{1});
  LcuPlusPlus<T> lcu;
  lcu.instruction = req.instruction;
  for (const auto& r : req.references) lcu.units.push_back({r, ones, Tensor<T>(), CuRole::reference});
  lcu.units.push_back({req.input_image, req.mask, Tensor<T>(), CuRole::target});

  Rng rng(cfg.seed);
  std::vector<Tensor<T>> x;
  for (std::size_t i = 0; i < lcu.size(); ++i) x.push_back(sample_noise<T>(image_shape, rng));

  GenerateResult<T> result;
  const VelocityFn<T> velocity = [&](const std::vector<Tensor<T>>& state, T t) {
    for (std::size_t i = 0; i < state.size(); ++i) lcu.units[i].noisy = state[i];
    auto cond = forward(w, lcu, t, lcu.instruction);
    ++result.forward_calls;
    if (cfg.guidance_scale == 1.0) return cond;
    const auto uncond = forward(w, lcu, t, TextInstruction::null());
    ++result.forward_calls;
    for (std::size_t i = 0; i < cond.size(); ++i) cond[i] = cfg_combine(cond[i], uncond[i], cfg.guidance_scale);
    return cond;
  };
  const auto final_state = euler_integrate(velocity, std::move(x), cfg.steps);
  result.image = clamp01(composite_masked(final_state.back(), req.input_image, req.mask));
  return result;
}

}  // namespace lcumini

#endif  // LCUMINI_SAMPLER_HPP
