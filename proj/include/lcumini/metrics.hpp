// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_METRICS_HPP
#define LCUMINI_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "lcumini/sampler.hpp"
#include "lcumini/tasks.hpp"

namespace lcumini {

/// Reported PSNR for a perfect reconstruction.
inline constexpr double kPsnrCapDb = 99.0;

/// -10 log10(mse) on the [0, 1] scale, capped at 99 dB.
inline double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, -10.0 * std::log10(mse));
}

/// MSE over all channels of the pixels where mask == 1.
inline double masked_mse(const Tensor<float>& generated, const Tensor<float>& target, const Tensor<float>& mask) {
  if (generated.shape() != target.shape() || mask.dim(1) != target.dim(1) || mask.dim(2) != target.dim(2)) {
    throw ShapeError("masked_mse: geometry mismatch");
  }
  const std::size_t plane = mask.numel();
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < target.numel(); ++i) {
    if (mask.data()[i % plane] == 0.0f) continue;
    const double d = static_cast<double>(generated.data()[i]) - static_cast<double>(target.data()[i]);
    acc += d * d;
    ++n;
  }
  if (n == 0) throw ContractError("masked_mse: mask is empty");
  return acc / static_cast<double>(n);
}

struct EvalSummary {
  std::size_t samples = 0;
  double mse = 0.0;      // mean of per-sample masked MSE
  double psnr_db = 0.0;  // mean of per-sample masked PSNR
};

inline GenerateRequest<float> request_for(const TaskSample& s) {
  return {s.instruction, s.references, s.input_image, s.mask};
}

/// Generates every sample (seed = base seed + index) and scores the masked region.
inline EvalSummary evaluate_split(const ModelWeights<float>& w, const std::vector<TaskSample>& split, SampleConfig cfg) {
  EvalSummary out;
  const std::uint64_t base = cfg.seed;
  for (std::size_t i = 0; i < split.size(); ++i) {
    cfg.seed = base + i;
    const auto result = generate(w, request_for(split[i]), cfg);
    const double mse = masked_mse(result.image, split[i].target_image, split[i].mask);
    out.mse += mse;
    out.psnr_db += psnr_from_mse(mse);
  }
  out.samples = split.size();
  if (out.samples > 0) {
    out.mse /= static_cast<double>(out.samples);
    out.psnr_db /= static_cast<double>(out.samples);
  }
  return out;
}

}  // namespace lcumini

#endif  // LCUMINI_METRICS_HPP
