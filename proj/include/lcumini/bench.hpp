// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_BENCH_HPP
#define LCUMINI_BENCH_HPP

// Attention cost of the legacy 0-ref layout versus LCU++ at equal geometry.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "lcumini/flow.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/tensor.hpp"

namespace lcumini {

struct AttentionBenchRow {
  std::size_t height = 0, width = 0, patch = 0, dim = 0;
  std::size_t legacy_tokens = 0, lcupp_tokens = 0;
  std::uint64_t legacy_flops = 0, lcupp_flops = 0;
  double legacy_seconds = 0.0, lcupp_seconds = 0.0;  // medians

  double token_ratio() const { return static_cast<double>(legacy_tokens) / static_cast<double>(lcupp_tokens); }
  double flop_ratio() const { return static_cast<double>(legacy_flops) / static_cast<double>(lcupp_flops); }
  double time_ratio() const { return legacy_seconds / lcupp_seconds; }
};

/// Wall time of one single-head softmax(QK^T / sqrt(d)) V over `tokens` tokens.
inline double time_attention(std::size_t tokens, std::size_t dim, Rng& rng) {
  NoGradGuard no_grad;
  const auto q = sample_noise<float>({tokens, dim}, rng);
  const auto k = sample_noise<float>({tokens, dim}, rng);
  const auto v = sample_noise<float>({tokens, dim}, rng);
  const auto start = std::chrono::steady_clock::now();
  const auto probs = softmax(scale(matmul(q, transpose(k)), 1.0f / std::sqrt(static_cast<float>(dim))), 1);
  const auto out = matmul(probs, v);
  const auto stop = std::chrono::steady_clock::now();
  volatile float sink = out.data()[0];
  (void)sink;
  return std::chrono::duration<double>(stop - start).count();
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// Token counts come from actually assembling both layouts for an all-zero 0-ref unit.
inline AttentionBenchRow bench_attention(std::size_t height, std::size_t width, std::size_t patch, std::size_t dim,
                                         std::size_t repeats = 5, std::uint64_t seed = 0) {
  if (repeats < 5) repeats = 5;
  ConditionUnit<float> unit{Tensor<float>::zeros({kImageChannels, height, width}),
                            Tensor<float>::full({kMaskChannels, height, width}, 1.0f),
                            Tensor<float>::zeros({kImageChannels, height, width}), CuRole::target};
  const auto legacy = assemble_legacy_lcu_0ref(unit, patch);
  const auto lcupp = assemble_lcu_pp(LcuPlusPlus<float>{TextInstruction::null(), {unit}}, patch);

  AttentionBenchRow row{height, width, patch, dim};
  row.legacy_tokens = legacy.total_tokens;
  row.lcupp_tokens = lcupp.total_tokens;
  row.legacy_flops = attention_cost(legacy, dim);
  row.lcupp_flops = attention_cost(lcupp, dim);

  Rng rng(seed);
  std::vector<double> legacy_times, lcupp_times;
  time_attention(row.legacy_tokens, dim, rng);  // warm-up
  for (std::size_t r = 0; r < repeats; ++r) {
    legacy_times.push_back(time_attention(row.legacy_tokens, dim, rng));
    lcupp_times.push_back(time_attention(row.lcupp_tokens, dim, rng));
  }
  row.legacy_seconds = median(legacy_times);
  row.lcupp_seconds = median(lcupp_times);
  return row;
}

inline void write_bench_csv(std::ostream& os, const std::vector<AttentionBenchRow>& rows) {
  os << "# attention_flops = 2*T^2*d (QK^T) + 2*T^2*d (P*V)\n";
  os << "height,width,patch,dim,legacy_tokens,lcupp_tokens,token_ratio,legacy_flops,lcupp_flops,flop_ratio,"
        "legacy_seconds,lcupp_seconds,time_ratio\n";
  for (const auto& r : rows) {
    os << r.height << ',' << r.width << ',' << r.patch << ',' << r.dim << ',' << r.legacy_tokens << ',' << r.lcupp_tokens
       << ',' << r.token_ratio() << ',' << r.legacy_flops << ',' << r.lcupp_flops << ',' << r.flop_ratio() << ','
       << r.legacy_seconds << ',' << r.lcupp_seconds << ',' << r.time_ratio() << '\n';
  }
}

}  // namespace lcumini

#endif  // LCUMINI_BENCH_HPP
