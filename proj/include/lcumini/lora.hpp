// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_LORA_HPP
#define LCUMINI_LORA_HPP

#include <cmath>
#include <string>
#include <vector>

#include "lcumini/model.hpp"

namespace lcumini {

struct LoraSpec {
  std::size_t rank = 4;
  double alpha = 4.0;
  /// Linear names; "attn.q" matches every "blocks.<i>.attn.q".
  std::vector<std::string> targets;

  bool operator==(const LoraSpec&) const = default;
};

inline bool lora_target_matches(const std::string& linear_name, const std::string& target) {
  if (linear_name == target) return true;
  return linear_name.size() > target.size() + 1 &&
         linear_name.compare(linear_name.size() - target.size(), target.size(), target) == 0 &&
         linear_name[linear_name.size() - target.size() - 1] == '.';
}

/// Freezes every base parameter and adds a zero-output adapter to each targeted
/// linear map. Returns the number of trainable adapter parameters.
template <typename T>
std::size_t attach_lora(ModelWeights<T>& w, const LoraSpec& spec, std::uint64_t seed) {
  if (spec.rank == 0) throw ContractError("attach_lora: rank must be at least 1");
  if (spec.targets.empty()) throw ContractError("attach_lora: no target maps named");
  auto linears = w.linears();
  for (const auto& target : spec.targets) {
    bool found = false;
    for (auto* l : linears) found = found || lora_target_matches(l->name, target);
    if (!found) throw ContractError("attach_lora: unknown target '" + target + "'");
  }
  for (auto [name, p] : w.named_parameters()) p.set_requires_grad(false);

  Rng rng(seed);
  std::size_t trainable = 0;
  for (auto* l : linears) {
    bool hit = false;
    for (const auto& target : spec.targets) hit = hit || lora_target_matches(l->name, target);
    if (!hit) continue;
    if (l->adapter) throw ContractError("attach_lora: '" + l->name + "' already has an adapter");
    const std::size_t in = l->in_features(), out = l->out_features();
    LoraAdapter<T> a;
    a.down = detail::normal_tensor<T>({in, spec.rank}, 1.0 / std::sqrt(static_cast<double>(in)), rng);
    a.up = Tensor<T>::zeros({spec.rank, out}, true);
    a.rank = spec.rank;
    a.alpha = static_cast<T>(spec.alpha);
    l->adapter = std::move(a);
    trainable += spec.rank * (in + out);
  }
  return trainable;
}

/// Drops all adapters and unfreezes the base parameters.
template <typename T>
void detach_lora(ModelWeights<T>& w) {
  for (auto* l : w.linears()) l->adapter.reset();
  for (auto [name, p] : w.named_parameters()) p.set_requires_grad(true);
}

template <typename T>
std::size_t count_trainable(const ModelWeights<T>& w) {
  std::size_t n = 0;
  for (const auto& p : w.trainable_parameters()) n += p.numel();
  return n;
}

}  // namespace lcumini

#endif  // LCUMINI_LORA_HPP
