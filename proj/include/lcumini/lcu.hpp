// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_LCU_HPP
#define LCUMINI_LCU_HPP

// Condition units and their assembly into transformer inputs.
//
// A condition unit (CU) bundles an image block I (3 channels), a binary mask M
// (1 channel, 1 = generate) and a noisy latent X_t (3 channels). The LCU++
// layout stacks the three along channels into one 7-channel map per CU and
// places CU token sequences one after the other. The legacy layout keeps
// [I; M] and [X_t; M] as two separate 4-channel maps, doubling the sequence.

#include <cstdint>
#include <string>
#include <vector>

#include "lcumini/tensor.hpp"

namespace lcumini {

inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kMaskChannels = 1;
inline constexpr std::size_t kCuChannels = 2 * kImageChannels + kMaskChannels;
inline constexpr std::size_t kLegacyChannels = kImageChannels + kMaskChannels;

struct TextInstruction {
  std::vector<std::size_t> token_ids;
  bool is_null = true;

  static TextInstruction null() { return {}; }
  static TextInstruction of(std::vector<std::size_t> ids) {
    if (ids.empty()) throw ContractError("a non-null instruction needs at least one token");
    return {std::move(ids), false};
  }

  void validate(std::size_t vocab_size) const {
    if (token_ids.empty() != is_null) throw ContractError("instruction: token list must be empty iff null");
    for (std::size_t id : token_ids) {
      if (id >= vocab_size) {
        throw ContractError("instruction: token id " + std::to_string(id) + " outside vocabulary of " +
                            std::to_string(vocab_size));
      }
    }
  }

  bool operator==(const TextInstruction&) const = default;
};

enum class CuRole { reference, target };

template <typename T>
struct ConditionUnit {
  Tensor<T> image;  // 3 x H x W, zeros when absent
  Tensor<T> mask;   // 1 x H x W, 1 = region to generate
  Tensor<T> noisy;  // 3 x H x W
  CuRole role = CuRole::target;

  std::size_t height() const { return image.dim(1); }
  std::size_t width() const { return image.dim(2); }

  void validate() const {
    if (image.rank() != 3 || image.dim(0) != kImageChannels) {
      throw ShapeError("condition unit: image must be 3xHxW, got " + shape_str(image.shape()));
    }
    const Shape mask_shape{kMaskChannels, height(), width()};
    if (mask.shape() != mask_shape) {
      throw ShapeError("condition unit: mask " + shape_str(mask.shape()) + " does not match image " +
                       shape_str(image.shape()));
    }
    if (noisy.shape() != image.shape()) {
      throw ShapeError("condition unit: noisy latent " + shape_str(noisy.shape()) + " does not match image " +
                       shape_str(image.shape()));
    }
    for (T m : mask.data()) {
      if (m != T{0} && m != T{1}) throw ContractError("condition unit: mask must be binary");
    }
    if (role == CuRole::reference) {
      for (T m : mask.data()) {
        if (m != T{1}) throw ContractError("condition unit: reference units carry an all-ones mask");
      }
    }
  }
};

template <typename T>
struct LcuPlusPlus {
  TextInstruction instruction;
  std::vector<ConditionUnit<T>> units;

  std::size_t size() const { return units.size(); }
  const ConditionUnit<T>& target() const { return units.back(); }

  void validate() const {
    if (units.empty()) throw ContractError("LCU++: at least one condition unit is required");
    for (std::size_t i = 0; i < units.size(); ++i) {
      units[i].validate();
      const bool last = i + 1 == units.size();
      if ((units[i].role == CuRole::target) != last) {
        throw ContractError("LCU++: exactly one target unit, placed last");
      }
      if (units[i].image.shape() != units.front().image.shape()) {
        throw ShapeError("LCU++: all units must share H x W");
      }
    }
  }
};

template <typename T>
struct TokenLayout {
  std::vector<Tensor<T>> maps;
  std::size_t tokens_per_cu = 0;
  std::size_t total_tokens = 0;
};

inline std::size_t patches_per_map(std::size_t height, std::size_t width, std::size_t patch) {
  if (patch == 0 || height % patch != 0 || width % patch != 0) {
    throw ShapeError("patch size " + std::to_string(patch) + " does not divide " + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  return (height / patch) * (width / patch);
}

/// [I; M; X_t] stacked along channels: 7 x H x W.
template <typename T>
Tensor<T> build_cu_map(const ConditionUnit<T>& unit) {
  unit.validate();
  return concat<T>({unit.image, unit.mask, unit.noisy}, 0);
}

/// Inverse of build_cu_map.
template <typename T>
ConditionUnit<T> split_cu_map(const Tensor<T>& map, CuRole role) {
  if (map.rank() != 3 || map.dim(0) != kCuChannels) {
    throw ShapeError("split_cu_map: expected 7xHxW, got " + shape_str(map.shape()));
  }
  return {slice(map, 0, 0, kImageChannels), slice(map, 0, kImageChannels, kMaskChannels),
          slice(map, 0, kImageChannels + kMaskChannels, kImageChannels), role};
}

template <typename T>
TokenLayout<T> assemble_lcu_pp(const LcuPlusPlus<T>& lcu, std::size_t patch) {
  lcu.validate();
  TokenLayout<T> layout;
  layout.tokens_per_cu = patches_per_map(lcu.units.front().height(), lcu.units.front().width(), patch);
  for (const auto& unit : lcu.units) layout.maps.push_back(build_cu_map(unit));
  layout.total_tokens = layout.maps.size() * layout.tokens_per_cu;
  return layout;
}

/// Legacy 0-ref layout: condition map [I; M] followed by noise map [X_t; M].
template <typename T>
TokenLayout<T> assemble_legacy_lcu_0ref(const ConditionUnit<T>& unit, std::size_t patch) {
  unit.validate();
  TokenLayout<T> layout;
  layout.tokens_per_cu = patches_per_map(unit.height(), unit.width(), patch);
  layout.maps.push_back(concat<T>({unit.image, unit.mask}, 0));
  layout.maps.push_back(concat<T>({unit.noisy, unit.mask}, 0));
  layout.total_tokens = 2 * layout.tokens_per_cu;
  return layout;
}

/// Multiply-add FLOPs of one attention pass: 2*T^2*d for QK^T plus 2*T^2*d for P*V.
inline std::uint64_t attention_cost(std::uint64_t total_tokens, std::uint64_t model_dim) {
  if (total_tokens == 0 || model_dim == 0) throw ContractError("attention_cost: dimensions must be positive");
  return 2 * total_tokens * total_tokens * model_dim + 2 * total_tokens * total_tokens * model_dim;
}

template <typename T>
std::uint64_t attention_cost(const TokenLayout<T>& layout, std::uint64_t model_dim) {
  return attention_cost(layout.total_tokens, model_dim);
}

}  // namespace lcumini

#endif  // LCUMINI_LCU_HPP
