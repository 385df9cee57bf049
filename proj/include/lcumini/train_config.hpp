// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_TRAIN_CONFIG_HPP
#define LCUMINI_TRAIN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lcumini/errors.hpp"
#include "lcumini/lora.hpp"
#include "lcumini/tasks.hpp"

namespace lcumini {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double clip_norm = 1.0;
  double uncond_prob = 0.1;
  double guidance_scale = 1.0;  // recorded only; training never mixes branches
  std::size_t batch_size = 16;
  std::size_t steps = 5000;
  std::uint64_t seed = 0;
  int stage = 1;
  std::optional<LoraSpec> adapter;

  // Dataset and bookkeeping.
  std::vector<TaskKind> tasks{TaskKind::inpaint};
  std::size_t n_train = 2048;
  std::size_t checkpoint_every = 1000;

  void validate() const {
    if (!(uncond_prob >= 0.0 && uncond_prob <= 1.0)) throw ConfigError("uncond_prob must lie in [0, 1]");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (stage != 1 && stage != 2) throw ConfigError("stage must be 1 or 2");
    if (tasks.empty()) throw ConfigError("tasks must name at least one task kind");
    if (n_train == 0) throw ConfigError("n_train must be positive");
    if (adapter && adapter->rank == 0) throw ConfigError("adapter_rank must be at least 1");
  }
};

/// Stage-2 default mixture: 0-ref and N-ref interleaved 1:1.
inline std::vector<TaskKind> default_stage_tasks(int stage) {
  if (stage == 1) return {TaskKind::inpaint};
  return {TaskKind::inpaint, TaskKind::subject_ref};
}

}  // namespace lcumini

#endif  // LCUMINI_TRAIN_CONFIG_HPP
