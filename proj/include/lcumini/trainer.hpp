// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_TRAINER_HPP
#define LCUMINI_TRAINER_HPP

// Two-stage flow-matching training.
//
// Stage 1 sees only 0-ref samples (N = 1). Stage 2 starts from a stage-1
// checkpoint and sees the full 0-ref + N-ref mixture. Each sample draws one
// timestep shared by all of its CUs and an independent noise tensor per CU;
// the text instruction is replaced by the null instruction with probability
// uncond_prob.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lcumini/checkpoint.hpp"
#include "lcumini/flow.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/model.hpp"
#include "lcumini/optim.hpp"
#include "lcumini/tasks.hpp"
#include "lcumini/train_config.hpp"

namespace lcumini {

inline TextInstruction cfg_dropout(const TextInstruction& instr, Rng& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("cfg_dropout: probability must lie in [0, 1]");
  const bool drop = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  return drop ? TextInstruction::null() : instr;
}

/// One noised training example: the LCU++ input plus per-CU target velocities.
template <typename T>
struct TrainingExample {
  LcuPlusPlus<T> lcu;
  std::vector<Tensor<T>> velocity_targets;
  T t{};
};

template <typename T>
TrainingExample<T> make_training_example(const TaskSample& sample, const TextInstruction& instr, T t, Rng& rng) {
  const std::size_t size = sample.size();
  TrainingExample<T> ex;
  ex.t = t;
  ex.lcu.instruction = instr;
  auto add_unit = [&](const Tensor<float>& image, const Tensor<float>& mask, const Tensor<float>& clean, CuRole role) {
    const auto x1 = cast<T>(clean);
    const auto state = FlowState<T>::draw(x1, t, rng);
    ex.lcu.units.push_back({cast<T>(image), cast<T>(mask), state.xt, role});
    ex.velocity_targets.push_back(velocity_target(state.x0, state.x1));
  };
  const auto ones = Tensor<float>::full({kMaskChannels, size, size}, 1.0f);
  for (const auto& ref : sample.references) add_unit(ref, ones, ref, CuRole::reference);
  add_unit(sample.input_image, sample.mask, sample.target_image, CuRole::target);
  return ex;
}

struct StepRecord {
  std::size_t step = 0;
  LossBreakdown loss;
  double grad_norm_preclip = 0.0;
  double grad_norm_postclip = 0.0;
  std::size_t unconditional = 0;  // samples in the batch that trained the null branch
  std::size_t batch = 0;
};

struct TrainReport {
  std::vector<StepRecord> records;
  double wall_seconds = 0.0;
  std::string checkpoint_id;

  /// `# key=value` lines followed by the per-step CSV.
  void write_csv(std::ostream& os, const TrainConfig& cfg) const {
    os << "# lr=" << cfg.lr << " weight_decay=" << cfg.weight_decay << " clip_norm=" << cfg.clip_norm
       << " uncond_prob=" << cfg.uncond_prob << " guidance_scale=" << cfg.guidance_scale << "\n";
    os << "# stage=" << cfg.stage << " steps=" << cfg.steps << " batch_size=" << cfg.batch_size << " seed=" << cfg.seed
       << "\n";
    os << "step,total,ref,tar,grad_norm,was_unconditional\n";
    char line[160];
    for (const auto& r : records) {
      std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g,%.9g,%.9g,%zu\n", r.step, r.loss.total, r.loss.ref, r.loss.tar,
                    r.grad_norm_preclip, r.unconditional);
      os << line;
    }
  }
};

/// Trailing mean over `window` steps; entry i covers records [i-window+1, i].
/// Entries before the first full window are left out, so result[0] is step window-1.
inline std::vector<double> smoothed_losses(const std::vector<StepRecord>& records, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || records.size() < window) return out;
  double acc = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    acc += records[i].loss.total;
    if (i >= window) acc -= records[i - window].loss.total;
    if (i + 1 >= window) out.push_back(acc / static_cast<double>(window));
  }
  return out;
}

template <typename T>
AdamW<T> make_optimizer(const ModelWeights<T>& w, const TrainConfig& cfg) {
  AdamWOptions opts;
  opts.lr = cfg.lr;
  opts.weight_decay = cfg.weight_decay;
  return AdamW<T>(w.trainable_parameters(), opts);
}

/// Forward + backward over a batch, then clip and one AdamW update.
template <typename T>
StepRecord train_step(ModelWeights<T>& w, std::span<const TaskSample> batch, const TrainConfig& cfg, AdamW<T>& opt,
                      Rng& rng) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  StepRecord rec;
  rec.batch = batch.size();
  const T inv_batch = T{1} / static_cast<T>(batch.size());
  opt.zero_grad();
  for (const auto& sample : batch) {
    if (cfg.stage == 1 && !sample.is_zero_ref()) {
      throw StageError("stage 1 trains on 0-ref samples only; got a sample with " +
                       std::to_string(sample.references.size()) + " reference(s)");
    }
    const auto instr = cfg_dropout(sample.instruction, rng, cfg.uncond_prob);
    if (instr.is_null) ++rec.unconditional;
    const T t = static_cast<T>(sample_timestep(rng));
    const auto ex = make_training_example<T>(sample, instr, t, rng);
    const auto v = forward(w, ex.lcu, t);
    const auto loss = compute_loss(v, ex.velocity_targets, ex.lcu.size() - 1);
    const auto values = loss.values();
    if (!std::isfinite(values.total)) {
      throw TrainingError("non-finite loss at sample seed " + std::to_string(sample.seed) + " (t=" +
                          std::to_string(static_cast<double>(t)) + ")");
    }
    rec.loss.total += values.total / static_cast<double>(batch.size());
    rec.loss.ref += values.ref / static_cast<double>(batch.size());
    rec.loss.tar += values.tar / static_cast<double>(batch.size());
    scale(loss.total, inv_batch).backward();
  }
  auto params = opt.params();
  const auto clip = clip_gradients(params, cfg.clip_norm);
  rec.grad_norm_preclip = clip.norm_before;
  rec.grad_norm_postclip = clip.norm_after;
  opt.step();
  opt.zero_grad();
  return rec;
}

enum class InitKind { fresh, checkpoint };

struct StageOptions {
  /// Lets stage 2 start from fresh weights (the from-scratch ablation baseline).
  bool allow_fresh_stage2 = false;
  /// When set, checkpoints go here every cfg.checkpoint_every steps and at the end.
  std::optional<std::filesystem::path> out_dir;
  RunConfig run_config;  // embedded in written checkpoints
  std::function<void(const StepRecord&)> on_step;
};

inline void check_stage_dataset(int stage, InitKind init, const std::vector<TaskSample>& dataset,
                                const StageOptions& options) {
  if (dataset.empty()) throw StageError("training dataset is empty");
  if (stage == 1) {
    for (const auto& s : dataset) {
      if (!s.is_zero_ref()) {
        throw StageError("stage 1 trains on 0-ref tasks only; dataset contains a " + std::string(task_name(s.kind)) +
                         " sample with N=" + std::to_string(s.n_units()));
      }
    }
  } else if (stage == 2) {
    if (init != InitKind::checkpoint && !options.allow_fresh_stage2) {
      throw StageError("two-stage rule: stage 2 fine-tunes a stage-1 checkpoint; pass an init checkpoint");
    }
  } else {
    throw StageError("stage must be 1 or 2");
  }
}

/// Runs cfg.steps optimizer steps over `dataset`, reshuffled every epoch.
template <typename T>
TrainReport run_stage(int stage, ModelWeights<T>& w, InitKind init, const std::vector<TaskSample>& dataset,
                      TrainConfig cfg, const StageOptions& options = {}) {
  cfg.stage = stage;
  cfg.validate();
  check_stage_dataset(stage, init, dataset, options);

  const auto start = std::chrono::steady_clock::now();
  Rng data_rng(cfg.seed * 2 + 1);
  Rng noise_rng(cfg.seed * 2 + 2);
  auto opt = make_optimizer(w, cfg);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<TaskSample> batch;
  batch.reserve(cfg.batch_size);

  auto save = [&](const std::string& file) {
    if constexpr (std::is_same_v<T, float>) {
      std::filesystem::create_directories(*options.out_dir);
      RunConfig rc = options.run_config;
      rc.model = w.config;
      rc.train = cfg;
      save_checkpoint((*options.out_dir / file).string(), w, rc);
    }
    return file;
  };

  TrainReport report;
  report.records.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    batch.clear();
    while (batch.size() < cfg.batch_size) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), data_rng);
        cursor = 0;
      }
      batch.push_back(dataset[order[cursor++]]);
    }
    auto rec = train_step(w, std::span<const TaskSample>(batch), cfg, opt, noise_rng);
    rec.step = step;
    if (options.on_step) options.on_step(rec);
    report.records.push_back(rec);
    if (options.out_dir && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 && step + 1 < cfg.steps) {
      char name[64];
      std::snprintf(name, sizeof(name), "stage%d_step%06zu.ckpt", stage, step + 1);
      save(name);
    }
  }
  if (options.out_dir) report.checkpoint_id = save("stage" + std::to_string(stage) + "_final.ckpt");
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace lcumini

#endif  // LCUMINI_TRAINER_HPP
