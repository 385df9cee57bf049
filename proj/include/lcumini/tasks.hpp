// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_TASKS_HPP
#define LCUMINI_TASKS_HPP

// Synthetic toy tasks built from flat-colored rectangles and disks.
//
//   inpaint     (0-ref) one shape's bounding box is blanked; regenerate it.
//   edge_cond   (0-ref) binary edge map in, colored render out, full mask.
//   subject_ref (1-ref) a subject on background A is redrawn on background B
//                       at a new position; the target input is all zeros.
//
// Every generator is a pure function of (seed, size).

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lcumini/flow.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/tensor.hpp"
#include "lcumini/vocab.hpp"

namespace lcumini {

enum class TaskKind { inpaint, edge_cond, subject_ref };

inline std::string_view task_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::inpaint: return "inpaint";
    case TaskKind::edge_cond: return "edge_cond";
    case TaskKind::subject_ref: return "subject_ref";
  }
  return "?";
}

inline TaskKind parse_task_kind(std::string_view name) {
  if (name == "inpaint") return TaskKind::inpaint;
  if (name == "edge_cond") return TaskKind::edge_cond;
  if (name == "subject_ref") return TaskKind::subject_ref;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

struct TaskSample {
  TaskKind kind = TaskKind::inpaint;
  std::vector<Tensor<float>> references;  // each 3 x H x W
  Tensor<float> input_image;              // 3 x H x W
  Tensor<float> mask;                     // 1 x H x W
  Tensor<float> target_image;             // 3 x H x W
  TextInstruction instruction;
  std::uint64_t seed = 0;

  std::size_t n_units() const { return references.size() + 1; }
  bool is_zero_ref() const { return references.empty(); }
  std::size_t size() const { return target_image.dim(1); }

  void validate() const {
    const Shape image{kImageChannels, size(), size()};
    const Shape mask_shape{kMaskChannels, size(), size()};
    if (input_image.shape() != image || target_image.shape() != image || mask.shape() != mask_shape) {
      throw ShapeError("task sample: inconsistent geometry");
    }
    for (const auto& r : references) {
      if (r.shape() != image) throw ShapeError("task sample: reference geometry mismatch");
    }
    const bool zero_ref_kind = kind != TaskKind::subject_ref;
    if (zero_ref_kind != references.empty() || (!zero_ref_kind && references.size() != 1)) {
      throw ContractError("task sample: reference count does not match task kind");
    }
    bool any = false;
    for (float m : mask.data()) {
      if (m != 0.0f && m != 1.0f) throw ContractError("task sample: mask must be binary");
      any = any || m == 1.0f;
    }
    if (!any) throw ContractError("task sample: mask is empty");
    auto in_range = [](const Tensor<float>& t) {
      return std::all_of(t.data().begin(), t.data().end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
    };
    if (!in_range(input_image) || !in_range(target_image)) throw ContractError("task sample: pixel outside [0,1]");
    for (const auto& r : references) {
      if (!in_range(r)) throw ContractError("task sample: pixel outside [0,1]");
    }
  }
};

namespace render {

using Color = std::array<float, 3>;

inline constexpr std::array<Color, vocab::kNumColors> kPalette = {{
    {1.0f, 0.0f, 0.0f},  // red
    {0.0f, 1.0f, 0.0f},  // green
    {0.0f, 0.0f, 1.0f},  // blue
    {1.0f, 1.0f, 0.0f},  // yellow
    {0.0f, 1.0f, 1.0f},  // cyan
    {1.0f, 0.0f, 1.0f},  // magenta
    {1.0f, 0.5f, 0.0f},  // orange
    {0.5f, 0.0f, 1.0f},  // purple
}};

inline constexpr float kLightGray = 0.8f;
inline constexpr float kDarkGray = 0.2f;

struct Primitive {
  bool disk = false;
  std::size_t color = 0;  // palette index
  std::size_t x = 0, y = 0, w = 0, h = 0;

  bool covers(std::size_t px, std::size_t py) const {
    if (px < x || py < y || px >= x + w || py >= y + h) return false;
    if (!disk) return true;
    const double cx = static_cast<double>(x) + static_cast<double>(w) / 2.0;
    const double cy = static_cast<double>(y) + static_cast<double>(h) / 2.0;
    const double dx = static_cast<double>(px) + 0.5 - cx;
    const double dy = static_cast<double>(py) + 0.5 - cy;
    const double r = static_cast<double>(w) / 2.0;
    return dx * dx + dy * dy <= r * r;
  }

  std::size_t shape_word() const { return disk ? vocab::kDisk : vocab::kRect; }
  std::size_t color_word() const { return vocab::kFirstColor + color; }
};

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Random primitive with side in [3, size/2], fully inside the canvas.
inline Primitive random_primitive(Rng& rng, std::size_t size) {
  Primitive p;
  p.disk = uniform_index(rng, 0, 1) == 1;
  p.color = uniform_index(rng, 0, vocab::kNumColors - 1);
  p.w = uniform_index(rng, 3, size / 2);
  p.h = p.disk ? p.w : uniform_index(rng, 3, size / 2);
  p.x = uniform_index(rng, 0, size - p.w);
  p.y = uniform_index(rng, 0, size - p.h);
  return p;
}

inline Tensor<float> canvas(std::size_t size, float gray) {
  return Tensor<float>::full({kImageChannels, size, size}, gray);
}

inline void draw(Tensor<float>& image, const Primitive& p) {
  const std::size_t size = image.dim(1);
  auto px = image.mutable_data();
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      if (!p.covers(x, y)) continue;
      for (std::size_t c = 0; c < kImageChannels; ++c) px[(c * size + y) * size + x] = kPalette[p.color][c];
    }
  }
}

/// 1 where the forward difference to the right or below exceeds 0.1 in any channel.
inline Tensor<float> edge_map(const Tensor<float>& image) {
  const std::size_t size = image.dim(1);
  const auto px = image.data();
  Tensor<float> edges = Tensor<float>::zeros({kImageChannels, size, size});
  auto out = edges.mutable_data();
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      bool edge = false;
      for (std::size_t c = 0; c < kImageChannels; ++c) {
        const float v = px[(c * size + y) * size + x];
        if (x + 1 < size && std::abs(px[(c * size + y) * size + x + 1] - v) > 0.1f) edge = true;
        if (y + 1 < size && std::abs(px[(c * size + y + 1) * size + x] - v) > 0.1f) edge = true;
      }
      if (edge) {
        for (std::size_t c = 0; c < kImageChannels; ++c) out[(c * size + y) * size + x] = 1.0f;
      }
    }
  }
  return edges;
}

}  // namespace render

namespace detail {

inline void require_task_size(std::size_t size) {
  if (size < 8) throw ContractError("task generators need size >= 8, got " + std::to_string(size));
}

inline std::size_t background_word(bool light) { return light ? vocab::kLight : vocab::kDark; }

}  // namespace detail

inline TaskSample gen_inpaint_sample(std::uint64_t seed, std::size_t size) {
  detail::require_task_size(size);
  Rng rng(seed);
  const bool light = render::uniform_index(rng, 0, 1) == 1;
  Tensor<float> target = render::canvas(size, light ? render::kLightGray : render::kDarkGray);
  const std::size_t n_shapes = render::uniform_index(rng, 1, 3);
  render::Primitive last;
  for (std::size_t i = 0; i < n_shapes; ++i) {
    last = render::random_primitive(rng, size);
    render::draw(target, last);
  }
  Tensor<float> mask = Tensor<float>::zeros({kMaskChannels, size, size});
  Tensor<float> input = target.detach_copy();
  auto m = mask.mutable_data();
  auto in = input.mutable_data();
  for (std::size_t y = last.y; y < last.y + last.h; ++y) {
    for (std::size_t x = last.x; x < last.x + last.w; ++x) {
      m[y * size + x] = 1.0f;
      for (std::size_t c = 0; c < kImageChannels; ++c) in[(c * size + y) * size + x] = 0.0f;
    }
  }
  TaskSample s;
  s.kind = TaskKind::inpaint;
  s.input_image = input;
  s.mask = mask;
  s.target_image = target;
  s.instruction = TextInstruction::of({vocab::kFill, last.color_word(), last.shape_word()});
  s.seed = seed;
  return s;
}

inline TaskSample gen_edge_cond_sample(std::uint64_t seed, std::size_t size) {
  detail::require_task_size(size);
  Rng rng(seed);
  const bool light = render::uniform_index(rng, 0, 1) == 1;
  Tensor<float> target = render::canvas(size, light ? render::kLightGray : render::kDarkGray);
  const std::size_t n_shapes = render::uniform_index(rng, 1, 3);
  std::vector<std::size_t> words{vocab::kEdges, detail::background_word(light)};
  for (std::size_t i = 0; i < n_shapes; ++i) {
    const auto p = render::random_primitive(rng, size);
    render::draw(target, p);
    words.push_back(p.color_word());
  }
  TaskSample s;
  s.kind = TaskKind::edge_cond;
  s.input_image = render::edge_map(target);
  s.mask = Tensor<float>::full({kMaskChannels, size, size}, 1.0f);
  s.target_image = target;
  s.instruction = TextInstruction::of(std::move(words));
  s.seed = seed;
  return s;
}

inline TaskSample gen_subject_ref_sample(std::uint64_t seed, std::size_t size) {
  detail::require_task_size(size);
  Rng rng(seed);
  const bool light_ref = render::uniform_index(rng, 0, 1) == 1;
  const render::Primitive subject = render::random_primitive(rng, size);
  render::Primitive moved = subject;
  for (int attempt = 0; attempt < 16 && moved.x == subject.x && moved.y == subject.y; ++attempt) {
    moved.x = render::uniform_index(rng, 0, size - subject.w);
    moved.y = render::uniform_index(rng, 0, size - subject.h);
  }
  Tensor<float> reference = render::canvas(size, light_ref ? render::kLightGray : render::kDarkGray);
  render::draw(reference, subject);
  Tensor<float> target = render::canvas(size, light_ref ? render::kDarkGray : render::kLightGray);
  render::draw(target, moved);

  TaskSample s;
  s.kind = TaskKind::subject_ref;
  s.references = {reference};
  s.input_image = Tensor<float>::zeros({kImageChannels, size, size});
  s.mask = Tensor<float>::full({kMaskChannels, size, size}, 1.0f);
  s.target_image = target;
  s.instruction = TextInstruction::of({vocab::kSubject, detail::background_word(!light_ref)});
  s.seed = seed;
  return s;
}

inline TaskSample gen_sample(TaskKind kind, std::uint64_t seed, std::size_t size) {
  switch (kind) {
    case TaskKind::inpaint: return gen_inpaint_sample(seed, size);
    case TaskKind::edge_cond: return gen_edge_cond_sample(seed, size);
    case TaskKind::subject_ref: return gen_subject_ref_sample(seed, size);
  }
  throw ContractError("unknown task kind");
}

struct Split {
  std::vector<TaskSample> train;
  std::vector<TaskSample> test;
};

/// Train seeds occupy [base, base + n_train), test seeds the next n_test values,
/// with base = master_seed << 32. Kinds are interleaved in the given order.
inline Split make_split(const std::vector<TaskKind>& kinds, std::size_t n_train, std::size_t n_test,
                        std::uint64_t master_seed, std::size_t size = 16) {
  if (kinds.empty()) throw ContractError("make_split: empty kind mix");
  if (n_train == 0 || n_test == 0) throw ContractError("make_split: split sizes must be positive");
  const std::uint64_t base = master_seed << 32;
  Split split;
  split.train.reserve(n_train);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n_train; ++i) {
    split.train.push_back(gen_sample(kinds[i % kinds.size()], base + i, size));
  }
  for (std::size_t i = 0; i < n_test; ++i) {
    split.test.push_back(gen_sample(kinds[i % kinds.size()], base + n_train + i, size));
  }
  return split;
}

}  // namespace lcumini

#endif  // LCUMINI_TASKS_HPP
