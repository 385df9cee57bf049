// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_MODEL_HPP
#define LCUMINI_MODEL_HPP

// Miniature diffusion transformer over LCU++ inputs.
//
// Sequence layout: [instruction tokens | CU_1 patches | ... | CU_N patches].
// Every CU patch token is x_embed(patch) + pos_2d[patch] + cu_slot[i]; the
// timestep embedding is added to every token. Attention is full and
// bidirectional. Instruction outputs are dropped; each CU's outputs are
// unpatchified into a 3-channel velocity.
// The key projection is bias-free.

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lcumini/flow.hpp"
#include "lcumini/lcu.hpp"
#include "lcumini/tensor.hpp"
#include "lcumini/vocab.hpp"

namespace lcumini {

struct ModelConfig {
  std::size_t model_dim = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t patch = 4;
  std::size_t image_size = 16;
  std::size_t vocab_size = vocab::kSize;
  std::size_t max_cus = 4;

  std::size_t patches() const { return (image_size / patch) * (image_size / patch); }

  void validate() const {
    if (model_dim == 0 || n_heads == 0 || model_dim % n_heads != 0) {
      throw ContractError("model_dim must be a positive multiple of n_heads");
    }
    if (model_dim % 2 != 0) throw ContractError("model_dim must be even for sinusoidal timestep features");
    if (patch == 0 || image_size % patch != 0) throw ContractError("patch must divide image_size");
    if (n_layers == 0 || vocab_size == 0 || max_cus == 0) throw ContractError("model sizes must be positive");
  }

  bool operator==(const ModelConfig&) const = default;
};

/// Low-rank delta (alpha / rank) * down * up on top of a frozen [in x out] weight.
template <typename T>
struct LoraAdapter {
  Tensor<T> down;  // in x rank, random init
  Tensor<T> up;    // rank x out, zero init
  std::size_t rank = 0;
  T alpha{1};

  T scaling() const { return alpha / static_cast<T>(rank); }
};

template <typename T>
struct Linear {
  std::string name;
  Tensor<T> weight;  // in x out
  Tensor<T> bias;    // out; undefined for bias-free maps
  std::optional<LoraAdapter<T>> adapter;

  std::size_t in_features() const { return weight.dim(0); }
  std::size_t out_features() const { return weight.dim(1); }

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tensor<T> y = matmul(x, weight);
    if (bias.defined()) y = add_bias(y, bias);
    if (adapter) y = add(y, scale(matmul(matmul(x, adapter->down), adapter->up), adapter->scaling()));
    return y;
  }
};

template <typename T>
struct TransformerBlock {
  Tensor<T> ln1_gain, ln1_shift;
  Linear<T> q, k, v, o;
  Tensor<T> ln2_gain, ln2_shift;
  Linear<T> fc1, fc2;
};

template <typename T>
struct ModelWeights {
  ModelConfig config;
  Linear<T> x_embed;           // 7*p^2 -> d
  Tensor<T> pos_2d;            // patches x d
  Tensor<T> cu_index_embed;    // max_cus x d
  Tensor<T> instr_embed;       // (vocab + 1) x d, last row is the null instruction
  Linear<T> t_embed;           // sinusoidal d -> d
  std::vector<TransformerBlock<T>> blocks;
  Tensor<T> final_gain, final_shift;
  Linear<T> head;              // d -> 3*p^2

  std::size_t null_token() const { return config.vocab_size; }

  std::vector<Linear<T>*> linears() {
    std::vector<Linear<T>*> out{&x_embed, &t_embed};
    for (auto& b : blocks) {
      for (Linear<T>* l : {&b.q, &b.k, &b.v, &b.o, &b.fc1, &b.fc2}) out.push_back(l);
    }
    out.push_back(&head);
    return out;
  }

  std::vector<const Linear<T>*> linears() const {
    auto mut = const_cast<ModelWeights*>(this)->linears();
    return {mut.begin(), mut.end()};
  }

  /// Every parameter tensor in a fixed order, adapters included when attached.
  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    auto linear = [&out](const Linear<T>& l) {
      out.emplace_back(l.name + ".weight", l.weight);
      if (l.bias.defined()) out.emplace_back(l.name + ".bias", l.bias);
      if (l.adapter) {
        out.emplace_back(l.name + ".lora_down", l.adapter->down);
        out.emplace_back(l.name + ".lora_up", l.adapter->up);
      }
    };
    linear(x_embed);
    out.emplace_back("pos_2d", pos_2d);
    out.emplace_back("cu_index_embed", cu_index_embed);
    out.emplace_back("instr_embed", instr_embed);
    linear(t_embed);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = blocks[i];
      const std::string p = "blocks." + std::to_string(i) + ".";
      out.emplace_back(p + "ln1.gain", b.ln1_gain);
      out.emplace_back(p + "ln1.shift", b.ln1_shift);
      linear(b.q);
      linear(b.k);
      linear(b.v);
      linear(b.o);
      out.emplace_back(p + "ln2.gain", b.ln2_gain);
      out.emplace_back(p + "ln2.shift", b.ln2_shift);
      linear(b.fc1);
      linear(b.fc2);
    }
    out.emplace_back("final_norm.gain", final_gain);
    out.emplace_back("final_norm.shift", final_shift);
    linear(head);
    return out;
  }

  std::vector<Tensor<T>> trainable_parameters() const {
    std::vector<Tensor<T>> out;
    for (auto& [name, p] : named_parameters()) {
      if (p.requires_grad()) out.push_back(p);
    }
    return out;
  }

  void zero_grad() const {
    for (auto [name, p] : named_parameters()) p.zero_grad();
  }

  /// Deep copy with no shared storage.
  ModelWeights clone() const {
    ModelWeights copy = *this;
    auto src = named_parameters();
    auto dst = copy.mutable_parameter_refs();
    for (std::size_t i = 0; i < src.size(); ++i) {
      *dst[i] = src[i].second.detach_copy(src[i].second.requires_grad());
    }
    return copy;
  }

  /// Overwrites parameter values by name; every parameter must be present with the same shape.
  void load_state(const std::map<std::string, std::pair<Shape, std::vector<T>>>& state) {
    auto names = named_parameters();
    auto refs = mutable_parameter_refs();
    if (state.size() != names.size()) {
      throw ShapeError("load_state: expected " + std::to_string(names.size()) + " tensors, got " +
                       std::to_string(state.size()));
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      auto it = state.find(names[i].first);
      if (it == state.end()) throw ShapeError("load_state: missing tensor " + names[i].first);
      if (it->second.first != names[i].second.shape()) {
        throw ShapeError("load_state: tensor " + names[i].first + " has shape " + shape_str(it->second.first) +
                         ", expected " + shape_str(names[i].second.shape()));
      }
      const auto& values = it->second.second;
      if (values.size() != refs[i]->numel()) throw ShapeError("load_state: tensor " + names[i].first + " is truncated");
      std::copy(values.begin(), values.end(), refs[i]->mutable_data().begin());
    }
  }

 private:
  std::vector<Tensor<T>*> mutable_parameter_refs() {
    std::vector<Tensor<T>*> out;
    auto linear = [&out](Linear<T>& l) {
      out.push_back(&l.weight);
      if (l.bias.defined()) out.push_back(&l.bias);
      if (l.adapter) {
        out.push_back(&l.adapter->down);
        out.push_back(&l.adapter->up);
      }
    };
    linear(x_embed);
    out.push_back(&pos_2d);
    out.push_back(&cu_index_embed);
    out.push_back(&instr_embed);
    linear(t_embed);
    for (auto& b : blocks) {
      out.push_back(&b.ln1_gain);
      out.push_back(&b.ln1_shift);
      linear(b.q);
      linear(b.k);
      linear(b.v);
      linear(b.o);
      out.push_back(&b.ln2_gain);
      out.push_back(&b.ln2_shift);
      linear(b.fc1);
      linear(b.fc2);
    }
    out.push_back(&final_gain);
    out.push_back(&final_shift);
    linear(head);
    return out;
  }
};

namespace detail {

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  std::vector<T> data(numel_of(shape));
  for (auto& v : data) v = static_cast<T>(normal(rng));
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <typename T>
Linear<T> make_linear(std::string name, std::size_t in, std::size_t out, Rng& rng, bool with_bias = true) {
  return {std::move(name), normal_tensor<T>({in, out}, 1.0 / std::sqrt(static_cast<double>(in)), rng),
          with_bias ? Tensor<T>::zeros({out}, true) : Tensor<T>(), std::nullopt};
}

}  // namespace detail

template <typename T>
ModelWeights<T> init_weights(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const std::size_t d = config.model_dim;
  const std::size_t p2 = config.patch * config.patch;
  constexpr double kEmbedStd = 0.02;
  ModelWeights<T> w;
  w.config = config;
  w.x_embed = detail::make_linear<T>("x_embed", kCuChannels * p2, d, rng);
  w.pos_2d = detail::normal_tensor<T>({config.patches(), d}, kEmbedStd, rng);
  w.cu_index_embed = detail::normal_tensor<T>({config.max_cus, d}, kEmbedStd, rng);
  w.instr_embed = detail::normal_tensor<T>({config.vocab_size + 1, d}, kEmbedStd, rng);
  w.t_embed = detail::make_linear<T>("t_embed", d, d, rng);
  for (std::size_t i = 0; i < config.n_layers; ++i) {
    const std::string p = "blocks." + std::to_string(i) + ".";
    TransformerBlock<T> b{Tensor<T>::full({d}, T{1}, true),
                          Tensor<T>::zeros({d}, true),
                          detail::make_linear<T>(p + "attn.q", d, d, rng),
                          detail::make_linear<T>(p + "attn.k", d, d, rng, false),
                          detail::make_linear<T>(p + "attn.v", d, d, rng),
                          detail::make_linear<T>(p + "attn.o", d, d, rng),
                          Tensor<T>::full({d}, T{1}, true),
                          Tensor<T>::zeros({d}, true),
                          detail::make_linear<T>(p + "mlp.fc1", d, 4 * d, rng),
                          detail::make_linear<T>(p + "mlp.fc2", 4 * d, d, rng)};
    w.blocks.push_back(std::move(b));
  }
  w.final_gain = Tensor<T>::full({d}, T{1}, true);
  w.final_shift = Tensor<T>::zeros({d}, true);
  w.head = detail::make_linear<T>("head", d, kImageChannels * p2, rng);
  return w;
}

/// C x H x W -> (H/p * W/p) x (C * p * p), patches in raster order.
template <typename T>
Tensor<T> patchify(const Tensor<T>& map, std::size_t patch) {
  detail::require_rank(map, 3, "patchify");
  const std::size_t c = map.dim(0), h = map.dim(1), w = map.dim(2);
  patches_per_map(h, w, patch);
  const std::size_t gh = h / patch, gw = w / patch;
  auto blocks = permute(reshape(map, {c, gh, patch, gw, patch}), {1, 3, 0, 2, 4});
  return reshape(blocks, {gh * gw, c * patch * patch});
}

/// Inverse of patchify for `channels` output channels.
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, std::size_t channels, std::size_t height, std::size_t width,
                     std::size_t patch) {
  const std::size_t gh = height / patch, gw = width / patch;
  if (tokens.rank() != 2 || tokens.dim(0) != gh * gw || tokens.dim(1) != channels * patch * patch) {
    throw ShapeError("unpatchify: tokens " + shape_str(tokens.shape()) + " do not tile " +
                     std::to_string(channels) + "x" + std::to_string(height) + "x" + std::to_string(width));
  }
  auto blocks = permute(reshape(tokens, {gh, gw, channels, patch, patch}), {2, 0, 3, 1, 4});
  return reshape(blocks, {channels, height, width});
}

/// Patchify, project, add the 2D positional table.
template <typename T>
Tensor<T> x_embed(const ModelWeights<T>& w, const Tensor<T>& map) {
  const auto& cfg = w.config;
  if (map.rank() != 3 || map.dim(0) != kCuChannels || map.dim(1) != cfg.image_size || map.dim(2) != cfg.image_size) {
    throw ShapeError("x_embed: expected 7x" + std::to_string(cfg.image_size) + "x" + std::to_string(cfg.image_size) +
                     " map, got " + shape_str(map.shape()));
  }
  return add(w.x_embed(patchify(map, cfg.patch)), w.pos_2d);
}

template <typename T>
Tensor<T> embed_instruction(const ModelWeights<T>& w, const TextInstruction& instr) {
  instr.validate(w.config.vocab_size);
  if (instr.is_null) return embedding(w.instr_embed, {w.null_token()});
  return embedding(w.instr_embed, instr.token_ids);
}

/// Sinusoidal features of 1000*t: [sin(f_0 s) .. sin(f_{h-1} s), cos(f_0 s) .. ].
template <typename T>
Tensor<T> timestep_features(T t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<T> out(dim);
  const double s = 1000.0 * static_cast<double>(t);
  for (std::size_t i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
    out[i] = static_cast<T>(std::sin(s * freq));
    out[half + i] = static_cast<T>(std::cos(s * freq));
  }
  return Tensor<T>::from({1, dim}, std::move(out));
}

template <typename T>
Tensor<T> self_attention(const TransformerBlock<T>& b, const Tensor<T>& x, std::size_t n_heads) {
  const std::size_t d = x.dim(1);
  const std::size_t dh = d / n_heads;
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));
  const auto q = b.q(x), k = b.k(x), v = b.v(x);
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const auto qh = slice(q, 1, h * dh, dh);
    const auto kh = slice(k, 1, h * dh, dh);
    const auto vh = slice(v, 1, h * dh, dh);
    const auto probs = softmax(scale(matmul(qh, transpose(kh)), inv_sqrt), 1);
    heads.push_back(matmul(probs, vh));
  }
  return b.o(n_heads == 1 ? heads.front() : concat(heads, 1));
}

/// Per-CU velocities for already-assembled 7-channel CU maps.
template <typename T>
std::vector<Tensor<T>> forward_maps(const ModelWeights<T>& w, const std::vector<Tensor<T>>& cu_maps, T t,
                                    const TextInstruction& instr) {
  const auto& cfg = w.config;
  if (cu_maps.empty()) throw ContractError("forward: at least one condition unit is required");
  if (cu_maps.size() > cfg.max_cus) {
    throw ContractError("forward: " + std::to_string(cu_maps.size()) + " condition units exceed max_cus " +
                        std::to_string(cfg.max_cus));
  }
  std::vector<Tensor<T>> parts;
  parts.reserve(cu_maps.size() + 1);
  const auto text = embed_instruction(w, instr);
  const std::size_t text_len = text.dim(0);
  parts.push_back(text);
  for (std::size_t i = 0; i < cu_maps.size(); ++i) {
    const auto slot = reshape(slice(w.cu_index_embed, 0, i, 1), {cfg.model_dim});
    parts.push_back(add_bias(x_embed(w, cu_maps[i]), slot));
  }
  const auto t_emb = reshape(w.t_embed(timestep_features<T>(t, cfg.model_dim)), {cfg.model_dim});
  Tensor<T> x = add_bias(concat(parts, 0), t_emb);

  for (const auto& b : w.blocks) {
    x = add(x, self_attention(b, layer_norm(x, b.ln1_gain, b.ln1_shift), cfg.n_heads));
    x = add(x, b.fc2(gelu(b.fc1(layer_norm(x, b.ln2_gain, b.ln2_shift)))));
  }
  const auto out = w.head(layer_norm(x, w.final_gain, w.final_shift));

  const std::size_t per_cu = cfg.patches();
  std::vector<Tensor<T>> velocities;
  velocities.reserve(cu_maps.size());
  for (std::size_t i = 0; i < cu_maps.size(); ++i) {
    velocities.push_back(unpatchify(slice(out, 0, text_len + i * per_cu, per_cu), kImageChannels, cfg.image_size,
                                    cfg.image_size, cfg.patch));
  }
  return velocities;
}

template <typename T>
std::vector<Tensor<T>> forward(const ModelWeights<T>& w, const LcuPlusPlus<T>& lcu, T t, const TextInstruction& instr) {
  const auto layout = assemble_lcu_pp(lcu, w.config.patch);
  return forward_maps(w, layout.maps, t, instr);
}

template <typename T>
std::vector<Tensor<T>> forward(const ModelWeights<T>& w, const LcuPlusPlus<T>& lcu, T t) {
  return forward(w, lcu, t, lcu.instruction);
}

}  // namespace lcumini

#endif  // LCUMINI_MODEL_HPP
