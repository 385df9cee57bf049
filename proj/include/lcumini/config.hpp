// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_CONFIG_HPP
#define LCUMINI_CONFIG_HPP

// Run configuration files.
//
// Text form: one `key = value` per line, `#` starts a comment. JSON form: an
// object with the same keys, either flat or grouped under "model"/"train".
// Keys are the ModelConfig / TrainConfig field names; adapter fields are
// spelled adapter_rank, adapter_alpha, adapter_targets (comma separated) and
// tasks is a comma-separated list of task kinds. Unknown keys are rejected.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "lcumini/model.hpp"
#include "lcumini/train_config.hpp"

namespace lcumini {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
  return out;
}

inline double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

inline std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  using detail::parse_int;
  using detail::parse_real;
  auto& m = cfg.model;
  auto& t = cfg.train;
  auto adapter = [&t]() -> LoraSpec& {
    if (!t.adapter) t.adapter = LoraSpec{};
    return *t.adapter;
  };
  if (key == "model_dim") m.model_dim = parse_int<std::size_t>(key, value);
  else if (key == "n_layers") m.n_layers = parse_int<std::size_t>(key, value);
  else if (key == "n_heads") m.n_heads = parse_int<std::size_t>(key, value);
  else if (key == "patch") m.patch = parse_int<std::size_t>(key, value);
  else if (key == "image_size") m.image_size = parse_int<std::size_t>(key, value);
  else if (key == "vocab_size") m.vocab_size = parse_int<std::size_t>(key, value);
  else if (key == "max_cus") m.max_cus = parse_int<std::size_t>(key, value);
  else if (key == "lr") t.lr = parse_real(key, value);
  else if (key == "weight_decay") t.weight_decay = parse_real(key, value);
  else if (key == "clip_norm") t.clip_norm = parse_real(key, value);
  else if (key == "uncond_prob") t.uncond_prob = parse_real(key, value);
  else if (key == "guidance_scale") t.guidance_scale = parse_real(key, value);
  else if (key == "batch_size") t.batch_size = parse_int<std::size_t>(key, value);
  else if (key == "steps") t.steps = parse_int<std::size_t>(key, value);
  else if (key == "seed") t.seed = parse_int<std::uint64_t>(key, value);
  else if (key == "stage") t.stage = parse_int<int>(key, value);
  else if (key == "n_train") t.n_train = parse_int<std::size_t>(key, value);
  else if (key == "checkpoint_every") t.checkpoint_every = parse_int<std::size_t>(key, value);
  else if (key == "tasks") {
    t.tasks.clear();
    for (const auto& name : detail::split_list(value)) t.tasks.push_back(parse_task_kind(name));
  } else if (key == "adapter_rank") adapter().rank = parse_int<std::size_t>(key, value);
  else if (key == "adapter_alpha") adapter().alpha = parse_real(key, value);
  else if (key == "adapter_targets") adapter().targets = detail::split_list(value);
  else throw ConfigError("unknown config key '" + key + "'");
}

inline void apply_json(RunConfig& cfg, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("JSON config must be an object");
  for (const auto& [key, value] : j.items()) {
    if ((key == "model" || key == "train") && value.is_object()) {
      apply_json(cfg, value);
      continue;
    }
    if (key == "adapter" && value.is_null()) {
      cfg.train.adapter.reset();
      continue;
    }
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else if (value.is_array()) {
      std::vector<std::string> items;
      for (const auto& v : value) items.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      text = detail::join(items);
    } else text = value.dump();
    apply_setting(cfg, key, text);
  }
}

/// Parses either config form on top of `base`.
inline RunConfig parse_config(const std::string& text, RunConfig base = {}) {
  const std::string trimmed = detail::trim(text);
  if (!trimmed.empty() && trimmed.front() == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
    apply_json(base, j);
    return base;
  }
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return base;
}

inline RunConfig load_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

inline nlohmann::json to_json(const ModelConfig& m) {
  return {{"model_dim", m.model_dim}, {"n_layers", m.n_layers}, {"n_heads", m.n_heads}, {"patch", m.patch},
          {"image_size", m.image_size}, {"vocab_size", m.vocab_size}, {"max_cus", m.max_cus}};
}

inline nlohmann::json to_json(const TrainConfig& t) {
  std::vector<std::string> tasks;
  for (auto k : t.tasks) tasks.emplace_back(task_name(k));
  nlohmann::json j = {{"lr", t.lr},
                      {"weight_decay", t.weight_decay},
                      {"clip_norm", t.clip_norm},
                      {"uncond_prob", t.uncond_prob},
                      {"guidance_scale", t.guidance_scale},
                      {"batch_size", t.batch_size},
                      {"steps", t.steps},
                      {"seed", t.seed},
                      {"stage", t.stage},
                      {"tasks", tasks},
                      {"n_train", t.n_train},
                      {"checkpoint_every", t.checkpoint_every}};
  if (t.adapter) {
    j["adapter_rank"] = t.adapter->rank;
    j["adapter_alpha"] = t.adapter->alpha;
    j["adapter_targets"] = t.adapter->targets;
  }
  return j;
}

inline nlohmann::json to_json(const RunConfig& cfg) {
  return {{"model", to_json(cfg.model)}, {"train", to_json(cfg.train)}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

}  // namespace lcumini

#endif  // LCUMINI_CONFIG_HPP
