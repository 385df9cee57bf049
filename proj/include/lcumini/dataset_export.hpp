// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_DATASET_EXPORT_HPP
#define LCUMINI_DATASET_EXPORT_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcumini/ppm.hpp"
#include "lcumini/tasks.hpp"

namespace lcumini {

/// Writes one PPM per image plus index.jsonl (one record per sample) under `dir`.
/// Masks are written as P5. Paths in the index are relative to `dir`.
inline void export_dataset(const std::filesystem::path& dir, const std::vector<TaskSample>& samples) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.jsonl");
  if (!index) throw std::runtime_error("cannot write " + (dir / "index.jsonl").string());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%06zu", i);
    auto path = [&](const std::string& what) { return std::string(stem) + "_" + what + ".ppm"; };
    nlohmann::json rec;
    rec["kind"] = task_name(s.kind);
    rec["seed"] = s.seed;
    rec["instruction"] = s.instruction.token_ids;
    rec["prompt"] = vocab::decode(s.instruction.token_ids);
    std::vector<std::string> refs;
    for (std::size_t r = 0; r < s.references.size(); ++r) {
      const auto name = path("ref" + std::to_string(r));
      write_ppm_file((dir / name).string(), s.references[r]);
      refs.push_back(name);
    }
    rec["references"] = refs;
    write_ppm_file((dir / path("input")).string(), s.input_image);
    write_file((dir / path("mask")).string(), encode_ppm(to_raw(s.mask)));
    write_ppm_file((dir / path("target")).string(), s.target_image);
    rec["input"] = path("input");
    rec["mask"] = path("mask");
    rec["target"] = path("target");
    index << rec.dump() << '\n';
  }
}

}  // namespace lcumini

#endif  // LCUMINI_DATASET_EXPORT_HPP
