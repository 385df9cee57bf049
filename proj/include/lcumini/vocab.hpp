// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_VOCAB_HPP
#define LCUMINI_VOCAB_HPP

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lcumini/errors.hpp"

namespace lcumini::vocab {

// Task words, then 8 colors, 2 shapes, 2 backgrounds.
inline constexpr std::array<std::string_view, 15> kWords = {
    "fill", "edges", "subject",                                            //
    "red",  "green", "blue", "yellow", "cyan", "magenta", "orange", "purple",  //
    "rect", "disk",                                                        //
    "light", "dark"};

inline constexpr std::size_t kSize = kWords.size();

inline constexpr std::size_t kFill = 0;
inline constexpr std::size_t kEdges = 1;
inline constexpr std::size_t kSubject = 2;
inline constexpr std::size_t kFirstColor = 3;
inline constexpr std::size_t kNumColors = 8;
inline constexpr std::size_t kRect = 11;
inline constexpr std::size_t kDisk = 12;
inline constexpr std::size_t kLight = 13;
inline constexpr std::size_t kDark = 14;

inline std::optional<std::size_t> lookup(std::string_view word) {
  for (std::size_t i = 0; i < kWords.size(); ++i) {
    if (kWords[i] == word) return i;
  }
  return std::nullopt;
}

/// Whitespace-separated words to token ids; unknown words are an error.
inline std::vector<std::size_t> encode(const std::string& prompt) {
  std::istringstream in(prompt);
  std::vector<std::size_t> ids;
  std::string word;
  while (in >> word) {
    const auto id = lookup(word);
    if (!id) throw ConfigError("unknown prompt word '" + word + "'");
    ids.push_back(*id);
  }
  return ids;
}

inline std::string decode(const std::vector<std::size_t>& ids) {
  std::string out;
  for (std::size_t id : ids) {
    if (!out.empty()) out += ' ';
    out += id < kSize ? std::string(kWords[id]) : "<" + std::to_string(id) + ">";
  }
  return out;
}

}  // namespace lcumini::vocab

#endif  // LCUMINI_VOCAB_HPP
