// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_CHECKPOINT_HPP
#define LCUMINI_CHECKPOINT_HPP

// Checkpoint layout (all integers little-endian):
//
//   "LCUMINI1"                         8-byte magic
//   u64 config_len, config bytes       UTF-8 JSON {"model": ..., "train": ...}
//   u32 tensor_count
//   per tensor:
//     u32 name_len, name bytes
//     u8  dtype tag (1 = float32)
//     u32 ndim, u64 dims[ndim]
//     u64 offset, u64 byte_length      relative to the payload start
//   u64 payload_len, payload           row-major IEEE-754 float32 values
//
// The file must end exactly at the payload end.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lcumini/config.hpp"
#include "lcumini/model.hpp"

namespace lcumini {

inline constexpr char kCheckpointMagic[8] = {'L', 'C', 'U', 'M', 'I', 'N', 'I', '1'};
inline constexpr std::uint8_t kDtypeFloat32 = 1;

class BadMagicError : public CorruptCheckpointError {
 public:
  using CorruptCheckpointError::CorruptCheckpointError;
};

struct CheckpointData {
  nlohmann::json config;
  std::map<std::string, std::pair<Shape, std::vector<float>>> tensors;
  std::vector<std::string> order;  // tensor names in directory order
};

namespace detail {

class ByteWriter {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.append(c, n);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& data) : data_(data) {}

  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw CorruptCheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  template <typename U>
  U le() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string take(std::size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string serialize_checkpoint(const ModelWeights<float>& w, const nlohmann::json& config) {
  detail::ByteWriter out;
  out.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::string cfg = config.dump();
  out.le<std::uint64_t>(cfg.size());
  out.bytes(cfg.data(), cfg.size());

  const auto params = w.named_parameters();
  out.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params) {
    out.le<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    out.bytes(name.data(), name.size());
    out.le<std::uint8_t>(kDtypeFloat32);
    out.le<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) out.le<std::uint64_t>(d);
    const std::uint64_t len = t.numel() * sizeof(float);
    out.le<std::uint64_t>(offset);
    out.le<std::uint64_t>(len);
    offset += len;
  }
  out.le<std::uint64_t>(offset);
  for (const auto& [name, t] : params) {
    for (float v : t.data()) out.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
  }
  return out.str();
}

inline CheckpointData parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw BadMagicError("not an lcumini checkpoint (bad magic)");
  }
  detail::ByteReader in(bytes);
  in.take(sizeof(kCheckpointMagic));
  CheckpointData ck;
  const auto cfg_len = in.le<std::uint64_t>();
  if (cfg_len > in.remaining()) throw CorruptCheckpointError("checkpoint config block exceeds file size");
  try {
    ck.config = nlohmann::json::parse(in.take(cfg_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint config is not valid JSON: ") + e.what());
  }

  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset, length;
  };
  std::vector<Entry> entries;
  const auto count = in.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const auto name_len = in.le<std::uint32_t>();
    e.name = in.take(name_len);
    if (in.le<std::uint8_t>() != kDtypeFloat32) throw CorruptCheckpointError("unsupported dtype for tensor " + e.name);
    const auto ndim = in.le<std::uint32_t>();
    if (ndim > 8) throw CorruptCheckpointError("implausible rank for tensor " + e.name);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const auto dim = in.le<std::uint64_t>();
      if (dim == 0 || dim > (std::uint64_t{1} << 32)) throw CorruptCheckpointError("invalid dimension for tensor " + e.name);
      e.shape.push_back(static_cast<std::size_t>(dim));
      numel *= dim;
    }
    e.offset = in.le<std::uint64_t>();
    e.length = in.le<std::uint64_t>();
    if (e.length != numel * sizeof(float)) throw CorruptCheckpointError("byte length mismatch for tensor " + e.name);
    entries.push_back(std::move(e));
  }
  const auto payload_len = in.le<std::uint64_t>();
  if (payload_len != in.remaining()) {
    throw CorruptCheckpointError("payload length " + std::to_string(payload_len) + " but " +
                                 std::to_string(in.remaining()) + " bytes remain");
  }
  const std::size_t payload_start = in.pos();

  std::vector<const Entry*> by_offset;
  for (const auto& e : entries) {
    if (e.offset > payload_len || e.length > payload_len - e.offset) {
      throw CorruptCheckpointError("tensor " + e.name + " lies outside the payload");
    }
    by_offset.push_back(&e);
  }
  std::sort(by_offset.begin(), by_offset.end(), [](const Entry* a, const Entry* b) { return a->offset < b->offset; });
  for (std::size_t i = 1; i < by_offset.size(); ++i) {
    if (by_offset[i - 1]->offset + by_offset[i - 1]->length > by_offset[i]->offset) {
      throw CorruptCheckpointError("tensors " + by_offset[i - 1]->name + " and " + by_offset[i]->name + " overlap");
    }
  }

  for (const auto& e : entries) {
    std::vector<float> values(e.length / sizeof(float));
    for (std::size_t i = 0; i < values.size(); ++i) {
      const std::size_t at = payload_start + e.offset + i * sizeof(float);
      std::uint32_t bits = 0;
      for (std::size_t b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
      values[i] = std::bit_cast<float>(bits);
    }
    if (!ck.tensors.emplace(e.name, std::make_pair(e.shape, std::move(values))).second) {
      throw CorruptCheckpointError("duplicate tensor " + e.name);
    }
    ck.order.push_back(e.name);
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const ModelWeights<float>& w, const RunConfig& cfg) {
  const std::string bytes = serialize_checkpoint(w, to_json(cfg));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write checkpoint " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write to checkpoint " + path);
}

inline CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CorruptCheckpointError("cannot open checkpoint " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_checkpoint(ss.str());
}

struct LoadedModel {
  RunConfig config;
  ModelWeights<float> weights;
};

/// Rebuilds weights (with adapters, when the config has one) and fills them from the file.
inline LoadedModel load_checkpoint(const std::string& path) {
  auto ck = read_checkpoint(path);
  LoadedModel out;
  try {
    out.config = run_config_from_json(ck.config);
    out.config.model.validate();
    out.weights = init_weights<float>(out.config.model, 0);
    const bool has_adapter = std::any_of(ck.order.begin(), ck.order.end(), [](const std::string& n) {
      return n.ends_with(".lora_down");
    });
    if (has_adapter && out.config.train.adapter) attach_lora(out.weights, *out.config.train.adapter, 0);
    out.weights.load_state(ck.tensors);
  } catch (const CorruptCheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CorruptCheckpointError(std::string("checkpoint does not match its config: ") + e.what());
  }
  return out;
}

}  // namespace lcumini

#endif  // LCUMINI_CHECKPOINT_HPP
