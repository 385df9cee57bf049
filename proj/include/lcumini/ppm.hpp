// Copyright 2026 The lcumini Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef LCUMINI_PPM_HPP
#define LCUMINI_PPM_HPP

// Binary netpbm I/O: P6 (RGB) and P5 (gray), 8-bit only.
// Byte v maps to v / 255; writing rounds clamp(x, 0, 1) * 255.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcumini/tensor.hpp"

namespace lcumini {

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RawImage {
  std::size_t channels = 0;  // 1 (P5) or 3 (P6)
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // interleaved, row-major
};

namespace detail {

inline std::size_t read_header_int(std::istream& in) {
  int c = in.peek();
  while (c == '#' || std::isspace(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    c = in.peek();
  }
  std::size_t v = 0;
  if (!(in >> v)) throw ImageFormatError("malformed PNM header");
  return v;
}

}  // namespace detail

inline RawImage decode_pnm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  RawImage img;
  if (magic == "P6") img.channels = 3;
  else if (magic == "P5") img.channels = 1;
  else throw ImageFormatError("unsupported image format (expected binary P5 or P6)");
  img.width = detail::read_header_int(in);
  img.height = detail::read_header_int(in);
  const std::size_t maxval = detail::read_header_int(in);
  if (img.width == 0 || img.height == 0) throw ImageFormatError("image has zero size");
  if (maxval != 255) throw ImageFormatError("only 8-bit images (maxval 255) are supported");
  in.get();  // single whitespace before the raster
  img.pixels.resize(img.width * img.height * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != img.pixels.size()) throw ImageFormatError("image raster truncated");
  return img;
}

inline std::string encode_ppm(const RawImage& img) {
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline RawImage read_pnm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ImageFormatError("cannot open image " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return decode_pnm(ss.str());
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ImageFormatError("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// RGB raster -> 3 x H x W in [0, 1]. Gray inputs are rejected.
inline Tensor<float> rgb_tensor(const RawImage& img) {
  if (img.channels != 3) throw ImageFormatError("expected an RGB (P6) image");
  const std::size_t h = img.height, w = img.width;
  std::vector<float> data(3 * h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) data[(c * h + y) * w + x] = static_cast<float>(img.pixels[(y * w + x) * 3 + c]) / 255.0f;
  return Tensor<float>::from({3, h, w}, std::move(data));
}

/// P5 or P6 -> 1 x H x W binary mask; any nonzero sample sets the pixel.
inline Tensor<float> mask_tensor(const RawImage& img) {
  const std::size_t h = img.height, w = img.width;
  std::vector<float> data(h * w, 0.0f);
  for (std::size_t i = 0; i < h * w; ++i) {
    for (std::size_t c = 0; c < img.channels; ++c) {
      if (img.pixels[i * img.channels + c] != 0) data[i] = 1.0f;
    }
  }
  return Tensor<float>::from({1, h, w}, std::move(data));
}

inline std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

/// 3 x H x W or 1 x H x W tensor -> raster.
inline RawImage to_raw(const Tensor<float>& image) {
  if (image.rank() != 3 || (image.dim(0) != 3 && image.dim(0) != 1)) {
    throw ShapeError("to_raw: expected 3xHxW or 1xHxW, got " + shape_str(image.shape()));
  }
  RawImage img;
  img.channels = image.dim(0);
  img.height = image.dim(1);
  img.width = image.dim(2);
  img.pixels.resize(image.numel());
  const auto px = image.data();
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < img.channels; ++c)
        img.pixels[(y * img.width + x) * img.channels + c] = quantize(px[(c * img.height + y) * img.width + x]);
  return img;
}

inline void write_ppm_file(const std::string& path, const Tensor<float>& image) { write_file(path, encode_ppm(to_raw(image))); }

}  // namespace lcumini

#endif  // LCUMINI_PPM_HPP
