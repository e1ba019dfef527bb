// Copyright 2026 The evs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "evs/image.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "evs/errors.h"

namespace evs {
namespace {

struct Tap {
  int index;
  double weight;
};

// For each destination cell, the source cells it overlaps and by how much.
std::vector<std::vector<Tap>> box_taps(int src, int dst) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(dst));
  const double scale = static_cast<double>(src) / dst;
  for (int d = 0; d < dst; ++d) {
    const double lo = d * scale, hi = (d + 1) * scale;
    double total = 0;
    for (int s = static_cast<int>(std::floor(lo)); s < src && s < hi; ++s) {
      const double w = std::min<double>(s + 1, hi) - std::max<double>(s, lo);
      if (w <= 0) continue;
      taps[d].push_back({s, w});
      total += w;
    }
    for (Tap& t : taps[d]) t.weight /= total;
  }
  return taps;
}

}  // namespace

Image box_downscale(const Image& src, int width, int height) {
  if (src.width <= 0 || src.height <= 0 ||
      src.rgb.size() != static_cast<std::size_t>(src.width) * src.height * 3) {
    throw DataError("box_downscale: malformed source image");
  }
  if (width <= 0 || height <= 0) throw ContractError("box_downscale: target size must be positive");
  if (src.width == width && src.height == height) return src;

  const auto xt = box_taps(src.width, width);
  const auto yt = box_taps(src.height, height);
  // Horizontal pass into doubles, then vertical pass with rounding.
  std::vector<double> rows(static_cast<std::size_t>(src.height) * width * 3);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (const Tap& t : xt[x]) {
        const std::uint8_t* p = src.pixel(t.index, y);
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * p[c];
      }
      for (int c = 0; c < 3; ++c) rows[(static_cast<std::size_t>(y) * width + x) * 3 + c] = acc[c];
    }
  }
  Image out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc[3] = {0, 0, 0};
      for (const Tap& t : yt[y]) {
        const double* p = &rows[(static_cast<std::size_t>(t.index) * width + x) * 3];
        for (int c = 0; c < 3; ++c) acc[c] += t.weight * p[c];
      }
      std::uint8_t* q = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) q[c] = static_cast<std::uint8_t>(std::lround(std::clamp(acc[c], 0.0, 255.0)));
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode failed: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, out.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError(std::string("png decode failed: ") + png.message);
  }
  return out;
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(bytes);
}

}  // namespace evs
