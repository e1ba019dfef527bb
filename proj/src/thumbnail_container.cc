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

#include "evs/thumbnail_container.h"

#include <zlib.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <optional>

#include "byte_io.h"
#include "evs/errors.h"

namespace evs {
namespace {

constexpr char kMagic[] = "TNC1";
constexpr std::uint8_t kFlagDeflate = 0x01;
constexpr std::uint8_t kKnownFlags = kFlagDeflate;

std::optional<std::string> find_violation(const ThumbnailContainer& c) {
  const ContainerHeader& h = c.header;
  if (!(std::isfinite(h.fps) && h.fps > 0)) return "fps must be positive";
  if (!(std::isfinite(h.duration) && h.duration > 0)) return "duration must be positive";
  if (!(std::isfinite(h.sample_interval) && h.sample_interval > 0)) return "sample interval must be positive";
  if (h.width == 0 || h.height == 0) return "thumbnail size must be positive";
  if (h.count == 0) return "container holds no thumbnails";
  if (h.count != c.entries.size()) {
    return "header count " + std::to_string(h.count) + " != " + std::to_string(c.entries.size()) + " entries";
  }
  for (std::size_t i = 0; i < c.entries.size(); ++i) {
    const ThumbnailEntry& e = c.entries[i];
    if (e.payload.size() != h.payload_size()) return "entry " + std::to_string(i) + " has wrong payload size";
    if (!std::isfinite(e.timestamp) || e.timestamp < -kTimestampTolerance ||
        e.timestamp > h.duration + kTimestampTolerance) {
      return "entry " + std::to_string(i) + " timestamp outside [0, duration]";
    }
    if (i > 0) {
      const double step = e.timestamp - c.entries[i - 1].timestamp;
      if (!(step > 0)) return "timestamps not strictly increasing at entry " + std::to_string(i);
      if (std::fabs(step - h.sample_interval) > kTimestampTolerance) {
        return "entry " + std::to_string(i) + " breaks the sample interval";
      }
    }
  }
  if (tick_count(h.duration, c.entries.front().timestamp, h.sample_interval) != h.count) {
    return "count disagrees with duration and interval";
  }
  return std::nullopt;
}

std::vector<std::uint8_t> deflate_bytes(std::span<const std::uint8_t> in) {
  uLongf size = compressBound(static_cast<uLong>(in.size()));
  std::vector<std::uint8_t> out(size);
  if (compress2(out.data(), &size, in.data(), static_cast<uLong>(in.size()), Z_BEST_COMPRESSION) != Z_OK) {
    throw Error("deflate failed");
  }
  out.resize(size);
  return out;
}

}  // namespace

Image ThumbnailContainer::image(std::size_t index) const {
  const ThumbnailEntry& e = entries.at(index);
  Image img(header.width, header.height);
  if (e.payload.size() != img.rgb.size()) throw DataError("payload size does not match header");
  img.rgb = e.payload;
  return img;
}

void ThumbnailContainer::validate() const {
  if (auto v = find_violation(*this)) throw FormatError("invalid container: " + *v);
}

std::size_t tick_count(double duration, double first_timestamp, double interval) {
  if (!(interval > 0)) throw ConfigError("sample interval must be positive");
  const double span = duration - first_timestamp;
  if (span < 0) return 1;
  return static_cast<std::size_t>(std::floor(span / interval + kTimestampTolerance)) + 1;
}

ThumbnailContainer generate(const FrameSource& source, const GenerateOptions& options) {
  const std::size_t n = source.frame_count();
  if (n == 0) throw DataError("cannot build a container from zero frames");
  if (!(options.interval > 0)) throw ConfigError("sample interval must be positive");
  if (options.width <= 0 || options.height <= 0 || options.width > 0xFFFF || options.height > 0xFFFF) {
    throw ConfigError("thumbnail size out of range");
  }

  ThumbnailContainer c;
  c.header.video_id = source.video_id();
  c.header.fps = static_cast<float>(source.fps());
  c.header.duration = source.duration();
  c.header.sample_interval = options.interval;
  c.header.width = static_cast<std::uint16_t>(options.width);
  c.header.height = static_cast<std::uint16_t>(options.height);
  c.header.deflate = options.deflate;

  const double t0 = source.timestamp(0);
  const std::size_t ticks = tick_count(c.header.duration, t0, options.interval);
  c.entries.reserve(ticks);
  std::size_t j = 0;
  for (std::size_t k = 0; k < ticks; ++k) {
    const double tick = t0 + static_cast<double>(k) * options.interval;
    // Timestamps are sorted, so the nearest frame only moves forward.
    while (j + 1 < n && std::fabs(source.timestamp(j + 1) - tick) < std::fabs(source.timestamp(j) - tick)) ++j;
    c.entries.push_back({tick, box_downscale(source.frame(j), options.width, options.height).rgb});
  }
  c.header.count = static_cast<std::uint32_t>(c.entries.size());
  return c;
}

std::vector<std::uint8_t> encode(const ThumbnailContainer& container) {
  if (auto v = find_violation(container)) throw ContractError("cannot encode container: " + *v);
  const ContainerHeader& h = container.header;
  io::ByteWriter w;
  w.raw(kMagic);
  w.u8(h.deflate ? kFlagDeflate : 0);
  w.string16(h.video_id);
  w.f32(h.fps);
  w.f64(h.duration);
  w.f64(h.sample_interval);
  w.u16(h.width);
  w.u16(h.height);
  w.u32(h.count);
  w.u32(static_cast<std::uint32_t>(crc32(0, w.buffer().data(), static_cast<uInt>(w.size()))));
  for (const ThumbnailEntry& e : container.entries) {
    w.f64(e.timestamp);
    if (h.deflate) {
      const auto packed = deflate_bytes(e.payload);
      w.u32(static_cast<std::uint32_t>(packed.size()));
      w.bytes(packed);
    } else {
      w.bytes(e.payload);
    }
  }
  return w.take();
}

ThumbnailContainer decode(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  const auto magic = r.bytes(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic", 0);
  const std::uint8_t flags = r.u8();
  ThumbnailContainer c;
  ContainerHeader& h = c.header;
  h.deflate = (flags & kFlagDeflate) != 0;
  h.video_id = r.string16();
  h.fps = r.f32();
  h.duration = r.f64();
  h.sample_interval = r.f64();
  h.width = r.u16();
  h.height = r.u16();
  h.count = r.u32();
  const std::size_t header_end = r.offset();
  const std::uint32_t crc = r.u32();
  if (crc != static_cast<std::uint32_t>(crc32(0, bytes.data(), static_cast<uInt>(header_end)))) {
    throw FormatError("header checksum mismatch", header_end);
  }
  if (flags & ~kKnownFlags) throw FormatError("unknown flags", 4);
  if (h.count == 0 || h.width == 0 || h.height == 0) throw FormatError("empty container header", header_end);
  // Each entry takes at least 8 bytes, which bounds a hostile count.
  if (h.count > r.remaining() / 8) throw FormatError("count exceeds available data", header_end);

  const std::size_t raw_size = h.payload_size();
  c.entries.reserve(h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    ThumbnailEntry e;
    e.timestamp = r.f64();
    if (h.deflate) {
      const std::size_t at = r.offset();
      const std::uint32_t len = r.u32();
      const auto packed = r.bytes(len);
      e.payload.resize(raw_size);
      uLongf out_len = static_cast<uLongf>(raw_size);
      if (uncompress(e.payload.data(), &out_len, packed.data(), len) != Z_OK || out_len != raw_size) {
        throw FormatError("corrupt compressed payload", at);
      }
    } else {
      const auto raw = r.bytes(raw_size);
      e.payload.assign(raw.begin(), raw.end());
    }
    c.entries.push_back(std::move(e));
  }
  if (!r.done()) throw FormatError("trailing bytes after last entry", r.offset());
  c.validate();
  return c;
}

void write_container_file(const std::filesystem::path& path, const ThumbnailContainer& container) {
  const auto bytes = encode(container);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to " + path.string());
}

ThumbnailContainer read_container_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

ReductionReport reduction_report(std::uint64_t thumbnail_count, std::uint64_t thumbnail_bytes,
                                 std::uint64_t original_frame_count, std::uint64_t original_frame_bytes,
                                 std::uint64_t encoded_container_bytes) {
  if (thumbnail_count == 0 || thumbnail_bytes == 0 || original_frame_count == 0 || original_frame_bytes == 0) {
    throw ContractError("reduction_report needs positive inputs");
  }
  auto pct = [](double part, double whole) { return 100.0 * (1.0 - part / whole); };
  const double tc = static_cast<double>(thumbnail_count), tb = static_cast<double>(thumbnail_bytes);
  const double fc = static_cast<double>(original_frame_count), fb = static_cast<double>(original_frame_bytes);
  ReductionReport r;
  r.count_reduction_pct = pct(tc, fc);
  r.byte_reduction_pct = pct(tc * tb, fc * fb);
  r.per_frame_memory_reduction_pct = pct(tb, fb);
  r.encoded_byte_reduction_pct =
      encoded_container_bytes ? pct(static_cast<double>(encoded_container_bytes), fc * fb) : r.byte_reduction_pct;
  r.frames_per_thumbnail = fc / tc;
  return r;
}

ReductionReport reduction_report(const ThumbnailContainer& container, std::uint64_t original_frame_count,
                                 std::uint64_t original_frame_bytes) {
  return reduction_report(container.size(), container.header.payload_size(), original_frame_count,
                          original_frame_bytes, encode(container).size());
}

}  // namespace evs
