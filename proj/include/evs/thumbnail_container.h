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

#ifndef EVS_THUMBNAIL_CONTAINER_H_
#define EVS_THUMBNAIL_CONTAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evs/frame_source.h"
#include "evs/image.h"

namespace evs {

inline constexpr double kTimestampTolerance = 1e-9;

struct ContainerHeader {
  std::string video_id;
  float fps = 30;
  double duration = 0;
  double sample_interval = 1;
  std::uint16_t width = 160;
  std::uint16_t height = 90;
  std::uint32_t count = 0;
  bool deflate = false;  // payload compression on the wire only

  std::size_t payload_size() const { return static_cast<std::size_t>(width) * height * 3; }
  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct ThumbnailEntry {
  double timestamp = 0;
  std::vector<std::uint8_t> payload;  // raw RGB, width*height*3

  friend bool operator==(const ThumbnailEntry&, const ThumbnailEntry&) = default;
};

struct ThumbnailContainer {
  ContainerHeader header;
  std::vector<ThumbnailEntry> entries;

  std::size_t size() const { return entries.size(); }
  Image image(std::size_t index) const;

  // Throws FormatError unless every header/entry invariant holds.
  void validate() const;

  friend bool operator==(const ThumbnailContainer&, const ThumbnailContainer&) = default;
};

// Number of ticks t0 + k*interval that fall inside [t0, duration].
std::size_t tick_count(double duration, double first_timestamp, double interval);

struct GenerateOptions {
  double interval = 1.0;
  int width = 160;
  int height = 90;
  bool deflate = false;
};

// One thumbnail per tick: the frame nearest the tick (earlier frame on a
// tie), box-downscaled.
ThumbnailContainer generate(const FrameSource& source, const GenerateOptions& options = {});

std::vector<std::uint8_t> encode(const ThumbnailContainer& container);
ThumbnailContainer decode(std::span<const std::uint8_t> bytes);

void write_container_file(const std::filesystem::path& path, const ThumbnailContainer& container);
ThumbnailContainer read_container_file(const std::filesystem::path& path);

// Percent reductions over three bases. The byte figures compare raw
// payloads; encoded_byte uses the actual serialized size when known.
struct ReductionReport {
  double count_reduction_pct = 0;
  double byte_reduction_pct = 0;
  double per_frame_memory_reduction_pct = 0;
  double encoded_byte_reduction_pct = 0;
  double frames_per_thumbnail = 0;
};

ReductionReport reduction_report(std::uint64_t thumbnail_count, std::uint64_t thumbnail_bytes,
                                 std::uint64_t original_frame_count,
                                 std::uint64_t original_frame_bytes,
                                 std::uint64_t encoded_container_bytes = 0);
ReductionReport reduction_report(const ThumbnailContainer& container,
                                 std::uint64_t original_frame_count,
                                 std::uint64_t original_frame_bytes);

}  // namespace evs

#endif  // EVS_THUMBNAIL_CONTAINER_H_
