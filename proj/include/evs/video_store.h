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

#ifndef EVS_VIDEO_STORE_H_
#define EVS_VIDEO_STORE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "evs/frame_source.h"
#include "evs/thumbnail_container.h"
#include "json.hpp"

namespace evs {

struct SegmentRef {
  std::size_t index = 0;
  double start = 0;
  double end = 0;
  std::string file;  // relative to the store root
  std::uint64_t bytes = 0;
  std::uint32_t crc32 = 0;
};

struct CatalogEntry {
  std::string video_id;
  std::string title;
  double duration = 0;
  std::string container_file;
  std::uint64_t container_bytes = 0;
  std::uint32_t container_crc32 = 0;
  std::uint32_t thumbnail_count = 0;
  std::vector<SegmentRef> segments;  // tiles [0, duration)

  // Full-video size: the sum of all segment blobs.
  std::uint64_t declared_bytes() const;
  nlohmann::json summary() const;
  // Everything but store-internal file names.
  nlohmann::json detail() const;
  static CatalogEntry from_detail(const nlohmann::json& j);
};

// Blobs covering a requested time range, in time order.
struct SegmentBundle {
  std::string video_id;
  double start = 0;  // covered interval, a superset of the request
  double end = 0;
  std::vector<std::size_t> indices;
  std::vector<std::vector<std::uint8_t>> blobs;

  std::uint64_t total_bytes() const;
};

// Video ids are restricted to [A-Za-z0-9._-] so they embed in URLs and
// file names without escaping.
bool valid_video_id(std::string_view id);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

// Deterministic opaque bytes for segment `index` of `video_id`.
std::vector<std::uint8_t> synthetic_segment_blob(std::string_view video_id, std::size_t index,
                                                 std::size_t size);

// Read-only view of a store directory: catalog.json plus per-video
// container and segment files. Safe to share across threads.
class VideoStore {
 public:
  static std::shared_ptr<const VideoStore> load(const std::filesystem::path& root);

  const std::filesystem::path& root() const { return root_; }
  // Sorted by video id.
  const std::vector<CatalogEntry>& catalog() const { return entries_; }
  const CatalogEntry& entry(std::string_view video_id) const;  // NotFound

  std::vector<std::uint8_t> container_bytes(std::string_view video_id) const;
  // Minimal run of stored segments covering [start, end). RangeError unless
  // 0 <= start < end <= duration.
  SegmentBundle segments(std::string_view video_id, double start, double end) const;

 private:
  std::vector<std::uint8_t> read_file(const std::string& rel, std::uint64_t bytes, std::uint32_t crc) const;

  std::filesystem::path root_;
  std::vector<CatalogEntry> entries_;
};

struct StoreVideoOptions {
  std::string title;
  GenerateOptions container{.interval = 1.0, .deflate = true};
  double segment_seconds = 4;
  std::uint64_t bytes_per_second = 64 * 1024;
};

// Generates the container and segment files for `source` under `root` and
// adds or replaces its catalog entry. Not safe to run against a store that
// is being served.
CatalogEntry add_video(const std::filesystem::path& root, const FrameSource& source,
                       const StoreVideoOptions& options = {});

}  // namespace evs

#endif  // EVS_VIDEO_STORE_H_
