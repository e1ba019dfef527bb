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

#include "evs/video_store.h"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "evs/errors.h"
#include "evs/summary_scheduler.h"

namespace evs {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kCatalogFile[] = "catalog.json";

std::vector<std::uint8_t> slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("cannot open " + path.string());
  return std::vector<std::uint8_t>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_atomically(const fs::path& path, std::span<const std::uint8_t> bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

json to_json(const CatalogEntry& e) {
  json segs = json::array();
  for (const auto& s : e.segments) {
    segs.push_back({{"index", s.index}, {"start", s.start}, {"end", s.end}, {"file", s.file},
                    {"bytes", s.bytes}, {"crc32", s.crc32}});
  }
  return {{"video_id", e.video_id},
          {"title", e.title},
          {"duration", e.duration},
          {"thumbnail_count", e.thumbnail_count},
          {"container", {{"file", e.container_file}, {"bytes", e.container_bytes}, {"crc32", e.container_crc32}}},
          {"segments", segs}};
}

CatalogEntry entry_from_json(const json& j) {
  CatalogEntry e;
  e.video_id = j.at("video_id").get<std::string>();
  e.title = j.value("title", e.video_id);
  e.duration = j.at("duration").get<double>();
  e.thumbnail_count = j.value("thumbnail_count", 0u);
  const auto& c = j.at("container");
  e.container_file = c.value("file", "");
  e.container_bytes = c.at("bytes").get<std::uint64_t>();
  e.container_crc32 = c.at("crc32").get<std::uint32_t>();
  for (const auto& s : j.at("segments")) {
    e.segments.push_back({s.at("index").get<std::size_t>(), s.at("start").get<double>(), s.at("end").get<double>(),
                          s.value("file", ""), s.at("bytes").get<std::uint64_t>(),
                          s.at("crc32").get<std::uint32_t>()});
  }
  return e;
}

void check_entry(const CatalogEntry& e) {
  if (!valid_video_id(e.video_id)) throw DataError("invalid video id '" + e.video_id + "'");
  if (!(e.duration > 0)) throw DataError(e.video_id + ": duration must be positive");
  if (e.segments.empty()) throw DataError(e.video_id + ": no segments");
  double cursor = 0;
  for (std::size_t i = 0; i < e.segments.size(); ++i) {
    const auto& s = e.segments[i];
    if (s.index != i) throw DataError(e.video_id + ": segment indices out of order");
    if (s.start != cursor || !(s.end > s.start)) throw DataError(e.video_id + ": segments do not tile the timeline");
    cursor = s.end;
  }
  if (std::fabs(cursor - e.duration) > 1e-9) throw DataError(e.video_id + ": segments do not reach the duration");
}

fs::path safe_join(const fs::path& root, const std::string& rel) {
  const fs::path p = fs::path(rel).lexically_normal();
  if (p.is_absolute() || p.empty() || *p.begin() == "..") throw DataError("store path escapes root: " + rel);
  return root / p;
}

}  // namespace

std::uint64_t CatalogEntry::declared_bytes() const {
  std::uint64_t n = 0;
  for (const auto& s : segments) n += s.bytes;
  return n;
}

json CatalogEntry::detail() const {
  json j = to_json(*this);
  j["container"].erase("file");
  for (auto& s : j["segments"]) s.erase("file");
  j["declared_bytes"] = declared_bytes();
  return j;
}

CatalogEntry CatalogEntry::from_detail(const json& j) {
  try {
    CatalogEntry e = entry_from_json(j);
    check_entry(e);
    return e;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed video detail: ") + e.what());
  }
}

json CatalogEntry::summary() const {
  return {{"video_id", video_id},
          {"title", title},
          {"duration", duration},
          {"thumbnail_count", thumbnail_count},
          {"container_bytes", container_bytes},
          {"container_crc32", container_crc32},
          {"declared_bytes", declared_bytes()},
          {"segment_count", segments.size()}};
}

std::uint64_t SegmentBundle::total_bytes() const {
  std::uint64_t n = 0;
  for (const auto& b : blobs) n += b.size();
  return n;
}

bool valid_video_id(std::string_view id) {
  if (id.empty() || id.size() > 128 || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
           c == '-';
  });
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> synthetic_segment_blob(std::string_view video_id, std::size_t index, std::size_t size) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : video_id) h = (h ^ static_cast<std::uint8_t>(c)) * 1099511628211ULL;
  std::mt19937_64 rng(h ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  std::vector<std::uint8_t> out(size);
  for (std::size_t i = 0; i < size; i += 8) {
    const std::uint64_t v = rng();
    for (std::size_t k = 0; k < 8 && i + k < size; ++k) out[i + k] = static_cast<std::uint8_t>(v >> (8 * k));
  }
  return out;
}

std::shared_ptr<const VideoStore> VideoStore::load(const fs::path& root) {
  auto store = std::shared_ptr<VideoStore>(new VideoStore());
  store->root_ = root;
  const fs::path catalog = root / kCatalogFile;
  if (!fs::exists(catalog)) {
    if (!fs::is_directory(root)) throw NotFound("store root does not exist: " + root.string());
    return store;  // an empty store
  }
  const auto bytes = slurp(catalog);
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    for (const auto& v : j.at("videos")) store->entries_.push_back(entry_from_json(v));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed catalog: ") + e.what());
  }
  std::sort(store->entries_.begin(), store->entries_.end(),
            [](const CatalogEntry& a, const CatalogEntry& b) { return a.video_id < b.video_id; });
  for (std::size_t i = 0; i < store->entries_.size(); ++i) {
    check_entry(store->entries_[i]);
    if (i > 0 && store->entries_[i].video_id == store->entries_[i - 1].video_id) {
      throw DataError("duplicate video id " + store->entries_[i].video_id);
    }
  }
  return store;
}

const CatalogEntry& VideoStore::entry(std::string_view video_id) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), video_id,
                                   [](const CatalogEntry& e, std::string_view id) { return e.video_id < id; });
  if (it == entries_.end() || it->video_id != video_id) throw NotFound("unknown video '" + std::string(video_id) + "'");
  return *it;
}

std::vector<std::uint8_t> VideoStore::read_file(const std::string& rel, std::uint64_t bytes, std::uint32_t crc) const {
  auto data = slurp(safe_join(root_, rel));
  if (data.size() != bytes || crc32_of(data) != crc) throw DataError("stored file damaged: " + rel);
  return data;
}

std::vector<std::uint8_t> VideoStore::container_bytes(std::string_view video_id) const {
  const CatalogEntry& e = entry(video_id);
  return read_file(e.container_file, e.container_bytes, e.container_crc32);
}

SegmentBundle VideoStore::segments(std::string_view video_id, double start, double end) const {
  const CatalogEntry& e = entry(video_id);
  if (!(std::isfinite(start) && std::isfinite(end)) || start < 0 || !(start < end) || end > e.duration) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "segment range [%.6f, %.6f) outside [0, %.6f) or empty", start, end, e.duration);
    throw RangeError(buf);
  }
  SegmentBundle b;
  b.video_id = e.video_id;
  // Segments tile the timeline, so the minimal cover is the contiguous run
  // from the one containing `start` to the one containing end-.
  const auto first = std::upper_bound(e.segments.begin(), e.segments.end(), start,
                                      [](double t, const SegmentRef& s) { return t < s.end; });
  for (auto it = first; it != e.segments.end() && it->start < end; ++it) {
    b.indices.push_back(it->index);
    b.blobs.push_back(read_file(it->file, it->bytes, it->crc32));
  }
  b.start = e.segments[b.indices.front()].start;
  b.end = e.segments[b.indices.back()].end;
  return b;
}

CatalogEntry add_video(const fs::path& root, const FrameSource& source, const StoreVideoOptions& options) {
  const std::string id = source.video_id();
  if (!valid_video_id(id)) throw ConfigError("video id '" + id + "' must match [A-Za-z0-9._-]+");
  if (!(options.segment_seconds > 0) || options.bytes_per_second == 0) {
    throw ConfigError("segment length and bitrate must be positive");
  }
  fs::create_directories(root / id);

  CatalogEntry e;
  e.video_id = id;
  e.title = options.title.empty() ? id : options.title;
  const ThumbnailContainer container = generate(source, options.container);
  e.duration = container.header.duration;
  e.thumbnail_count = container.header.count;
  const auto encoded = encode(container);
  e.container_file = id + "/container.tnc";
  e.container_bytes = encoded.size();
  e.container_crc32 = crc32_of(encoded);
  write_atomically(root / e.container_file, encoded);

  for (std::size_t i = 0;; ++i) {
    const double a = quantize(static_cast<double>(i) * options.segment_seconds);
    if (a >= e.duration) break;
    const double b = std::min(quantize(static_cast<double>(i + 1) * options.segment_seconds), e.duration);
    const auto size = static_cast<std::size_t>(
        std::max<double>(1.0, std::round((b - a) * static_cast<double>(options.bytes_per_second))));
    const auto blob = synthetic_segment_blob(id, i, size);
    char name[32];
    std::snprintf(name, sizeof name, "seg_%05zu.bin", i);
    SegmentRef s{i, a, b, id + "/" + name, blob.size(), crc32_of(blob)};
    write_atomically(root / s.file, blob);
    e.segments.push_back(std::move(s));
  }
  check_entry(e);

  // Merge into the catalog, replacing any entry with the same id.
  std::vector<CatalogEntry> entries;
  if (fs::exists(root / kCatalogFile)) entries = VideoStore::load(root)->catalog();
  std::erase_if(entries, [&](const CatalogEntry& x) { return x.video_id == id; });
  entries.push_back(e);
  std::sort(entries.begin(), entries.end(),
            [](const CatalogEntry& x, const CatalogEntry& y) { return x.video_id < y.video_id; });
  json videos = json::array();
  for (const auto& x : entries) videos.push_back(to_json(x));
  const std::string text = json{{"videos", videos}}.dump(2) + "\n";
  write_atomically(root / kCatalogFile, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return e;
}

}  // namespace evs
