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

#include "evs/edge_client.h"

#include <algorithm>
#include <bit>
#include <chrono>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include "bounded_queue.h"
#include "evs/errors.h"

namespace evs {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t).count();
}

// Runs f and appends its wall time under `stage`.
template <typename F>
auto timed(std::vector<StageMetric>& metrics, const char* stage, F&& f) {
  const auto t0 = Clock::now();
  if constexpr (std::is_void_v<decltype(f())>) {
    f();
    metrics.push_back({stage, ms_since(t0)});
  } else {
    auto out = f();
    metrics.push_back({stage, ms_since(t0)});
    return out;
  }
}

struct Fetched {
  std::size_t index;
  std::uint64_t bytes;
};

// Fetches exactly one stored segment and checks it against the catalog.
Fetched fetch_segment(VspClient& vsp, const CatalogEntry& entry, const SegmentRef& ref) {
  const SegmentBundle b = vsp.segments(entry.video_id, ref.start, ref.end);
  if (b.indices.size() != 1 || b.indices[0] != ref.index || b.blobs.size() != 1) {
    throw DataError("provider returned the wrong segment for index " + std::to_string(ref.index));
  }
  if (b.blobs[0].size() != ref.bytes || crc32_of(b.blobs[0]) != ref.crc32) {
    throw DataError("segment " + std::to_string(ref.index) + " failed its checksum");
  }
  return {ref.index, ref.bytes};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

nlohmann::json SummarySession::metrics_json() const {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& m : metrics) stages.push_back({{"stage", m.stage}, {"ms", m.ms}});
  return {{"stages", stages}, {"total_ms", total_ms}, {"thumbnails_per_second", thumbnails_per_second}};
}

nlohmann::json SummarySession::to_json() const {
  nlohmann::json manifest_json = nlohmann::json::array();
  for (const auto& f : manifest) {
    manifest_json.push_back({{"index", f.index}, {"start", f.start}, {"end", f.end}, {"bytes", f.bytes},
                             {"preferred", f.preferred}, {"prefetched", f.prefetched}});
  }
  const double declared = static_cast<double>(std::max<std::uint64_t>(bandwidth.declared_bytes, 1));
  return {{"video_id", video_id},
          {"profile", profile.to_json()},
          {"track", track.to_json()},
          {"edl", nlohmann::json::parse(edl())},
          {"metrics", metrics_json()},
          {"bandwidth",
           {{"container_bytes", bandwidth.container_bytes},
            {"prefetch_bytes", bandwidth.prefetch_bytes},
            {"streamed_bytes", bandwidth.streamed_bytes},
            {"declared_bytes", bandwidth.declared_bytes},
            {"before_playback_bytes", bandwidth.before_playback()},
            {"before_playback_fraction", static_cast<double>(bandwidth.before_playback()) / declared},
            {"total_bytes", bandwidth.total()},
            {"total_fraction", static_cast<double>(bandwidth.total()) / declared},
            {"max_queue_depth", bandwidth.max_queue_depth}}},
          {"manifest", manifest_json}};
}

SummarySession summarize(VspClient& vsp, std::string_view video_id, const PreferenceProfile& profile,
                         const ThumbnailClassifier& classifier, const SummarizeConfig& config) {
  const auto start = Clock::now();
  // Everything checkable offline is checked before the first request.
  profile.validate();
  const ResolvedProfile resolved(profile, classifier.labels());
  const double threshold = config.threshold.value_or(profile.threshold);
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("threshold must be in (0, 1]");
  if (!(config.fast_speed > 1)) throw ConfigError("fast speed must exceed 1");

  SummarySession s;
  s.video_id = std::string(video_id);
  s.profile = profile;

  const CatalogEntry entry = timed(s.metrics, "catalog", [&] { return vsp.video(video_id); });
  const auto bytes = timed(s.metrics, "fetch_container", [&] { return vsp.container(video_id); });
  if (crc32_of(bytes) != entry.container_crc32) throw DataError("container failed its checksum");
  s.bandwidth.container_bytes = bytes.size();
  s.bandwidth.declared_bytes = entry.declared_bytes();
  const ThumbnailContainer container = timed(s.metrics, "decode", [&] { return decode(bytes); });

  AnalyzeConfig ac = config.analyze;
  ac.initial_stride = std::min(ac.initial_stride, std::bit_floor(container.size()));
  ac.min_stride = std::min(ac.min_stride, ac.initial_stride);
  const auto analyze_start = Clock::now();
  s.track = timed(s.metrics, "analyze", [&] { return analyze(container, classifier, profile, ac); });
  const double analyze_s = std::chrono::duration<double>(Clock::now() - analyze_start).count();
  s.thumbnails_per_second = analyze_s > 0 ? static_cast<double>(s.track.classifications()) / analyze_s : 0;

  timed(s.metrics, "schedule", [&] {
    const auto segs = segments_from_track(s.track, threshold, config.segments);
    s.schedule = build_schedule(s.video_id, segs, config.fast_speed, s.track.duration);
    s.trace = play_simulation(s.schedule, config.trace_period);
  });

  // Which stored segments overlap preferred time.
  std::vector<bool> preferred(entry.segments.size(), false);
  for (const auto& seg : entry.segments) {
    for (const auto& e : s.schedule.entries) {
      if (e.interval.kind == SegmentKind::kPreferred && e.interval.start < seg.end && e.interval.end > seg.start) {
        preferred[seg.index] = true;
        break;
      }
    }
  }
  std::vector<std::size_t> prefetch;
  for (std::size_t i = 0; i < entry.segments.size() && prefetch.size() < config.prefetch_capacity; ++i) {
    if (preferred[i]) prefetch.push_back(i);
  }
  for (std::size_t i = 0; i < entry.segments.size() && prefetch.size() < config.prefetch_capacity; ++i) {
    if (std::find(prefetch.begin(), prefetch.end(), i) == prefetch.end()) prefetch.push_back(i);
  }
  std::sort(prefetch.begin(), prefetch.end());

  auto record = [&](const SegmentRef& ref, bool prefetched) {
    s.manifest.push_back({ref.index, ref.start, ref.end, ref.bytes, preferred[ref.index], prefetched});
  };

  timed(s.metrics, "prefetch", [&] {
    for (std::size_t i : prefetch) {
      s.bandwidth.prefetch_bytes += fetch_segment(vsp, entry, entry.segments[i]).bytes;
      record(entry.segments[i], true);
    }
  });

  if (config.stream_segments) {
    timed(s.metrics, "stream", [&] {
      // The producer fetches in schedule order through a bounded queue;
      // the player drains it in order, using prefetched segments in place.
      BoundedQueue<Fetched> queue(config.prefetch_capacity);
      std::exception_ptr failure;
      std::thread producer([&] {
        try {
          for (const auto& ref : entry.segments) {
            if (std::binary_search(prefetch.begin(), prefetch.end(), ref.index)) continue;
            if (!queue.push(fetch_segment(vsp, entry, ref))) return;
          }
        } catch (...) {
          failure = std::current_exception();
        }
        queue.close();
      });
      for (const auto& ref : entry.segments) {
        if (std::binary_search(prefetch.begin(), prefetch.end(), ref.index)) continue;
        const auto got = queue.pop();
        if (!got) break;
        if (got->index != ref.index) {
          queue.close();
          producer.join();
          throw ContractError("segments arrived out of schedule order");
        }
        s.bandwidth.streamed_bytes += got->bytes;
        record(ref, false);
      }
      producer.join();
      if (failure) std::rethrow_exception(failure);
      s.bandwidth.max_queue_depth = queue.max_depth();
    });
  }

  s.total_ms = ms_since(start);
  return s;
}

void write_session(const SummarySession& session, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "track.json", session.track.to_json().dump(2) + "\n");
  write_text(dir / "edl.json", session.edl() + "\n");
  write_text(dir / "trace.json", trace_to_json(session.trace).dump() + "\n");
  write_text(dir / "session.json", session.to_json().dump(2) + "\n");
}

}  // namespace evs
