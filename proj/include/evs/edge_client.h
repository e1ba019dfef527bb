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

#ifndef EVS_EDGE_CLIENT_H_
#define EVS_EDGE_CLIENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evs/hierarchical_analyzer.h"
#include "evs/playback.h"
#include "evs/summary_scheduler.h"
#include "evs/vsp_client.h"
#include "json.hpp"

namespace evs {

struct SummarizeConfig {
  AnalyzeConfig analyze;           // stride is clamped to the container size
  std::optional<double> threshold;  // defaults to the profile threshold
  SegmentOptions segments;
  double fast_speed = kDefaultFastSpeed;
  std::size_t prefetch_capacity = 4;  // segments held ahead of playback
  bool stream_segments = true;        // fetch the remaining segments too
  double trace_period = 0.5;
};

struct StageMetric {
  std::string stage;
  double ms = 0;
};

struct FetchRecord {
  std::size_t index = 0;
  double start = 0;
  double end = 0;
  std::uint64_t bytes = 0;
  bool preferred = false;  // overlaps a preferred schedule entry
  bool prefetched = false;  // fetched before playback began
};

struct BandwidthReport {
  std::uint64_t container_bytes = 0;
  std::uint64_t prefetch_bytes = 0;  // segments fetched before playback
  std::uint64_t streamed_bytes = 0;  // segments fetched during playback
  std::uint64_t declared_bytes = 0;  // catalog full-video size
  std::size_t max_queue_depth = 0;

  std::uint64_t before_playback() const { return container_bytes + prefetch_bytes; }
  std::uint64_t total() const { return container_bytes + prefetch_bytes + streamed_bytes; }
};

struct SummarySession {
  std::string video_id;
  PreferenceProfile profile;
  RelevanceTrack track;
  PlaybackSchedule schedule;
  std::vector<FetchRecord> manifest;  // in fetch order
  std::vector<TraceSample> trace;
  std::vector<StageMetric> metrics;  // in execution order
  BandwidthReport bandwidth;
  double total_ms = 0;
  double thumbnails_per_second = 0;  // analyzer throughput

  std::string edl() const { return emit_edl(schedule); }
  nlohmann::json metrics_json() const;
  // Track, EDL, metrics, bandwidth and manifest. The profile is included
  // since the document stays on the device.
  nlohmann::json to_json() const;
};

// Fetches the container, analyzes and schedules locally, then fetches the
// segments: preferred ones first into a bounded prefetch, the rest streamed
// in schedule order alongside a simulated playback. Preferences never leave
// the device. Profile errors are raised before any network call.
SummarySession summarize(VspClient& vsp, std::string_view video_id, const PreferenceProfile& profile,
                         const ThumbnailClassifier& classifier, const SummarizeConfig& config = {});

// Writes track.json, edl.json, trace.json and session.json into `dir`.
void write_session(const SummarySession& session, const std::filesystem::path& dir);

}  // namespace evs

#endif  // EVS_EDGE_CLIENT_H_
