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

#include "evs/summary_scheduler.h"

#include <cmath>
#include <cstdio>

#include "evs/errors.h"

namespace evs {
namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string interval_text(double a, double b) { return "[" + fixed6(a) + ", " + fixed6(b) + ")"; }

}  // namespace

std::string_view kind_name(SegmentKind kind) {
  return kind == SegmentKind::kPreferred ? "preferred" : "background";
}

double quantize(double seconds) { return std::round(seconds * 1e6) / 1e6; }

double PlaybackSchedule::preferred_time() const {
  double total = 0;
  for (const auto& e : entries) {
    if (e.interval.kind == SegmentKind::kPreferred) total += e.interval.length();
  }
  return total;
}

void PlaybackSchedule::validate() const {
  if (entries.empty()) throw ContractError("schedule has no entries");
  if (!(fast_speed > 1)) throw ContractError("fast speed must exceed 1");
  double expected_start = 0;
  double total = 0;
  for (const auto& e : entries) {
    const auto& iv = e.interval;
    if (iv.start < expected_start) throw ContractError("overlap before " + interval_text(iv.start, iv.end));
    if (iv.start > expected_start) throw ContractError("coverage gap " + interval_text(expected_start, iv.start));
    if (!(iv.end > iv.start)) throw ContractError("empty interval at " + fixed6(iv.start));
    const double want = iv.kind == SegmentKind::kPreferred ? 1.0 : fast_speed;
    if (e.speed != want) throw ContractError("wrong speed for " + interval_text(iv.start, iv.end));
    total += iv.length() / e.speed;
    expected_start = iv.end;
  }
  if (std::fabs(total - summary_duration) > 1e-6) throw ContractError("summary duration disagrees with entries");
}

std::vector<SegmentInterval> segments_from_track(const RelevanceTrack& track, double threshold,
                                                 const SegmentOptions& options) {
  if (!(threshold > 0 && threshold <= 1)) throw ConfigError("threshold must be in (0, 1]");
  if (options.min_duration < 0 || options.merge_gap < 0) throw ConfigError("min duration and merge gap must be >= 0");
  const std::size_t n = track.size();
  if (n == 0 || !(track.duration > 0)) throw DataError("track is empty");

  auto boundary = [&](std::size_t i) {
    if (i == 0) return 0.0;
    if (i >= n) return quantize(track.duration);
    return quantize(track.timestamps[i]);
  };

  // Maximal runs of relevant thumbnails as [start, end) times.
  std::vector<SegmentInterval> runs;
  for (std::size_t i = 0; i < n;) {
    if (!(track.visited[i] && track.scores[i] >= threshold)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && track.visited[j] && track.scores[j] >= threshold) ++j;
    runs.push_back({boundary(i), boundary(j), SegmentKind::kPreferred});
    i = j;
  }

  std::vector<SegmentInterval> merged;
  for (const auto& r : runs) {
    if (!merged.empty() && r.start - merged.back().end < options.merge_gap) {
      merged.back().end = r.end;
    } else {
      merged.push_back(r);
    }
  }
  std::erase_if(merged, [&](const SegmentInterval& s) { return s.length() < options.min_duration; });

  // Fill the complement with background.
  std::vector<SegmentInterval> out;
  double cursor = 0;
  const double end = boundary(n);
  for (const auto& p : merged) {
    if (p.start > cursor) out.push_back({cursor, p.start, SegmentKind::kBackground});
    if (p.end > p.start) out.push_back(p);
    cursor = p.end;
  }
  if (cursor < end) out.push_back({cursor, end, SegmentKind::kBackground});
  return out;
}

PlaybackSchedule build_schedule(std::string video_id, const std::vector<SegmentInterval>& segments,
                                double fast_speed, double duration) {
  if (!(fast_speed > 1) || !std::isfinite(fast_speed)) throw ConfigError("fast speed must be a finite value > 1");
  if (!(duration > 0)) throw ConfigError("duration must be positive");
  if (segments.empty()) throw ContractError("no segments: coverage gap " + interval_text(0, duration));
  PlaybackSchedule s;
  s.video_id = std::move(video_id);
  s.fast_speed = quantize(fast_speed);
  double cursor = 0;
  double total = 0;
  const double end = quantize(duration);
  for (const auto& seg : segments) {
    const double a = quantize(seg.start), b = quantize(seg.end);
    if (a > cursor) throw ContractError("coverage gap " + interval_text(cursor, a));
    if (a < cursor) throw ContractError("overlap " + interval_text(a, cursor));
    if (!(b > a)) throw ContractError("empty segment at " + fixed6(a));
    const double speed = seg.kind == SegmentKind::kPreferred ? 1.0 : s.fast_speed;
    s.entries.push_back({{a, b, seg.kind}, speed});
    total += (b - a) / speed;
    cursor = b;
  }
  if (cursor < end) throw ContractError("coverage gap " + interval_text(cursor, end));
  if (cursor > end) throw ContractError("segments run past duration: " + interval_text(end, cursor));
  s.summary_duration = quantize(total);
  s.validate();
  return s;
}

std::string emit_edl(const PlaybackSchedule& schedule) {
  schedule.validate();
  std::string out = "{\"entries\":[";
  for (std::size_t i = 0; i < schedule.entries.size(); ++i) {
    const auto& e = schedule.entries[i];
    if (i) out += ',';
    out += "{\"end\":" + fixed6(e.interval.end) + ",\"kind\":\"" + std::string(kind_name(e.interval.kind)) +
           "\",\"speed\":" + fixed6(e.speed) + ",\"start\":" + fixed6(e.interval.start) + "}";
  }
  out += "],\"fast_speed\":" + fixed6(schedule.fast_speed);
  out += ",\"summary_duration\":" + fixed6(schedule.summary_duration);
  out += ",\"video_id\":" + nlohmann::json(schedule.video_id).dump() + "}";
  return out;
}

PlaybackSchedule parse_edl(std::string_view text) {
  PlaybackSchedule s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.video_id = j.at("video_id").get<std::string>();
    s.fast_speed = j.at("fast_speed").get<double>();
    s.summary_duration = j.at("summary_duration").get<double>();
    for (const auto& e : j.at("entries")) {
      const auto kind = e.at("kind").get<std::string>();
      if (kind != "preferred" && kind != "background") throw DataError("unknown entry kind '" + kind + "'");
      s.entries.push_back({{e.at("start").get<double>(), e.at("end").get<double>(),
                            kind == "preferred" ? SegmentKind::kPreferred : SegmentKind::kBackground},
                           e.at("speed").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed EDL: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace evs
