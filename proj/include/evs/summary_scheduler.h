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

#ifndef EVS_SUMMARY_SCHEDULER_H_
#define EVS_SUMMARY_SCHEDULER_H_

#include <string>
#include <string_view>
#include <vector>

#include "evs/hierarchical_analyzer.h"

namespace evs {

inline constexpr double kDefaultFastSpeed = 8.0;

enum class SegmentKind { kPreferred, kBackground };

std::string_view kind_name(SegmentKind kind);

struct SegmentInterval {
  double start = 0;
  double end = 0;
  SegmentKind kind = SegmentKind::kBackground;

  double length() const { return end - start; }
  friend bool operator==(const SegmentInterval&, const SegmentInterval&) = default;
};

struct ScheduleEntry {
  SegmentInterval interval;
  double speed = 1;

  friend bool operator==(const ScheduleEntry&, const ScheduleEntry&) = default;
};

// Gap-free two-speed playback plan over [0, duration). All times and speeds
// are held at microsecond resolution so the EDL text round-trips exactly.
struct PlaybackSchedule {
  std::string video_id;
  double fast_speed = kDefaultFastSpeed;
  double summary_duration = 0;
  std::vector<ScheduleEntry> entries;

  double duration() const { return entries.empty() ? 0 : entries.back().interval.end; }
  double preferred_time() const;

  // Throws ContractError on any coverage, speed or duration violation.
  void validate() const;

  friend bool operator==(const PlaybackSchedule&, const PlaybackSchedule&) = default;
};

// Rounds to the 6-decimal grid used by the EDL.
double quantize(double seconds);

struct SegmentOptions {
  double min_duration = 0;  // shorter preferred runs become background
  double merge_gap = 0;     // preferred runs closer than this merge
};

// Thumbnail i stands for [t_i, t_{i+1}); the first starts at 0 and the last
// ends at the track duration. Runs with score >= threshold become preferred.
std::vector<SegmentInterval> segments_from_track(const RelevanceTrack& track, double threshold,
                                                 const SegmentOptions& options = {});

// Preferred at 1x, background at fast_speed. Throws ContractError naming
// the first gap or overlap if `segments` do not tile [0, duration).
PlaybackSchedule build_schedule(std::string video_id, const std::vector<SegmentInterval>& segments,
                                double fast_speed, double duration);

// Canonical JSON: sorted keys, fixed 6-decimal numbers, no whitespace.
std::string emit_edl(const PlaybackSchedule& schedule);
PlaybackSchedule parse_edl(std::string_view text);

}  // namespace evs

#endif  // EVS_SUMMARY_SCHEDULER_H_
