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

#include "evs/playback.h"

#include <algorithm>
#include <cmath>

#include "evs/errors.h"

namespace evs {
namespace {

// Walks entries forward as wall time advances.
struct Cursor {
  std::size_t index = 0;
  double wall_start = 0;  // wall time at which entries[index] begins

  TraceSample at(const PlaybackSchedule& s, double w) {
    while (index + 1 < s.entries.size()) {
      const auto& e = s.entries[index];
      const double span = e.interval.length() / e.speed;
      if (w < wall_start + span) break;
      wall_start += span;
      ++index;
    }
    const auto& e = s.entries[index];
    const double media = std::min(e.interval.start + (w - wall_start) * e.speed, e.interval.end);
    return {w, media, e.speed};
  }
};

}  // namespace

std::vector<TraceSample> play_simulation(const PlaybackSchedule& schedule, double sample_period) {
  schedule.validate();
  if (!(sample_period > 0)) throw ConfigError("sample period must be positive");
  std::vector<TraceSample> out;
  Cursor cursor;
  const double end = schedule.summary_duration;
  for (std::size_t k = 0;; ++k) {
    const double w = static_cast<double>(k) * sample_period;
    if (w >= end) break;
    out.push_back(cursor.at(schedule, w));
  }
  out.push_back({end, schedule.duration(), schedule.entries.back().speed});
  return out;
}

double media_time_at(const PlaybackSchedule& schedule, double wall) {
  schedule.validate();
  if (wall <= 0) return 0;
  if (wall >= schedule.summary_duration) return schedule.duration();
  Cursor cursor;
  return cursor.at(schedule, wall).media;
}

nlohmann::json trace_to_json(const std::vector<TraceSample>& trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : trace) out.push_back({{"wall", s.wall}, {"media", s.media}, {"speed", s.speed}});
  return out;
}

}  // namespace evs
