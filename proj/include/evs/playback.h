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

#ifndef EVS_PLAYBACK_H_
#define EVS_PLAYBACK_H_

#include <vector>

#include "evs/summary_scheduler.h"
#include "json.hpp"

namespace evs {

struct TraceSample {
  double wall = 0;   // seconds since playback start
  double media = 0;  // position in the original video
  double speed = 1;
};

// Samples every `sample_period` seconds of wall time, plus a final sample
// at summary_duration where media time reaches the video end.
std::vector<TraceSample> play_simulation(const PlaybackSchedule& schedule, double sample_period = 0.1);

// Media position after `wall` seconds of playback, clamped to the ends.
double media_time_at(const PlaybackSchedule& schedule, double wall);

nlohmann::json trace_to_json(const std::vector<TraceSample>& trace);

}  // namespace evs

#endif  // EVS_PLAYBACK_H_
