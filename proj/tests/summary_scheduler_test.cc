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

#include <gtest/gtest.h>

#include <random>

#include "evs/errors.h"
#include "evs/summary_scheduler.h"

namespace evs {
namespace {

using K = SegmentKind;

RelevanceTrack track_from_scores(const std::vector<double>& scores, double interval = 1.0) {
  RelevanceTrack t;
  t.video_id = "v";
  t.sample_interval = interval;
  t.duration = static_cast<double>(scores.size()) * interval;
  for (std::size_t i = 0; i < scores.size(); ++i) t.timestamps.push_back(static_cast<double>(i) * interval);
  t.scores = scores;
  t.visited.assign(scores.size(), true);
  return t;
}

// Independent brute force: mark each thumbnail, merge and filter on a
// per-thumbnail grid, then read intervals back off the marks.
std::vector<SegmentInterval> oracle_segments(const std::vector<double>& scores, double threshold,
                                             double merge_gap, double min_duration) {
  const std::size_t n = scores.size();
  std::vector<bool> mark(n);
  for (std::size_t i = 0; i < n; ++i) mark[i] = scores[i] >= threshold;
  // Close gaps shorter than merge_gap that sit between two marked runs.
  for (std::size_t i = 0; i < n; ++i) {
    if (mark[i]) continue;
    std::size_t j = i;
    while (j < n && !mark[j]) ++j;
    if (i > 0 && j < n && static_cast<double>(j - i) < merge_gap) {
      for (std::size_t k = i; k < j; ++k) mark[k] = true;
    }
    i = j;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!mark[i]) continue;
    std::size_t j = i;
    while (j < n && mark[j]) ++j;
    if (static_cast<double>(j - i) < min_duration) {
      for (std::size_t k = i; k < j; ++k) mark[k] = false;
    }
    i = j;
  }
  std::vector<SegmentInterval> out;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && mark[j] == mark[i]) ++j;
    out.push_back({static_cast<double>(i), static_cast<double>(j), mark[i] ? K::kPreferred : K::kBackground});
    i = j;
  }
  return out;
}

TEST(Segments, MergesCloseRuns) {
  const auto segs = segments_from_track(track_from_scores({0, 1, 1, 0, 1, 0}), 0.5, {.merge_gap = 1.5});
  const std::vector<SegmentInterval> want = {{0, 1, K::kBackground}, {1, 5, K::kPreferred}, {5, 6, K::kBackground}};
  EXPECT_EQ(segs, want);
}

TEST(Segments, AllZeroAndAllOne) {
  EXPECT_EQ(segments_from_track(track_from_scores({0, 0, 0}), 0.5),
            (std::vector<SegmentInterval>{{0, 3, K::kBackground}}));
  EXPECT_EQ(segments_from_track(track_from_scores({1, 1, 1}), 0.5),
            (std::vector<SegmentInterval>{{0, 3, K::kPreferred}}));
}

TEST(Segments, ShortRunsDemote) {
  const auto segs = segments_from_track(track_from_scores({1, 0, 0, 1, 1, 1, 0}), 0.5, {.min_duration = 2});
  const std::vector<SegmentInterval> want = {{0, 3, K::kBackground}, {3, 6, K::kPreferred}, {6, 7, K::kBackground}};
  EXPECT_EQ(segs, want);
}

TEST(Segments, UnvisitedCountsAsZero) {
  RelevanceTrack t = track_from_scores({1, 1, 1, 1});
  t.visited[2] = false;
  EXPECT_EQ(segments_from_track(t, 0.5).size(), 3u);
}

TEST(Segments, MatchesBruteForceOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> len(1, 60);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> scores(static_cast<std::size_t>(len(rng)));
    for (double& s : scores) s = std::round(u(rng) * 4) / 4;
    const double thr = 0.25 + 0.25 * static_cast<int>(u(rng) * 3);
    // Whole-second knobs keep the grid oracle exact.
    const double gap = static_cast<int>(u(rng) * 4), min_d = static_cast<int>(u(rng) * 4);
    ASSERT_EQ(segments_from_track(track_from_scores(scores), thr, {.min_duration = min_d, .merge_gap = gap + 0.5}),
              oracle_segments(scores, thr, gap + 0.5, min_d))
        << "trial " << trial;
  }
}

TEST(Segments, RaisingThresholdNeverAddsPreferredTime) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores(80);
    for (double& s : scores) s = u(rng);
    const SegmentOptions opt{.min_duration = std::floor(u(rng) * 5), .merge_gap = u(rng) * 5};
    const auto t = track_from_scores(scores, 0.5);
    double prev = 1e18;
    for (double thr = 0.05; thr <= 1.0; thr += 0.05) {
      const auto s = build_schedule("v", segments_from_track(t, thr, opt), 8, t.duration);
      ASSERT_LE(s.preferred_time(), prev + 1e-9) << "trial " << trial << " thr " << thr;
      prev = s.preferred_time();
    }
  }
}

TEST(Schedule, TwentyEightSeconds) {
  const auto s = build_schedule(
      "v", {{0, 20, K::kBackground}, {20, 40, K::kPreferred}, {40, 100, K::kBackground}}, 10, 100);
  EXPECT_EQ(s.summary_duration, 28.0);
  EXPECT_EQ(s.entries[1].speed, 1.0);
  EXPECT_EQ(s.entries[0].speed, 10.0);
}

TEST(Schedule, UniformAndIdentity) {
  EXPECT_DOUBLE_EQ(build_schedule("v", {{0, 90, K::kBackground}}, 6, 90).summary_duration, 15.0);
  EXPECT_DOUBLE_EQ(build_schedule("v", {{0, 90, K::kPreferred}}, 6, 90).summary_duration, 90.0);
}

TEST(Schedule, GapAndOverlapAreNamed) {
  try {
    build_schedule("v", {{0, 10, K::kBackground}, {12, 20, K::kPreferred}}, 8, 20);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("[10.000000, 12.000000)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(build_schedule("v", {{0, 10, K::kBackground}, {9, 20, K::kPreferred}}, 8, 20), ContractError);
  EXPECT_THROW(build_schedule("v", {{0, 10, K::kBackground}}, 8, 20), ContractError);
  EXPECT_THROW(build_schedule("v", {}, 8, 20), ContractError);
  EXPECT_THROW(build_schedule("v", {{0, 20, K::kBackground}}, 1.0, 20), ConfigError);
}

TEST(Schedule, RandomSegmentationsKeepInvariants) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<int> cuts(0, 30);
  for (int trial = 0; trial < 10000; ++trial) {
    const double duration = 1 + u(rng) * 7200;
    std::vector<double> points = {0, duration};
    for (int c = cuts(rng); c > 0; --c) points.push_back(quantize(u(rng) * duration));
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());
    std::vector<SegmentInterval> segs;
    double expected = 0;
    const double fast = 1.5 + u(rng) * 20;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
      const K kind = u(rng) < 0.3 ? K::kPreferred : K::kBackground;
      segs.push_back({points[i], points[i + 1], kind});
    }
    const auto s = build_schedule("v", segs, fast, duration);
    for (const auto& e : s.entries) expected += e.interval.length() / e.speed;
    ASSERT_NEAR(s.summary_duration, expected, 1e-6);
    ASSERT_LE(s.summary_duration, s.duration() + 1e-9);
    ASSERT_EQ(s.entries.front().interval.start, 0.0);
    for (std::size_t i = 1; i < s.entries.size(); ++i) {
      ASSERT_EQ(s.entries[i].interval.start, s.entries[i - 1].interval.end);
    }
    ASSERT_NO_THROW(s.validate());
  }
}

TEST(Edl, CanonicalRoundTrip) {
  const auto s = build_schedule(
      "match \"7\"", {{0, 20.1234567, K::kBackground}, {20.1234567, 40, K::kPreferred}, {40, 100, K::kBackground}},
      3, 100);
  const std::string a = emit_edl(s);
  EXPECT_EQ(parse_edl(a), s);
  EXPECT_EQ(emit_edl(parse_edl(a)), a);
  EXPECT_EQ(emit_edl(s), a);
  EXPECT_EQ(a.find(' '), a.find("match") + 5);  // only the space inside the id
  EXPECT_NE(a.find("\"summary_duration\":46.584362"), std::string::npos) << a;
  EXPECT_LT(a.find("\"entries\""), a.find("\"fast_speed\""));
}

TEST(Edl, EmptyScheduleRejected) {
  PlaybackSchedule s;
  s.video_id = "v";
  EXPECT_THROW(emit_edl(s), ContractError);
  EXPECT_THROW(parse_edl(R"({"entries":[],"fast_speed":8,"summary_duration":0,"video_id":"v"})"), ContractError);
  EXPECT_THROW(parse_edl("not json"), DataError);
}

}  // namespace
}  // namespace evs
