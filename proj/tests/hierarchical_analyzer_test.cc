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

#include <atomic>
#include <random>

#include "analyzer_fixtures.h"
#include "evs/errors.h"
#include "evs/hierarchical_analyzer.h"

namespace evs {
namespace {

using testing::blank_container;
using testing::block_layout;
using testing::goal_profile;
using testing::PlantedClassifier;
using testing::relevant_set;

TEST(Score, SingleCategory) {
  const std::vector<std::string> labels = {"Soccer Shot", "Running"};
  const std::vector<float> probs = {0.9f, 0.1f};
  EXPECT_NEAR(score(probs, labels, {{{"Soccer Shot", 1.0}}, 0.5}), 0.9, 1e-6);
}

TEST(Score, WeightScales) {
  const std::vector<std::string> labels = {"a", "b"};
  const std::vector<float> probs = {0.8f, 0.2f};
  EXPECT_NEAR(score(probs, labels, {{{"a", 0.5}}, 0.5}), 0.4, 1e-6);
}

TEST(Score, MaxOverCategories) {
  const std::vector<std::string> labels = {"a", "b", "c"};
  const std::vector<float> probs = {0.3f, 0.7f, 0.0f};
  EXPECT_NEAR(score(probs, labels, {{{"a", 1.0}, {"b", 1.0}}, 0.5}), 0.7, 1e-6);
  // Brute force over weight pairs.
  for (double wa : {0.1, 0.5, 1.0}) {
    for (double wb : {0.1, 0.5, 1.0}) {
      const double expected = std::max(wa * probs[0], wb * probs[1]);
      EXPECT_NEAR(score(probs, labels, {{{"a", wa}, {"b", wb}}, 0.5}), expected, 1e-6);
    }
  }
}

TEST(Score, RejectsBadProfiles) {
  const std::vector<std::string> labels = {"a"};
  const std::vector<float> probs = {1.0f};
  EXPECT_THROW(score(probs, labels, {{}, 0.5}), ConfigError);
  EXPECT_THROW(score(probs, labels, {{{"a", 0.0}}, 0.5}), ConfigError);
  EXPECT_THROW(score(probs, labels, {{{"a", 1.0}}, 1.0}), ConfigError);
  EXPECT_THROW(score(probs, labels, {{{"z", 1.0}}, 0.5}), ModelError);
}

TEST(PreferenceProfile, JsonRoundTrip) {
  const auto p = PreferenceProfile::from_json(
      nlohmann::json::parse(R"({"categories": {"goal": 1.0, "crowd": 0.25}, "threshold": 0.6})"));
  EXPECT_EQ(p.categories.size(), 2u);
  EXPECT_DOUBLE_EQ(p.threshold, 0.6);
  const auto q = PreferenceProfile::from_json(p.to_json());
  EXPECT_EQ(q.categories, p.categories);
  EXPECT_THROW(PreferenceProfile::from_json(nlohmann::json::parse(R"({"categories": {}})")), ConfigError);
  EXPECT_THROW(PreferenceProfile::from_json(nlohmann::json::parse(R"({"categories": {"a": "x"}})")),
               ConfigError);
}

TEST(Analyze, RecoversPlantedBlock) {
  std::vector<bool> truth(16, false);
  for (int i = 5; i <= 8; ++i) truth[i] = true;
  const PlantedClassifier clf(truth);
  const auto c = blank_container(16);
  const RelevanceTrack t = analyze(c, clf, goal_profile(), {.initial_stride = 4});
  EXPECT_EQ(t.levels[0].indices, (std::vector<std::size_t>{0, 4, 8, 12}));
  EXPECT_TRUE(t.relevant(8));
  EXPECT_EQ(relevant_set(t), truth);
  for (std::size_t i = 1; i < t.levels.size(); ++i) EXPECT_EQ(t.levels[i].stride * 2, t.levels[i - 1].stride);
  EXPECT_EQ(clf.calls(), t.classifications());
}

TEST(Analyze, AllNegativeDoesNoRefinement) {
  for (std::size_t n : {16u, 17u, 601u}) {
    const PlantedClassifier clf(std::vector<bool>(n, false));
    const RelevanceTrack t = analyze(blank_container(n), clf, goal_profile(), {.initial_stride = 8});
    EXPECT_EQ(clf.calls(), (n + 7) / 8);
    EXPECT_EQ(t.levels.size(), 1u);
  }
}

TEST(Analyze, StrideOneEqualsExhaustive) {
  std::mt19937_64 rng(2);
  std::vector<bool> truth(50);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = rng() % 3 == 0;
  const PlantedClassifier clf(truth);
  const auto c = blank_container(truth.size());
  const RelevanceTrack a = analyze(c, clf, goal_profile(), {.initial_stride = 1});
  const RelevanceTrack b = exhaustive_scan(c, clf, goal_profile());
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.visited, b.visited);
  EXPECT_EQ(b.classifications(), c.size());
}

TEST(Analyze, BlockCompletenessSoundnessAndWorkBound) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> log_stride(0, 4);
  std::uniform_int_distribution<std::size_t> count(16, 400);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t stride = std::size_t{1} << log_stride(rng);
    const std::size_t n = std::max(count(rng), stride);
    const auto truth = block_layout(n, stride, rng);
    const PlantedClassifier clf(truth);
    const auto c = blank_container(n);
    const RelevanceTrack a = analyze(c, clf, goal_profile(), {.initial_stride = stride});
    const RelevanceTrack e = exhaustive_scan(c, clf, goal_profile());
    ASSERT_EQ(relevant_set(a), relevant_set(e)) << "trial " << trial << " stride " << stride;
    ASSERT_LE(a.classifications(), work_bound(a, stride)) << "trial " << trial;
  }
}

TEST(Analyze, NeverInventsPositivesOnArbitraryLayouts) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<bool> truth(200);
    for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = rng() % 5 == 0;
    const PlantedClassifier clf(truth);
    const RelevanceTrack a = analyze(blank_container(200), clf, goal_profile(), {.initial_stride = 8});
    for (std::size_t i = 0; i < 200; ++i) {
      if (a.relevant(i)) ASSERT_TRUE(truth[i]);
    }
    ASSERT_LE(a.classifications(), work_bound(a, 8));
  }
}

TEST(Analyze, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 rng(8);
  const auto truth = block_layout(300, 8, rng);
  const PlantedClassifier clf(truth);
  const auto c = blank_container(300);
  const RelevanceTrack one = analyze(c, clf, goal_profile(), {.initial_stride = 8, .threads = 1});
  const RelevanceTrack four = analyze(c, clf, goal_profile(), {.initial_stride = 8, .threads = 4});
  EXPECT_EQ(one.scores, four.scores);
  EXPECT_EQ(one.visited, four.visited);
  EXPECT_EQ(one.to_json(), four.to_json());
}

TEST(Analyze, ConfigAndModelErrors) {
  const PlantedClassifier clf(std::vector<bool>(16, false));
  const auto c = blank_container(16);
  EXPECT_THROW(analyze(c, clf, goal_profile(), {.initial_stride = 3}), ConfigError);
  EXPECT_THROW(analyze(c, clf, goal_profile(), {.initial_stride = 32}), ConfigError);
  EXPECT_THROW(analyze(c, clf, {{{"dunk", 1.0}}, 0.5}), ModelError);
  EXPECT_THROW(analyze(c, clf, {{}, 0.5}), ConfigError);
}

TEST(RelevanceTrack, JsonRoundTrip) {
  std::vector<bool> truth(40, false);
  for (int i = 10; i < 22; ++i) truth[i] = true;
  const PlantedClassifier clf(truth);
  const RelevanceTrack t = analyze(blank_container(40), clf, goal_profile(), {.initial_stride = 8});
  const nlohmann::json j = t.to_json();
  EXPECT_EQ(j["scores"].size(), t.classifications());
  const RelevanceTrack back = RelevanceTrack::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.scores, t.scores);
  EXPECT_EQ(back.visited, t.visited);
  EXPECT_EQ(back.timestamps, t.timestamps);
  EXPECT_EQ(back.to_json(), j);
}

TEST(ModelClassifier, MatchesDirectClassify) {
  ModelConfig cfg;
  cfg.labels = {"goal", "crowd"};
  cfg.backbone_channels = {2, 2, 2};
  cfg.head_widths = {4};
  const ClassifierModel model = make_model(cfg);
  ThumbnailContainer c;
  c.header.video_id = "v";
  c.header.duration = 1;
  c.header.count = 1;
  std::vector<std::uint8_t> px(160 * 90 * 3);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<std::uint8_t>(i * 7);
  c.entries.push_back({0.0, px});
  const ModelClassifier clf(model);
  EXPECT_EQ(clf.classify(c, 0), classify(thumbnail_to_tensor(px, 160, 90), model));
}

}  // namespace
}  // namespace evs
