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

#ifndef EVS_HIERARCHICAL_ANALYZER_H_
#define EVS_HIERARCHICAL_ANALYZER_H_

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evs/tam_classifier.h"
#include "evs/thumbnail_container.h"
#include "json.hpp"

namespace evs {

// Categories the viewer cares about, each weighted in (0, 1].
struct PreferenceProfile {
  std::map<std::string, double> categories;
  double threshold = 0.5;

  // Throws ConfigError on an empty set, weights outside (0,1] or a
  // threshold outside (0,1).
  void validate() const;

  // {"categories": {name: weight}, "threshold": t}
  static PreferenceProfile from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Profile resolved against a label table: (label index, weight) pairs.
class ResolvedProfile {
 public:
  // Throws ModelError if a category is not in `labels`.
  ResolvedProfile(const PreferenceProfile& profile, const std::vector<std::string>& labels);

  double threshold() const { return threshold_; }
  const std::vector<std::pair<std::size_t, double>>& terms() const { return terms_; }
  std::size_t label_count() const { return label_count_; }

 private:
  std::vector<std::pair<std::size_t, double>> terms_;
  double threshold_;
  std::size_t label_count_;
};

// max over preferred categories of weight * probability.
double score(std::span<const float> probs, const ResolvedProfile& profile);
double score(std::span<const float> probs, const std::vector<std::string>& labels,
             const PreferenceProfile& profile);

// Anything that maps a container thumbnail to a probability vector.
class ThumbnailClassifier {
 public:
  virtual ~ThumbnailClassifier() = default;
  virtual const std::vector<std::string>& labels() const = 0;
  // Must be safe to call concurrently.
  virtual std::vector<float> classify(const ThumbnailContainer& container, std::size_t index) const = 0;
};

class ModelClassifier : public ThumbnailClassifier {
 public:
  explicit ModelClassifier(const ClassifierModel& model) : model_(model) {}
  const std::vector<std::string>& labels() const override { return model_.labels; }
  std::vector<float> classify(const ThumbnailContainer& container, std::size_t index) const override;

 private:
  const ClassifierModel& model_;
};

struct LevelRecord {
  int level = 0;
  std::size_t stride = 0;
  std::vector<std::size_t> indices;  // classified at this level, ascending
};

struct RelevanceTrack {
  std::string video_id;
  double threshold = 0.5;
  double duration = 0;
  double sample_interval = 1;
  std::vector<double> timestamps;  // one per thumbnail
  std::vector<double> scores;      // 0 where not visited
  std::vector<bool> visited;
  std::vector<LevelRecord> levels;

  std::size_t size() const { return scores.size(); }
  std::size_t classifications() const;
  bool relevant(std::size_t i) const { return visited[i] && scores[i] >= threshold; }

  // {video_id, threshold, scores:[{index, t, score}]} plus duration,
  // sample_interval, count and levels. Only visited thumbnails are listed.
  nlohmann::json to_json() const;
  static RelevanceTrack from_json(const nlohmann::json& j);
};

struct AnalyzeConfig {
  std::size_t initial_stride = 8;
  std::size_t min_stride = 1;
  int threads = 1;  // classification workers within a level
};

// Level 0 classifies every initial_stride-th thumbnail. Each later level
// halves the stride and classifies only the grid points within +/- the
// previous stride of an already relevant thumbnail.
RelevanceTrack analyze(const ThumbnailContainer& container, const ThumbnailClassifier& classifier,
                       const PreferenceProfile& profile, const AnalyzeConfig& config = {});

// Classifies every thumbnail.
RelevanceTrack exhaustive_scan(const ThumbnailContainer& container, const ThumbnailClassifier& classifier,
                               const PreferenceProfile& profile, int threads = 1);

// Upper bound on classifications for analyze():
// ceil(count/stride) + 2*stride per level-0 seed.
std::size_t work_bound(const RelevanceTrack& track, std::size_t initial_stride);

}  // namespace evs

#endif  // EVS_HIERARCHICAL_ANALYZER_H_
