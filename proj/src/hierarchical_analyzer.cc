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

#include "evs/hierarchical_analyzer.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <future>

#include "evs/errors.h"

namespace evs {
namespace {

// Classifies `indices` and stores their relevance in the track. Work is
// split into contiguous chunks; results land by index so the outcome does
// not depend on the thread count.
void classify_level(const ThumbnailContainer& container, const ThumbnailClassifier& classifier,
                    const ResolvedProfile& profile, std::span<const std::size_t> indices, int threads,
                    RelevanceTrack& track) {
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = indices[k];
      const std::vector<float> probs = classifier.classify(container, i);
      track.scores[i] = score(probs, profile);
    }
  };
  const std::size_t n = indices.size();
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, n);
  if (workers <= 1) {
    work(0, n);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, work, n * w / workers, n * (w + 1) / workers));
    }
    for (auto& j : jobs) j.get();  // rethrows the first failure
  }
  for (std::size_t i : indices) track.visited[i] = true;
}

RelevanceTrack empty_track(const ThumbnailContainer& container, const PreferenceProfile& profile) {
  if (container.size() == 0) throw DataError("container has no thumbnails");
  RelevanceTrack t;
  t.video_id = container.header.video_id;
  t.threshold = profile.threshold;
  t.duration = container.header.duration;
  t.sample_interval = container.header.sample_interval;
  t.timestamps.reserve(container.size());
  for (const auto& e : container.entries) t.timestamps.push_back(e.timestamp);
  t.scores.assign(container.size(), 0.0);
  t.visited.assign(container.size(), false);
  return t;
}

bool is_pow2(std::size_t v) { return v != 0 && std::has_single_bit(v); }

}  // namespace

void PreferenceProfile::validate() const {
  if (categories.empty()) throw ConfigError("preference profile has no categories");
  for (const auto& [name, w] : categories) {
    if (!(w > 0 && w <= 1)) throw ConfigError("weight for '" + name + "' must be in (0, 1]");
  }
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("relevance threshold must be in (0, 1)");
}

PreferenceProfile PreferenceProfile::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("preferences must be a JSON object");
  PreferenceProfile p;
  try {
    if (j.contains("categories")) {
      for (const auto& [name, w] : j.at("categories").items()) p.categories[name] = w.get<double>();
    }
    if (j.contains("threshold")) p.threshold = j.at("threshold").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed preferences: ") + e.what());
  }
  p.validate();
  return p;
}

nlohmann::json PreferenceProfile::to_json() const {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [name, w] : categories) cats[name] = w;
  return {{"categories", cats}, {"threshold", threshold}};
}

ResolvedProfile::ResolvedProfile(const PreferenceProfile& profile, const std::vector<std::string>& labels)
    : threshold_(profile.threshold), label_count_(labels.size()) {
  profile.validate();
  for (const auto& [name, w] : profile.categories) {
    const auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw ModelError("category '" + name + "' is not a model label");
    terms_.emplace_back(static_cast<std::size_t>(it - labels.begin()), w);
  }
}

double score(std::span<const float> probs, const ResolvedProfile& profile) {
  if (probs.size() != profile.label_count()) {
    throw ModelError("classifier returned " + std::to_string(probs.size()) + " probabilities for " +
                     std::to_string(profile.label_count()) + " labels");
  }
  double best = 0;
  for (const auto& [index, weight] : profile.terms()) best = std::max(best, weight * probs[index]);
  return std::clamp(best, 0.0, 1.0);
}

double score(std::span<const float> probs, const std::vector<std::string>& labels,
             const PreferenceProfile& profile) {
  return score(probs, ResolvedProfile(profile, labels));
}

std::vector<float> ModelClassifier::classify(const ThumbnailContainer& container, std::size_t index) const {
  const ThumbnailEntry& e = container.entries.at(index);
  return evs::classify(thumbnail_to_tensor(e.payload, container.header.width, container.header.height), model_);
}

std::size_t RelevanceTrack::classifications() const {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.indices.size();
  return n;
}

nlohmann::json RelevanceTrack::to_json() const {
  nlohmann::json list = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    if (visited[i]) list.push_back({{"index", i}, {"t", timestamps[i]}, {"score", scores[i]}});
  }
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& l : levels) lv.push_back({{"level", l.level}, {"stride", l.stride}, {"indices", l.indices}});
  return {{"video_id", video_id}, {"threshold", threshold}, {"duration", duration},
          {"sample_interval", sample_interval}, {"count", size()}, {"scores", list}, {"levels", lv}};
}

RelevanceTrack RelevanceTrack::from_json(const nlohmann::json& j) {
  RelevanceTrack t;
  try {
    t.video_id = j.at("video_id").get<std::string>();
    t.threshold = j.at("threshold").get<double>();
    t.duration = j.at("duration").get<double>();
    t.sample_interval = j.at("sample_interval").get<double>();
    const auto count = j.at("count").get<std::size_t>();
    const auto& list = j.at("scores");
    if (count == 0 || list.empty()) throw DataError("track has no scores");
    if (!(t.sample_interval > 0)) throw DataError("track sample interval must be positive");
    const auto first_index = list.front().at("index").get<std::size_t>();
    const double t0 = list.front().at("t").get<double>() - static_cast<double>(first_index) * t.sample_interval;
    t.timestamps.resize(count);
    for (std::size_t i = 0; i < count; ++i) t.timestamps[i] = t0 + static_cast<double>(i) * t.sample_interval;
    t.scores.assign(count, 0.0);
    t.visited.assign(count, false);
    for (const auto& s : list) {
      const auto i = s.at("index").get<std::size_t>();
      if (i >= count) throw DataError("track index out of range");
      const double v = s.at("score").get<double>();
      if (!(v >= 0 && v <= 1)) throw DataError("track score outside [0, 1]");
      t.timestamps[i] = s.at("t").get<double>();
      t.scores[i] = v;
      t.visited[i] = true;
    }
    if (j.contains("levels")) {
      for (const auto& l : j.at("levels")) {
        t.levels.push_back({l.at("level").get<int>(), l.at("stride").get<std::size_t>(),
                            l.at("indices").get<std::vector<std::size_t>>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed track: ") + e.what());
  }
  return t;
}

RelevanceTrack analyze(const ThumbnailContainer& container, const ThumbnailClassifier& classifier,
                       const PreferenceProfile& profile, const AnalyzeConfig& config) {
  const ResolvedProfile resolved(profile, classifier.labels());
  RelevanceTrack track = empty_track(container, profile);
  const std::size_t n = track.size();
  const std::size_t s0 = config.initial_stride;
  if (!is_pow2(s0) || s0 > n) {
    throw ConfigError("initial stride must be a power of two no larger than the thumbnail count (" +
                      std::to_string(n) + ")");
  }
  if (!is_pow2(config.min_stride) || config.min_stride > s0) {
    throw ConfigError("min stride must be a power of two no larger than the initial stride");
  }

  LevelRecord level0{0, s0, {}};
  for (std::size_t i = 0; i < n; i += s0) level0.indices.push_back(i);
  classify_level(container, classifier, resolved, level0.indices, config.threads, track);
  track.levels.push_back(std::move(level0));

  std::size_t stride = s0;
  for (int level = 1; stride > config.min_stride; ++level) {
    const std::size_t prev = stride;
    stride /= 2;
    // New-stride grid points within +/- prev of each relevant thumbnail.
    std::vector<std::size_t> next;
    for (std::size_t i = 0; i < n; ++i) {
      if (!track.relevant(i)) continue;
      for (std::size_t off = stride; off <= prev; off += stride) {
        if (i >= off && !track.visited[i - off]) next.push_back(i - off);
        if (i + off < n && !track.visited[i + off]) next.push_back(i + off);
      }
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    classify_level(container, classifier, resolved, next, config.threads, track);
    track.levels.push_back({level, stride, std::move(next)});
  }
  return track;
}

RelevanceTrack exhaustive_scan(const ThumbnailContainer& container, const ThumbnailClassifier& classifier,
                               const PreferenceProfile& profile, int threads) {
  const ResolvedProfile resolved(profile, classifier.labels());
  RelevanceTrack track = empty_track(container, profile);
  LevelRecord all{0, 1, {}};
  all.indices.resize(track.size());
  for (std::size_t i = 0; i < track.size(); ++i) all.indices[i] = i;
  classify_level(container, classifier, resolved, all.indices, threads, track);
  track.levels.push_back(std::move(all));
  return track;
}

std::size_t work_bound(const RelevanceTrack& track, std::size_t initial_stride) {
  if (initial_stride == 0) throw ConfigError("stride must be positive");
  std::size_t seeds = 0;
  if (!track.levels.empty()) {
    for (std::size_t i : track.levels.front().indices) seeds += track.relevant(i) ? 1 : 0;
  }
  return (track.size() + initial_stride - 1) / initial_stride + 2 * initial_stride * seeds;
}

}  // namespace evs
