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

#ifndef EVS_SYNTHETIC_DATASET_H_
#define EVS_SYNTHETIC_DATASET_H_

#include <cstdint>
#include <string>
#include <vector>

#include "evs/tam_classifier.h"

namespace evs {

inline const std::vector<std::string> kPitchLabels = {"pitch", "other"};

struct PitchDatasetOptions {
  int per_class = 24;
  std::uint64_t seed = 11;
  int source_width = 320;   // rendered size before the box downscale
  int source_height = 180;
  double max_time = 600;    // frame times are drawn from [0, max_time)
};

// Thumbnails rendered and downscaled the same way containers are built,
// labelled 0 = pitch scene, 1 = other scene, interleaved by class.
std::vector<LabeledImage> pitch_dataset(const PitchDatasetOptions& options = {});

// Two-class model trained on pitch_dataset(); the reference model for
// synthetic videos.
struct PitchModelOptions {
  PitchDatasetOptions data;
  ModelConfig model{.labels = kPitchLabels, .backbone_channels = {4, 8, 8}, .head_widths = {64, 64}};
  TrainConfig train{.learning_rate = 0.02f, .epochs = 20, .batch_size = 8, .seed = 1, .keep_prob = 0.8f};
};

TrainResult train_pitch_model(const PitchModelOptions& options = {});

}  // namespace evs

#endif  // EVS_SYNTHETIC_DATASET_H_
