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

#include "evs/synthetic_dataset.h"

#include <random>

#include "evs/frame_source.h"
#include "evs/image.h"

namespace evs {

std::vector<LabeledImage> pitch_dataset(const PitchDatasetOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> when(0, options.max_time);
  std::uniform_int_distribution<std::uint64_t> video_seed(0, 1u << 20);
  std::vector<LabeledImage> out;
  out.reserve(static_cast<std::size_t>(options.per_class) * 2);
  for (int i = 0; i < options.per_class; ++i) {
    for (int label : {0, 1}) {
      const Image frame = render_synthetic_frame(options.source_width, options.source_height, when(rng),
                                                 label == 0, video_seed(rng));
      const Image thumb = box_downscale(frame, kThumbnailWidth, kThumbnailHeight);
      out.push_back({thumbnail_to_tensor(thumb.rgb, thumb.width, thumb.height), label});
    }
  }
  return out;
}

TrainResult train_pitch_model(const PitchModelOptions& options) {
  const auto data = pitch_dataset(options.data);
  return train(data, options.model, options.train);
}

}  // namespace evs
