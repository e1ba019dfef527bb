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

#ifndef EVS_FRAME_SOURCE_H_
#define EVS_FRAME_SOURCE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evs/image.h"

namespace evs {

// A temporally ordered sequence of frames. Frames are produced on demand so
// long videos never need to be resident.
class FrameSource {
 public:
  virtual ~FrameSource() = default;

  virtual std::string video_id() const = 0;
  virtual double fps() const = 0;
  virtual std::size_t frame_count() const = 0;
  virtual double timestamp(std::size_t i) const = 0;
  virtual Image frame(std::size_t i) const = 0;

  // Time of the last frame plus one frame period.
  double duration() const;
};

class VectorFrameSource : public FrameSource {
 public:
  VectorFrameSource(std::string video_id, double fps,
                    std::vector<std::pair<double, Image>> frames);

  std::string video_id() const override { return id_; }
  double fps() const override { return fps_; }
  std::size_t frame_count() const override { return frames_.size(); }
  double timestamp(std::size_t i) const override { return frames_.at(i).first; }
  Image frame(std::size_t i) const override { return frames_.at(i).second; }

 private:
  std::string id_;
  double fps_;
  std::vector<std::pair<double, Image>> frames_;
};

// Half-open time range [start, end) in seconds.
struct TimeRange {
  double start = 0;
  double end = 0;

  bool contains(double t) const { return t >= start && t < end; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct SyntheticVideoSpec {
  std::string id = "synthetic";
  double duration = 60;
  double fps = 30;
  int width = 320;
  int height = 180;
  std::uint64_t seed = 7;
  std::vector<TimeRange> positive;  // spans rendered as pitch scenes

  // Parses "synthetic:id=a,duration=600,fps=30,width=320,height=180,
  // seed=7,positive=200-260+400-420". Every key is optional.
  static SyntheticVideoSpec parse(std::string_view text);
  std::string to_string() const;
};

// Deterministic moving-shape renderer with no noise. Frames inside a
// positive span show a striped green pitch with a moving ball; all other
// frames show a non-green palette scene with a moving rectangle. The palette
// changes every few seconds.
class SyntheticVideo : public FrameSource {
 public:
  explicit SyntheticVideo(SyntheticVideoSpec spec);

  std::string video_id() const override { return spec_.id; }
  double fps() const override { return spec_.fps; }
  std::size_t frame_count() const override { return count_; }
  double timestamp(std::size_t i) const override { return static_cast<double>(i) / spec_.fps; }
  Image frame(std::size_t i) const override;

  bool is_positive(double t) const;
  const SyntheticVideoSpec& spec() const { return spec_; }

 private:
  SyntheticVideoSpec spec_;
  std::size_t count_;
};

// Renders one pitch or palette scene at time t. Exposed for building
// classifier training sets that look like the synthetic videos.
Image render_synthetic_frame(int width, int height, double t, bool positive, std::uint64_t seed);

// PNG files in a directory, sorted by file name, spaced 1/fps apart.
class ImageDirectorySource : public FrameSource {
 public:
  ImageDirectorySource(const std::filesystem::path& dir, double fps = 30, std::string video_id = "");

  std::string video_id() const override { return id_; }
  double fps() const override { return fps_; }
  std::size_t frame_count() const override { return files_.size(); }
  double timestamp(std::size_t i) const override { return static_cast<double>(i) / fps_; }
  Image frame(std::size_t i) const override;

 private:
  std::string id_;
  double fps_;
  std::vector<std::filesystem::path> files_;
};

// "synthetic:..." or a directory path.
std::unique_ptr<FrameSource> open_frame_source(std::string_view spec, double fps = 30);

}  // namespace evs

#endif  // EVS_FRAME_SOURCE_H_
