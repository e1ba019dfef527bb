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

#include "evs/frame_source.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

#include "evs/errors.h"

namespace evs {
namespace {

using Rgb = std::array<std::uint8_t, 3>;

// Deliberately free of green-dominant colors so the pitch is the only
// green content.
constexpr std::array<Rgb, 8> kPalette = {{
    {180, 60, 50},
    {60, 70, 160},
    {150, 150, 150},
    {200, 170, 90},
    {120, 60, 140},
    {90, 80, 70},
    {40, 40, 50},
    {210, 120, 40},
}};

constexpr double kSceneSeconds = 5.0;

void fill_rect(Image& img, int x0, int y0, int x1, int y1, Rgb c) {
  x0 = std::max(x0, 0), y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width), y1 = std::min(y1, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      std::uint8_t* p = img.pixel(x, y);
      p[0] = c[0], p[1] = c[1], p[2] = c[2];
    }
  }
}

void fill_disc(Image& img, double cx, double cy, double r, Rgb c) {
  const int y0 = static_cast<int>(std::floor(cy - r)), y1 = static_cast<int>(std::ceil(cy + r));
  const int x0 = static_cast<int>(std::floor(cx - r)), x1 = static_cast<int>(std::ceil(cx + r));
  for (int y = std::max(y0, 0); y < std::min(y1 + 1, img.height); ++y) {
    for (int x = std::max(x0, 0); x < std::min(x1 + 1, img.width); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > r * r) continue;
      std::uint8_t* p = img.pixel(x, y);
      p[0] = c[0], p[1] = c[1], p[2] = c[2];
    }
  }
}

double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("synthetic spec: bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

double FrameSource::duration() const {
  const std::size_t n = frame_count();
  if (n == 0) return 0;
  return timestamp(n - 1) + 1.0 / fps();
}

VectorFrameSource::VectorFrameSource(std::string video_id, double fps,
                                     std::vector<std::pair<double, Image>> frames)
    : id_(std::move(video_id)), fps_(fps), frames_(std::move(frames)) {
  if (!(fps_ > 0)) throw ConfigError("fps must be positive");
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (!(frames_[i].first > frames_[i - 1].first)) {
      throw DataError("frames must be in strictly increasing time order");
    }
  }
}

SyntheticVideoSpec SyntheticVideoSpec::parse(std::string_view text) {
  constexpr std::string_view kPrefix = "synthetic:";
  if (text.starts_with(kPrefix)) {
    text.remove_prefix(kPrefix.size());
  } else if (text == "synthetic") {
    text = {};
  }
  SyntheticVideoSpec spec;
  if (text.empty()) return spec;
  for (std::string_view item : split(text, ',')) {
    const std::size_t eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("synthetic spec: expected key=value, got '" + std::string(item) + "'");
    const std::string_view key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "id") {
      if (value.empty()) throw ConfigError("synthetic spec: empty id");
      spec.id = std::string(value);
    } else if (key == "duration") {
      spec.duration = parse_double(key, value);
    } else if (key == "fps") {
      spec.fps = parse_double(key, value);
    } else if (key == "width") {
      spec.width = static_cast<int>(parse_double(key, value));
    } else if (key == "height") {
      spec.height = static_cast<int>(parse_double(key, value));
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(parse_double(key, value));
    } else if (key == "positive") {
      spec.positive.clear();
      if (value.empty()) continue;
      for (std::string_view range : split(value, '+')) {
        const std::size_t dash = range.find('-');
        if (dash == std::string_view::npos) throw ConfigError("synthetic spec: range needs start-end");
        TimeRange r{parse_double(key, range.substr(0, dash)), parse_double(key, range.substr(dash + 1))};
        if (!(r.start < r.end)) throw ConfigError("synthetic spec: empty positive range");
        spec.positive.push_back(r);
      }
    } else {
      throw ConfigError("synthetic spec: unknown key '" + std::string(key) + "'");
    }
  }
  if (!(spec.duration > 0) || !(spec.fps > 0) || spec.width <= 0 || spec.height <= 0) {
    throw ConfigError("synthetic spec: duration, fps and size must be positive");
  }
  return spec;
}

std::string SyntheticVideoSpec::to_string() const {
  std::ostringstream os;
  os << "synthetic:id=" << id << ",duration=" << duration << ",fps=" << fps << ",width=" << width
     << ",height=" << height << ",seed=" << seed;
  if (!positive.empty()) {
    os << ",positive=";
    for (std::size_t i = 0; i < positive.size(); ++i) {
      os << (i ? "+" : "") << positive[i].start << "-" << positive[i].end;
    }
  }
  return os.str();
}

Image render_synthetic_frame(int width, int height, double t, bool positive, std::uint64_t seed) {
  Image img(width, height);
  if (positive) {
    const int band = std::max(1, width / 8);
    for (int x = 0; x < width; x += band) {
      const bool light = (x / band) % 2 == 0;
      fill_rect(img, x, 0, x + band, height, light ? Rgb{60, 170, 60} : Rgb{40, 140, 45});
    }
    fill_rect(img, width / 2 - std::max(1, width / 160), 0, width / 2 + std::max(1, width / 160), height,
              Rgb{230, 240, 230});
    const double phase = static_cast<double>(seed % 97);
    const double cx = (0.5 + 0.4 * std::sin(0.7 * t + phase)) * width;
    const double cy = (0.5 + 0.3 * std::cos(1.1 * t + phase)) * height;
    fill_disc(img, cx, cy, std::max(1.5, height / 12.0), Rgb{250, 250, 250});
    return img;
  }
  const auto scene = static_cast<std::uint64_t>(std::floor(t / kSceneSeconds));
  std::mt19937_64 rng(seed * 1000003ULL + scene);
  std::uniform_int_distribution<std::size_t> pick(0, kPalette.size() - 1);
  const Rgb top = kPalette[pick(rng)], bottom = kPalette[pick(rng)], box = kPalette[pick(rng)];
  const int horizon = height * 2 / 5;
  fill_rect(img, 0, 0, width, horizon, top);
  fill_rect(img, 0, horizon, width, height, bottom);
  const double local = t - static_cast<double>(scene) * kSceneSeconds;
  const int bw = width / 5, bh = height / 4;
  const int bx = static_cast<int>((local / kSceneSeconds) * (width - bw));
  const int by = height / 2 - bh / 2 + static_cast<int>(std::sin(local * 2.0) * height / 8);
  fill_rect(img, bx, by, bx + bw, by + bh, box);
  return img;
}

SyntheticVideo::SyntheticVideo(SyntheticVideoSpec spec) : spec_(std::move(spec)) {
  if (!(spec_.duration > 0) || !(spec_.fps > 0)) throw ConfigError("synthetic video needs positive duration and fps");
  count_ = static_cast<std::size_t>(std::llround(spec_.duration * spec_.fps));
  if (count_ == 0) count_ = 1;
}

bool SyntheticVideo::is_positive(double t) const {
  return std::any_of(spec_.positive.begin(), spec_.positive.end(),
                     [t](const TimeRange& r) { return r.contains(t); });
}

Image SyntheticVideo::frame(std::size_t i) const {
  if (i >= count_) throw RangeError("frame index out of range");
  const double t = timestamp(i);
  return render_synthetic_frame(spec_.width, spec_.height, t, is_positive(t), spec_.seed);
}

ImageDirectorySource::ImageDirectorySource(const std::filesystem::path& dir, double fps, std::string video_id)
    : id_(std::move(video_id)), fps_(fps) {
  if (!(fps_ > 0)) throw ConfigError("fps must be positive");
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files_.push_back(e.path());
  }
  std::sort(files_.begin(), files_.end());
  if (id_.empty()) id_ = std::filesystem::absolute(dir).lexically_normal().filename().string();
  if (id_.empty()) id_ = std::filesystem::absolute(dir).lexically_normal().parent_path().filename().string();
}

Image ImageDirectorySource::frame(std::size_t i) const { return read_png(files_.at(i)); }

std::unique_ptr<FrameSource> open_frame_source(std::string_view spec, double fps) {
  if (spec.starts_with("synthetic")) {
    return std::make_unique<SyntheticVideo>(SyntheticVideoSpec::parse(spec));
  }
  return std::make_unique<ImageDirectorySource>(std::filesystem::path(std::string(spec)), fps);
}

}  // namespace evs
