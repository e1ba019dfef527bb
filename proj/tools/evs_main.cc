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

// evs: command-line front end for containers, models, analysis, schedules,
// the provider service and the edge client.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <string>

#include "evs/edge_client.h"
#include "evs/errors.h"
#include "evs/hierarchical_analyzer.h"
#include "evs/local_api.h"
#include "evs/summary_scheduler.h"
#include "evs/synthetic_dataset.h"
#include "evs/thumbnail_container.h"
#include "evs/vsp_client.h"
#include "evs/vsp_service.h"

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw evs::NotFound("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw evs::DataError("cannot write " + path);
  out << text;
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw evs::ConfigError(path + ": " + e.what());
  }
}

evs::PreferenceProfile read_prefs(const std::string& path) {
  return evs::PreferenceProfile::from_json(read_json(path));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized fast-forward video summaries"};
  app.require_subcommand(1);

  // gen-container
  std::string gc_in, gc_out;
  double gc_interval = 1.0, gc_fps = 30;
  int gc_w = evs::kThumbnailWidth, gc_h = evs::kThumbnailHeight;
  bool gc_deflate = false;
  auto* gen = app.add_subcommand("gen-container", "Build a thumbnail container from frames");
  gen->add_option("--in", gc_in, "Image directory or synthetic:key=value,...")->required();
  gen->add_option("--interval", gc_interval, "Seconds between thumbnails")->capture_default_str();
  gen->add_option("--out", gc_out, "Output .tnc file")->required();
  gen->add_option("--fps", gc_fps, "Frame rate for image directories")->capture_default_str();
  gen->add_option("--width", gc_w)->capture_default_str();
  gen->add_option("--height", gc_h)->capture_default_str();
  gen->add_flag("--deflate", gc_deflate, "Compress each payload");

  // train
  std::string tr_out;
  evs::PitchModelOptions tr_opts;
  auto* trn = app.add_subcommand("train", "Train the two-class pitch model on rendered scenes");
  trn->add_option("--out", tr_out, "Output .evsm checkpoint")->required();
  trn->add_option("--epochs", tr_opts.train.epochs)->capture_default_str();
  trn->add_option("--lr", tr_opts.train.learning_rate)->capture_default_str();
  trn->add_option("--per-class", tr_opts.data.per_class)->capture_default_str();
  trn->add_option("--seed", tr_opts.train.seed)->capture_default_str();

  // analyze
  std::string an_container, an_model, an_prefs, an_out;
  evs::AnalyzeConfig an_cfg;
  auto* ana = app.add_subcommand("analyze", "Score a container against preferences");
  ana->add_option("--container", an_container)->required();
  ana->add_option("--model", an_model)->required();
  ana->add_option("--prefs", an_prefs, "{categories:{name:weight}, threshold}")->required();
  ana->add_option("--stride", an_cfg.initial_stride, "Initial stride, a power of two")->capture_default_str();
  ana->add_option("--threads", an_cfg.threads)->capture_default_str();
  ana->add_option("--out", an_out, "Output track.json")->required();

  // schedule
  std::string sc_track, sc_out;
  double sc_threshold = -1, sc_fast = evs::kDefaultFastSpeed;
  evs::SegmentOptions sc_opts;
  auto* sch = app.add_subcommand("schedule", "Turn a relevance track into an EDL");
  sch->add_option("--track", sc_track)->required();
  sch->add_option("--threshold", sc_threshold, "Defaults to the track threshold");
  sch->add_option("--fast", sc_fast, "Background speed")->capture_default_str();
  sch->add_option("--min-duration", sc_opts.min_duration)->capture_default_str();
  sch->add_option("--merge-gap", sc_opts.merge_gap)->capture_default_str();
  sch->add_option("--out", sc_out, "Output edl.json")->required();

  // build-store
  std::string bs_root, bs_in;
  evs::StoreVideoOptions bs_opts;
  double bs_fps = 30;
  bool bs_raw = false;
  auto* bst = app.add_subcommand("build-store", "Add a video to a provider store");
  bst->add_option("--root", bs_root)->envname("EVS_VSP_ROOT")->required();
  bst->add_option("--in", bs_in, "Image directory or synthetic:key=value,...")->required();
  bst->add_option("--title", bs_opts.title);
  bst->add_option("--interval", bs_opts.container.interval)->capture_default_str();
  bst->add_option("--segment-seconds", bs_opts.segment_seconds)->capture_default_str();
  bst->add_option("--bitrate", bs_opts.bytes_per_second, "Segment bytes per second")->capture_default_str();
  bst->add_option("--fps", bs_fps, "Frame rate for image directories")->capture_default_str();
  bst->add_flag("--raw", bs_raw, "Store uncompressed thumbnails");

  // vsp
  std::string vsp_root, vsp_host = "127.0.0.1";
  int vsp_port = 8700;
  auto* vsp = app.add_subcommand("vsp", "Serve a provider store over HTTP");
  vsp->add_option("--root", vsp_root)->envname("EVS_VSP_ROOT")->required();
  vsp->add_option("--port", vsp_port)->capture_default_str();
  vsp->add_option("--host", vsp_host)->capture_default_str();

  // summarize
  std::string su_vsp, su_video, su_prefs, su_model, su_out;
  evs::SummarizeConfig su_cfg;
  double su_threshold = -1;
  bool su_no_stream = false;
  auto* sum = app.add_subcommand("summarize", "Run the full edge pipeline against a provider");
  sum->add_option("--vsp", su_vsp, "Provider address host:port")->required();
  sum->add_option("--video", su_video)->required();
  sum->add_option("--prefs", su_prefs)->required();
  sum->add_option("--model", su_model)->required();
  sum->add_option("--out", su_out, "Session directory")->required();
  sum->add_option("--stride", su_cfg.analyze.initial_stride)->capture_default_str();
  sum->add_option("--fast", su_cfg.fast_speed)->capture_default_str();
  sum->add_option("--threshold", su_threshold, "Defaults to the profile threshold");
  sum->add_flag("--no-stream", su_no_stream, "Skip fetching segments after the prefetch");

  // edge
  std::string ed_vsp, ed_model, ed_host = "127.0.0.1";
  int ed_port = 8701;
  auto* edge = app.add_subcommand("edge", "Serve the local API for the preference console");
  edge->add_option("--vsp", ed_vsp, "Provider address host:port")->required();
  edge->add_option("--model", ed_model)->required();
  edge->add_option("--port", ed_port)->capture_default_str();
  edge->add_option("--host", ed_host)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto source = evs::open_frame_source(gc_in, gc_fps);
      const auto c = evs::generate(*source, {.interval = gc_interval, .width = gc_w, .height = gc_h, .deflate = gc_deflate});
      const auto bytes = evs::encode(c);
      write_text(gc_out, std::string(bytes.begin(), bytes.end()));
      const evs::Image first = source->frame(0);
      const auto r = evs::reduction_report(c.size(), c.header.payload_size(), source->frame_count(),
                                           first.rgb.size(), bytes.size());
      std::printf("%s: %zu thumbnails from %zu frames, %zu bytes\n", gc_out.c_str(), c.size(),
                  source->frame_count(), bytes.size());
      std::printf("reduction: count %.2f%%, per-frame memory %.2f%%, raw bytes %.3f%%, encoded bytes %.3f%%\n",
                  r.count_reduction_pct, r.per_frame_memory_reduction_pct, r.byte_reduction_pct,
                  r.encoded_byte_reduction_pct);
    } else if (*trn) {
      const auto result = evs::train_pitch_model(tr_opts);
      evs::save_model_file(result.model, tr_out);
      evs::PitchDatasetOptions held = tr_opts.data;
      held.seed += 1000;
      std::printf("%s: loss %.4f -> %.4f, held-out accuracy %.3f, %zu parameters\n", tr_out.c_str(),
                  result.epoch_loss.front(), result.epoch_loss.back(),
                  evs::accuracy(result.model, evs::pitch_dataset(held)), evs::param_count(result.model).total);
    } else if (*ana) {
      const auto container = evs::read_container_file(an_container);
      const auto model = evs::load_model_file(an_model);
      const evs::ModelClassifier clf(model);
      const auto track = evs::analyze(container, clf, read_prefs(an_prefs), an_cfg);
      write_text(an_out, track.to_json().dump(2) + "\n");
      std::printf("%s: %zu of %zu thumbnails classified over %zu levels\n", an_out.c_str(), track.classifications(),
                  track.size(), track.levels.size());
    } else if (*sch) {
      const auto track = evs::RelevanceTrack::from_json(read_json(sc_track));
      const double thr = sc_threshold > 0 ? sc_threshold : track.threshold;
      const auto segs = evs::segments_from_track(track, thr, sc_opts);
      const auto s = evs::build_schedule(track.video_id, segs, sc_fast, track.duration);
      write_text(sc_out, evs::emit_edl(s) + "\n");
      std::printf("%s: %zu entries, %.3f s preferred, summary %.3f s of %.3f s\n", sc_out.c_str(), s.entries.size(),
                  s.preferred_time(), s.summary_duration, s.duration());
    } else if (*bst) {
      bs_opts.container.deflate = !bs_raw;
      const auto source = evs::open_frame_source(bs_in, bs_fps);
      const auto e = evs::add_video(bs_root, *source, bs_opts);
      std::printf("%s: added %s, %u thumbnails (%llu bytes), %zu segments (%llu bytes)\n", bs_root.c_str(),
                  e.video_id.c_str(), e.thumbnail_count, static_cast<unsigned long long>(e.container_bytes),
                  e.segments.size(), static_cast<unsigned long long>(e.declared_bytes()));
    } else if (*vsp) {
      evs::VspServer server(vsp_root);
      std::printf("serving %zu videos from %s on http://%s:%d\n", server.store()->catalog().size(), vsp_root.c_str(),
                  vsp_host.c_str(), vsp_port);
      std::fflush(stdout);
      server.run(vsp_host, vsp_port);
    } else if (*sum) {
      if (su_threshold > 0) su_cfg.threshold = su_threshold;
      su_cfg.stream_segments = !su_no_stream;
      const auto model = evs::load_model_file(su_model);
      const evs::ModelClassifier clf(model);
      evs::HttpVspClient client(su_vsp);
      const auto s = evs::summarize(client, su_video, read_prefs(su_prefs), clf, su_cfg);
      evs::write_session(s, su_out);
      std::printf("%s: summary %.3f s of %.3f s, %zu classifications (%.0f thumbnails/s), %.1f ms total\n",
                  su_out.c_str(), s.schedule.summary_duration, s.schedule.duration(), s.track.classifications(),
                  s.thumbnails_per_second, s.total_ms);
      std::printf("downloaded %llu bytes before playback, %llu in total, of %llu declared\n",
                  static_cast<unsigned long long>(s.bandwidth.before_playback()),
                  static_cast<unsigned long long>(s.bandwidth.total()),
                  static_cast<unsigned long long>(s.bandwidth.declared_bytes));
    } else if (*edge) {
      evs::LocalApiServer server(std::make_shared<evs::HttpVspClient>(ed_vsp), evs::load_model_file(ed_model));
      std::printf("local API for %s on http://%s:%d\n", ed_vsp.c_str(), ed_host.c_str(), ed_port);
      std::fflush(stdout);
      server.run(ed_host, ed_port);
    }
  } catch (const evs::Error& e) {
    std::fprintf(stderr, "evs: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
