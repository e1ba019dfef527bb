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

#include "evs/vsp_client.h"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <thread>

#include "evs/errors.h"

namespace evs {
namespace {

std::string error_message(const std::string& body, int status) {
  try {
    const auto j = nlohmann::json::parse(body);
    if (j.contains("error")) return j["error"].get<std::string>();
  } catch (const std::exception&) {
  }
  return "HTTP status " + std::to_string(status);
}

[[noreturn]] void throw_for_status(int status, const std::string& msg) {
  if (status == 404) throw NotFound(msg);
  if (status == 416) throw RangeError(msg);
  if (status == 422) throw ModelError(msg);
  if (status >= 400 && status < 500) throw DataError(msg);
  throw TransportError(msg, true);
}

std::vector<std::size_t> parse_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t end = s.find(',', start);
    if (end == std::string::npos) end = s.size();
    out.push_back(static_cast<std::size_t>(std::stoull(s.substr(start, end - start))));
    start = end + 1;
  }
  return out;
}

std::string fixed(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<CatalogEntry> catalog_from_json(const nlohmann::json& j) {
  std::vector<CatalogEntry> out;
  try {
    for (const auto& v : j.at("videos")) {
      CatalogEntry e;
      e.video_id = v.at("video_id").get<std::string>();
      e.title = v.value("title", e.video_id);
      e.duration = v.at("duration").get<double>();
      e.thumbnail_count = v.value("thumbnail_count", 0u);
      e.container_bytes = v.value("container_bytes", std::uint64_t{0});
      e.container_crc32 = v.value("container_crc32", 0u);
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed catalog: ") + e.what());
  }
  return out;
}

std::string HttpVspClient::Reply::header(std::string_view key) const {
  for (const auto& [k, v] : headers) {
    if (k == key) return v;
  }
  throw DataError("response lacks header " + std::string(key));
}

HttpVspClient::HttpVspClient(std::string address, HttpClientOptions options) : options_(options) {
  while (!address.empty() && address.back() == '/') address.pop_back();
  if (address.empty()) throw ConfigError("empty VSP address");
  base_ = address.find("://") == std::string::npos ? "http://" + address : address;
}

HttpVspClient::Reply HttpVspClient::get(const std::string& path) {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    httplib::Client cli(base_);
    cli.set_connection_timeout(std::chrono::milliseconds(options_.connect_timeout_ms));
    cli.set_read_timeout(std::chrono::milliseconds(options_.read_timeout_ms));
    // Only the path is sent; no cookies, no custom headers.
    auto res = cli.Get(path);
    if (!res) {
      last_error = "request to " + base_ + path + " failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = error_message(res->body, res->status);
      continue;
    }
    if (res->status != 200) throw_for_status(res->status, error_message(res->body, res->status));
    count_bytes(res->body.size());
    Reply r;
    r.body = std::move(res->body);
    for (const auto& [k, v] : res->headers) r.headers.emplace_back(k, v);
    return r;
  }
  throw TransportError(last_error, true);
}

std::vector<CatalogEntry> HttpVspClient::catalog() {
  const Reply r = get("/catalog");
  try {
    return catalog_from_json(nlohmann::json::parse(r.body));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed catalog: ") + e.what());
  }
}

CatalogEntry HttpVspClient::video(std::string_view video_id) {
  if (!valid_video_id(video_id)) throw NotFound("unknown video '" + std::string(video_id) + "'");
  const Reply r = get("/videos/" + std::string(video_id));
  try {
    return CatalogEntry::from_detail(nlohmann::json::parse(r.body));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed video detail: ") + e.what());
  }
}

std::vector<std::uint8_t> HttpVspClient::container(std::string_view video_id) {
  if (!valid_video_id(video_id)) throw NotFound("unknown video '" + std::string(video_id) + "'");
  const Reply r = get("/videos/" + std::string(video_id) + "/container");
  return std::vector<std::uint8_t>(r.body.begin(), r.body.end());
}

SegmentBundle HttpVspClient::segments(std::string_view video_id, double start, double end) {
  if (!valid_video_id(video_id)) throw NotFound("unknown video '" + std::string(video_id) + "'");
  const Reply r = get("/videos/" + std::string(video_id) + "/segment?start=" + fixed(start) + "&end=" + fixed(end));
  SegmentBundle b;
  b.video_id = std::string(video_id);
  try {
    b.start = std::stod(r.header("X-Evs-Start"));
    b.end = std::stod(r.header("X-Evs-End"));
    b.indices = parse_list(r.header("X-Evs-Segments"));
    const auto sizes = parse_list(r.header("X-Evs-Sizes"));
    if (sizes.size() != b.indices.size()) throw DataError("segment header mismatch");
    std::size_t off = 0;
    for (std::size_t n : sizes) {
      if (off + n > r.body.size()) throw DataError("segment body shorter than declared");
      b.blobs.emplace_back(r.body.begin() + static_cast<std::ptrdiff_t>(off),
                           r.body.begin() + static_cast<std::ptrdiff_t>(off + n));
      off += n;
    }
    if (off != r.body.size()) throw DataError("segment body longer than declared");
  } catch (const std::invalid_argument&) {
    throw DataError("malformed segment headers");
  } catch (const std::out_of_range&) {
    throw DataError("malformed segment headers");
  }
  return b;
}

}  // namespace evs
