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

#include "evs/vsp_service.h"

#include <httplib.h>

#include <cstdio>
#include <string>

#include "evs/errors.h"

namespace evs {
namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

double query_number(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) throw DataError(std::string("missing query parameter '") + key + "'");
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw DataError(std::string("bad number for '") + key + "'");
  return out;
}

void send_error(httplib::Response& res, const std::exception& e) {
  res.status = http_status_for(e);
  res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
}

}  // namespace

bool RecordedRequest::contains(std::string_view needle) const {
  for (const std::string* s : {&method, &target, &headers, &body}) {
    if (s->find(needle) != std::string::npos) return true;
  }
  return false;
}

void RequestRecorder::record(RecordedRequest r) {
  std::lock_guard lock(mu_);
  requests_.push_back(std::move(r));
}

std::vector<RecordedRequest> RequestRecorder::snapshot() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::size_t RequestRecorder::size() const {
  std::lock_guard lock(mu_);
  return requests_.size();
}

bool RequestRecorder::saw(std::string_view needle) const {
  std::lock_guard lock(mu_);
  for (const auto& r : requests_) {
    if (r.contains(needle)) return true;
  }
  return false;
}

int http_status_for(const std::exception& e) {
  if (dynamic_cast<const NotFound*>(&e)) return 404;
  if (dynamic_cast<const RangeError*>(&e)) return 416;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ContractError*>(&e) ||
      dynamic_cast<const FormatError*>(&e)) {
    return 400;
  }
  if (dynamic_cast<const ModelError*>(&e)) return 422;
  return 500;
}

VspServer::VspServer(std::filesystem::path root, VspServerOptions options)
    : root_(std::move(root)), options_(std::move(options)), store_(VideoStore::load(root_)) {
  server_ = std::make_unique<httplib::Server>();
  const int threads = std::max(1, options_.threads);
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };
  install_routes();
}

VspServer::~VspServer() { stop(); }

std::shared_ptr<const VideoStore> VspServer::store() const {
  std::lock_guard lock(store_mu_);
  return store_;
}

void VspServer::reload() {
  auto fresh = VideoStore::load(root_);
  std::lock_guard lock(store_mu_);
  store_ = std::move(fresh);
}

void VspServer::install_routes() {
  if (options_.recorder) {
    auto recorder = options_.recorder;
    // Runs before the response is written, so a client never sees a reply
    // to a request that has not been recorded yet.
    server_->set_post_routing_handler([recorder](const httplib::Request& req, httplib::Response&) {
      RecordedRequest r;
      r.method = req.method;
      r.target = req.target;
      for (const auto& [k, v] : req.headers) r.headers += k + ": " + v + "\r\n";
      r.body = req.body;
      recorder->record(std::move(r));
    });
  }

  server_->Get("/catalog", [this](const httplib::Request&, httplib::Response& res) {
    const auto s = store();
    nlohmann::json list = nlohmann::json::array();
    for (const auto& e : s->catalog()) list.push_back(e.summary());
    res.set_content(nlohmann::json{{"videos", list}}.dump(), "application/json");
  });

  server_->Get("/videos/:id", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(store()->entry(req.path_params.at("id")).detail().dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });

  server_->Get("/videos/:id/container", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto bytes = store()->container_bytes(req.path_params.at("id"));
      res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "application/octet-stream");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });

  server_->Get("/videos/:id/segment", [this](const httplib::Request& req, httplib::Response& res) {
    double start = 0, end = 0;
    try {
      start = query_number(req, "start");
      end = query_number(req, "end");
    } catch (const DataError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      return;
    }
    try {
      const SegmentBundle b = store()->segments(req.path_params.at("id"), start, end);
      std::string body;
      body.reserve(b.total_bytes());
      std::vector<std::size_t> sizes;
      for (const auto& blob : b.blobs) {
        body.append(reinterpret_cast<const char*>(blob.data()), blob.size());
        sizes.push_back(blob.size());
      }
      res.set_header("X-Evs-Start", exact(b.start));
      res.set_header("X-Evs-End", exact(b.end));
      res.set_header("X-Evs-Segments", join(b.indices));
      res.set_header("X-Evs-Sizes", join(sizes));
      res.set_content(std::move(body), "application/octet-stream");
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
}

int VspServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port), false);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void VspServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port), false);
}

void VspServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace evs
