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

#include "evs/local_api.h"

#include <httplib.h>

#include "evs/errors.h"
#include "evs/image.h"
#include "evs/vsp_service.h"

namespace evs {
namespace {

void send_json(httplib::Response& res, const nlohmann::json& j, int status = 200) {
  res.status = status;
  res.set_content(j.dump(), "application/json");
}

void send_error(httplib::Response& res, const std::exception& e) {
  send_json(res, {{"error", e.what()}}, http_status_for(e));
}

}  // namespace

LocalApiServer::LocalApiServer(std::shared_ptr<VspClient> vsp, ClassifierModel model, LocalApiOptions options)
    : vsp_(std::move(vsp)), model_(std::move(model)), classifier_(model_), options_(std::move(options)) {
  if (!vsp_) throw ConfigError("local API needs a provider client");
  server_ = std::make_unique<httplib::Server>();
  const auto threads = static_cast<std::size_t>(std::max(1, options_.threads));
  server_->new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
  install_routes();
}

LocalApiServer::~LocalApiServer() { stop(); }

std::shared_ptr<LocalApiServer::Slot> LocalApiServer::find_session(const std::string& id) {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
  return it->second;
}

std::shared_ptr<const ThumbnailContainer> LocalApiServer::container_for(const std::string& video_id) {
  {
    std::lock_guard lock(mu_);
    if (auto it = containers_.find(video_id); it != containers_.end()) return it->second;
  }
  // Fetch outside the lock; a racing duplicate fetch is harmless.
  auto c = std::make_shared<const ThumbnailContainer>(decode(vsp_->container(video_id)));
  std::lock_guard lock(mu_);
  return containers_.emplace(video_id, std::move(c)).first->second;
}

void LocalApiServer::install_routes() {
  server_->set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
  });
  server_->Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  server_->Get("/labels", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, {{"labels", model_.labels}});
  });

  server_->Get("/videos", [this](const httplib::Request&, httplib::Response& res) {
    try {
      nlohmann::json list = nlohmann::json::array();
      for (const auto& e : vsp_->catalog()) {
        list.push_back({{"video_id", e.video_id},
                        {"title", e.title},
                        {"duration", e.duration},
                        {"thumbnail_count", e.thumbnail_count},
                        {"container_bytes", e.container_bytes}});
      }
      send_json(res, {{"videos", list}});
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });

  server_->Get("/videos/:id/thumbnails/:index", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string& raw = req.path_params.at("index");
      std::size_t used = 0;
      unsigned long long index = 0;
      try {
        index = std::stoull(raw, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != raw.size()) throw DataError("thumbnail index must be a number");
      const auto c = container_for(req.path_params.at("id"));
      if (index >= c->size()) throw NotFound("thumbnail index " + raw + " out of range");
      const auto png = encode_png(c->image(index));
      res.set_header("X-Evs-Timestamp", std::to_string(c->entries[index].timestamp));
      res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
    } catch (const DataError& e) {
      send_json(res, {{"error", e.what()}}, 400);
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });

  server_->Post("/summarize", [this](const httplib::Request& req, httplib::Response& res) {
    std::string video_id;
    PreferenceProfile profile;
    try {
      const auto body = nlohmann::json::parse(req.body);
      video_id = body.at("video_id").get<std::string>();
      profile = PreferenceProfile::from_json(body.at("profile"));
      ResolvedProfile check(profile, model_.labels);
    } catch (const nlohmann::json::exception& e) {
      send_json(res, {{"error", std::string("malformed request: ") + e.what()}}, 400);
      return;
    } catch (const std::exception& e) {
      send_error(res, e);
      return;
    }
    auto slot = std::make_shared<Slot>();
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = "s" + std::to_string(next_session_++);
      sessions_.emplace(id, slot);
      workers_.emplace_back([this, slot, video_id, profile] {
        try {
          auto session = std::make_unique<SummarySession>(
              summarize(*vsp_, video_id, profile, classifier_, options_.summarize));
          std::lock_guard l(slot->mu);
          slot->session = std::move(session);
          slot->status = "done";
        } catch (const std::exception& e) {
          std::lock_guard l(slot->mu);
          slot->status = "failed";
          slot->error = e.what();
          slot->error_status = http_status_for(e);
        }
      });
    }
    send_json(res, {{"session_id", id}}, 202);
  });

  server_->Get("/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string id = req.path_params.at("id");
      const auto slot = find_session(id);
      std::lock_guard l(slot->mu);
      nlohmann::json j = slot->session ? slot->session->to_json() : nlohmann::json::object();
      j["session_id"] = id;
      j["status"] = slot->status;
      if (slot->status == "failed") {
        j["error"] = slot->error;
        j["error_status"] = slot->error_status;
      }
      send_json(res, j);
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });

  auto finished = [this](const httplib::Request& req) {
    const auto slot = find_session(req.path_params.at("id"));
    std::lock_guard l(slot->mu);
    if (!slot->session) throw ContractError("session is " + slot->status);
    return std::make_pair(slot->session->edl(), trace_to_json(slot->session->trace).dump());
  };
  server_->Get("/sessions/:id/edl", [finished](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(finished(req).first, "application/json");
    } catch (const ContractError& e) {
      send_json(res, {{"error", e.what()}}, 409);
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
  server_->Get("/sessions/:id/trace", [finished](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(finished(req).second, "application/json");
    } catch (const ContractError& e) {
      send_json(res, {{"error", e.what()}}, 409);
    } catch (const std::exception& e) {
      send_error(res, e);
    }
  });
}

int LocalApiServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port), false);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void LocalApiServer::run(const std::string& host, int port) {
  if (!server_->listen(host, port)) throw TransportError("cannot listen on " + host + ":" + std::to_string(port), false);
}

void LocalApiServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

}  // namespace evs
