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

#ifndef EVS_LOCAL_API_H_
#define EVS_LOCAL_API_H_

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "evs/edge_client.h"
#include "evs/tam_classifier.h"

namespace httplib {
class Server;
}

namespace evs {

struct LocalApiOptions {
  SummarizeConfig summarize;
  int threads = 8;
};

// HTTP service the preference console talks to. Nothing here is reachable
// from the provider; the profile only travels between the console and
// this process.
//   GET  /labels                            {"labels": [...]}
//   GET  /videos                            proxied catalog
//   GET  /videos/{id}/thumbnails/{index}    PNG of one container payload
//   POST /summarize {video_id, profile}     {"session_id": ...}, 202
//   GET  /sessions/{id}                     status, then track/EDL/metrics
//   GET  /sessions/{id}/edl                 canonical EDL bytes
//   GET  /sessions/{id}/trace               playback trace
class LocalApiServer {
 public:
  LocalApiServer(std::shared_ptr<VspClient> vsp, ClassifierModel model, LocalApiOptions options = {});
  ~LocalApiServer();

  LocalApiServer(const LocalApiServer&) = delete;
  LocalApiServer& operator=(const LocalApiServer&) = delete;

  int start(const std::string& host = "127.0.0.1", int port = 0);
  void run(const std::string& host, int port);
  // Stops serving and waits for running sessions to finish.
  void stop();

 private:
  struct Slot {
    std::mutex mu;
    std::string status = "running";  // running | done | failed
    std::unique_ptr<SummarySession> session;
    std::string error;
    int error_status = 0;
  };

  void install_routes();
  std::shared_ptr<Slot> find_session(const std::string& id);
  std::shared_ptr<const ThumbnailContainer> container_for(const std::string& video_id);

  std::shared_ptr<VspClient> vsp_;
  ClassifierModel model_;
  ModelClassifier classifier_;
  LocalApiOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;

  std::mutex mu_;  // guards the maps and worker list below
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::map<std::string, std::shared_ptr<const ThumbnailContainer>> containers_;
  std::vector<std::thread> workers_;
  std::size_t next_session_ = 1;
};

}  // namespace evs

#endif  // EVS_LOCAL_API_H_
