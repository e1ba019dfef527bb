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

#ifndef EVS_VSP_SERVICE_H_
#define EVS_VSP_SERVICE_H_

#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "evs/video_store.h"

namespace httplib {
class Server;
}

namespace evs {

// Everything a server received for one request, as seen on the wire.
struct RecordedRequest {
  std::string method;
  std::string target;  // path plus raw query
  std::string headers;
  std::string body;

  bool contains(std::string_view needle) const;
};

class RequestRecorder {
 public:
  void record(RecordedRequest r);
  std::vector<RecordedRequest> snapshot() const;
  std::size_t size() const;
  // True if any recorded byte sequence contains `needle`.
  bool saw(std::string_view needle) const;

 private:
  mutable std::mutex mu_;
  std::vector<RecordedRequest> requests_;
};

// Maps library errors to HTTP status codes.
int http_status_for(const std::exception& e);

struct VspServerOptions {
  int threads = 32;
  std::shared_ptr<RequestRecorder> recorder;  // optional
};

// Serves a VideoStore over HTTP:
//   GET /catalog                          {"videos": [summary...]}
//   GET /videos/{id}                      catalog detail
//   GET /videos/{id}/container            TNC1 bytes
//   GET /videos/{id}/segment?start=&end=  concatenated blobs
// The segment response echoes the covered interval and blob layout in the
// X-Evs-Start, X-Evs-End, X-Evs-Segments and X-Evs-Sizes headers.
class VspServer {
 public:
  explicit VspServer(std::filesystem::path root, VspServerOptions options = {});
  ~VspServer();

  VspServer(const VspServer&) = delete;
  VspServer& operator=(const VspServer&) = delete;

  // Binds (port 0 picks a free one), serves on a background thread and
  // returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until stop() is called from another thread.
  void run(const std::string& host, int port);
  void stop();

  // Re-reads the store; in-flight requests keep the snapshot they started with.
  void reload();
  std::shared_ptr<const VideoStore> store() const;

 private:
  void install_routes();

  std::filesystem::path root_;
  VspServerOptions options_;
  mutable std::mutex store_mu_;
  std::shared_ptr<const VideoStore> store_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace evs

#endif  // EVS_VSP_SERVICE_H_
