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

#ifndef EVS_VSP_CLIENT_H_
#define EVS_VSP_CLIENT_H_

#include <atomic>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "evs/video_store.h"
#include "json.hpp"

namespace evs {

// The only calls an edge device makes to the provider. None of them carry
// viewer preferences.
class VspClient {
 public:
  virtual ~VspClient() = default;
  virtual std::vector<CatalogEntry> catalog() = 0;  // summaries, no segments
  virtual CatalogEntry video(std::string_view video_id) = 0;
  virtual std::vector<std::uint8_t> container(std::string_view video_id) = 0;
  virtual SegmentBundle segments(std::string_view video_id, double start, double end) = 0;

  // Response body bytes received so far.
  std::uint64_t bytes_received() const { return bytes_received_; }

 protected:
  void count_bytes(std::uint64_t n) { bytes_received_ += n; }

 private:
  std::atomic<std::uint64_t> bytes_received_{0};
};

struct HttpClientOptions {
  int connect_timeout_ms = 2000;
  int read_timeout_ms = 10000;
  int retries = 2;  // extra attempts after a transport failure or 5xx
};

// Thread-safe: each call uses its own connection.
class HttpVspClient : public VspClient {
 public:
  // "host:port", "http://host:port" or with a trailing slash.
  explicit HttpVspClient(std::string address, HttpClientOptions options = {});

  std::vector<CatalogEntry> catalog() override;
  CatalogEntry video(std::string_view video_id) override;
  std::vector<std::uint8_t> container(std::string_view video_id) override;
  SegmentBundle segments(std::string_view video_id, double start, double end) override;

  const std::string& base_url() const { return base_; }

 private:
  struct Reply {
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string header(std::string_view key) const;
  };
  Reply get(const std::string& path);

  std::string base_;
  HttpClientOptions options_;
};

// Decodes a catalog summary list as returned by GET /catalog.
std::vector<CatalogEntry> catalog_from_json(const nlohmann::json& j);

}  // namespace evs

#endif  // EVS_VSP_CLIENT_H_
