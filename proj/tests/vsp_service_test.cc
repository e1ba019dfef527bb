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

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <random>
#include <thread>

#include "evs/errors.h"
#include "evs/vsp_client.h"
#include "evs/vsp_service.h"

namespace evs {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("evs_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

StoreVideoOptions small_options() {
  StoreVideoOptions o;
  o.segment_seconds = 4;
  o.bytes_per_second = 4096;
  return o;
}

CatalogEntry add_small(const fs::path& root, const std::string& id, double duration = 40) {
  const SyntheticVideo v(SyntheticVideoSpec::parse("synthetic:id=" + id + ",duration=" + std::to_string(duration) +
                                                   ",fps=10,width=64,height=36,positive=8-16"));
  return add_video(root, v, small_options());
}

TEST(VideoStore, EmptyStoreListsNothing) {
  TempDir dir("store_empty");
  EXPECT_TRUE(VideoStore::load(dir.path())->catalog().empty());
  EXPECT_THROW(VideoStore::load(dir.path() / "missing"), NotFound);
}

TEST(VideoStore, OneVideoOneSummary) {
  TempDir dir("store_one");
  const CatalogEntry added = add_small(dir.path(), "clip");
  const auto store = VideoStore::load(dir.path());
  ASSERT_EQ(store->catalog().size(), 1u);
  EXPECT_EQ(store->catalog()[0].summary(), added.summary());
  EXPECT_EQ(store->catalog()[0].summary(), VideoStore::load(dir.path())->catalog()[0].summary());
  EXPECT_EQ(added.segments.size(), 10u);
  EXPECT_EQ(added.declared_bytes(), 40u * 4096);
  EXPECT_EQ(added.thumbnail_count, 41u);
}

TEST(VideoStore, CatalogSortedById) {
  TempDir dir("store_sorted");
  add_small(dir.path(), "zeta", 8);
  add_small(dir.path(), "alpha", 8);
  add_small(dir.path(), "mid", 8);
  add_small(dir.path(), "alpha", 12);  // replaces
  const auto store = VideoStore::load(dir.path());
  ASSERT_EQ(store->catalog().size(), 3u);
  EXPECT_EQ(store->catalog()[0].video_id, "alpha");
  EXPECT_DOUBLE_EQ(store->catalog()[0].duration, 12.0);
  EXPECT_EQ(store->catalog()[2].video_id, "zeta");
}

TEST(VideoStore, ContainerRoundTrip) {
  TempDir dir("store_container");
  const SyntheticVideo v(SyntheticVideoSpec::parse("synthetic:id=rt,duration=20,fps=10,width=64,height=36"));
  add_video(dir.path(), v, small_options());
  const auto store = VideoStore::load(dir.path());
  const ThumbnailContainer served = decode(store->container_bytes("rt"));
  ThumbnailContainer local = generate(v, small_options().container);
  EXPECT_EQ(served, local);
  EXPECT_THROW(store->container_bytes("nope"), NotFound);
}

TEST(VideoStore, ContainerIsSmallNextToVideo) {
  TempDir dir("store_size");
  const CatalogEntry e = add_small(dir.path(), "size", 40);
  // Deflated synthetic thumbnails stay far below the raw 43,208 bytes.
  EXPECT_LT(e.container_bytes, static_cast<std::uint64_t>(e.thumbnail_count) * (8 + 4 + 4096));
  EXPECT_LT(e.container_bytes * 10, e.declared_bytes());
}

TEST(VideoStore, SegmentCoverExamples) {
  TempDir dir("store_cover");
  add_small(dir.path(), "cov");
  const auto store = VideoStore::load(dir.path());
  const SegmentBundle one = store->segments("cov", 8, 12);
  EXPECT_EQ(one.indices, (std::vector<std::size_t>{2}));
  EXPECT_EQ(one.blobs[0], synthetic_segment_blob("cov", 2, 4 * 4096));
  const SegmentBundle two = store->segments("cov", 9, 13);
  EXPECT_EQ(two.indices, (std::vector<std::size_t>{2, 3}));
  EXPECT_DOUBLE_EQ(two.start, 8);
  EXPECT_DOUBLE_EQ(two.end, 16);
  EXPECT_THROW(store->segments("cov", 5, 5), RangeError);
  EXPECT_THROW(store->segments("cov", -1, 5), RangeError);
  EXPECT_THROW(store->segments("cov", 30, 41), RangeError);
  EXPECT_THROW(store->segments("other", 0, 1), NotFound);
}

TEST(VideoStore, CoverIsMinimalSuperset) {
  TempDir dir("store_minimal");
  const CatalogEntry e = add_small(dir.path(), "mini", 37.5);
  const auto store = VideoStore::load(dir.path());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, e.duration);
  for (int trial = 0; trial < 500; ++trial) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    const SegmentBundle got = store->segments("mini", a, b);
    std::vector<std::size_t> want;
    for (const auto& s : e.segments) {
      if (s.end > a && s.start < b) want.push_back(s.index);
    }
    ASSERT_EQ(got.indices, want);
    ASSERT_LE(got.start, a);
    ASSERT_GE(got.end, b);
  }
}

TEST(VideoStore, DamagedBlobIsDetected) {
  TempDir dir("store_damaged");
  add_small(dir.path(), "dmg");
  {
    std::fstream f(dir.path() / "dmg" / "seg_00001.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(10);
    f.put('\x42');
  }
  const auto store = VideoStore::load(dir.path());
  EXPECT_THROW(store->segments("dmg", 4, 8), DataError);
}

TEST(StatusMapping, ErrorKinds) {
  EXPECT_EQ(http_status_for(NotFound("x")), 404);
  EXPECT_EQ(http_status_for(RangeError("x")), 416);
  EXPECT_EQ(http_status_for(ConfigError("x")), 400);
  EXPECT_EQ(http_status_for(ModelError("x")), 422);
  EXPECT_EQ(http_status_for(std::runtime_error("x")), 500);
}

class VspHttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::make_unique<TempDir>("vsp_http_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    add_small(dir_->path(), "alpha");
    add_small(dir_->path(), "beta", 24);
    recorder_ = std::make_shared<RequestRecorder>();
    server_ = std::make_unique<VspServer>(dir_->path(), VspServerOptions{.threads = 32, .recorder = recorder_});
    port_ = server_->start();
    address_ = "127.0.0.1:" + std::to_string(port_);
  }
  void TearDown() override { server_->stop(); }

  std::unique_ptr<TempDir> dir_;
  std::shared_ptr<RequestRecorder> recorder_;
  std::unique_ptr<VspServer> server_;
  int port_ = 0;
  std::string address_;
};

TEST_F(VspHttpTest, CatalogDetailAndContainer) {
  HttpVspClient client(address_);
  const auto cat = client.catalog();
  ASSERT_EQ(cat.size(), 2u);
  EXPECT_EQ(cat[0].video_id, "alpha");
  const CatalogEntry detail = client.video("beta");
  EXPECT_EQ(detail.segments.size(), 6u);
  EXPECT_EQ(detail.declared_bytes(), 24u * 4096);
  EXPECT_TRUE(detail.segments[0].file.empty());
  const auto bytes = client.container("alpha");
  EXPECT_EQ(bytes, server_->store()->container_bytes("alpha"));
  EXPECT_EQ(crc32_of(bytes), cat[0].container_crc32);
  EXPECT_GT(client.bytes_received(), bytes.size());
  EXPECT_EQ(recorder_->size(), 3u);
}

TEST_F(VspHttpTest, SegmentsOverHttp) {
  HttpVspClient client(address_);
  const SegmentBundle b = client.segments("alpha", 9, 13);
  EXPECT_EQ(b.indices, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(b.start, 8.0);
  EXPECT_EQ(b.end, 16.0);
  ASSERT_EQ(b.blobs.size(), 2u);
  EXPECT_EQ(b.blobs[1], synthetic_segment_blob("alpha", 3, 4 * 4096));
  EXPECT_EQ(client.segments("alpha", 9, 13).blobs, b.blobs);  // byte-identical on repeat
}

TEST_F(VspHttpTest, ErrorStatuses) {
  HttpVspClient client(address_);
  EXPECT_THROW(client.container("ghost"), NotFound);
  EXPECT_THROW(client.segments("alpha", 10, 10), RangeError);
  EXPECT_THROW(client.segments("alpha", 0, 999), RangeError);
  EXPECT_THROW(client.container("../etc"), NotFound);
  httplib::Client raw("127.0.0.1", port_);
  auto res = raw.Get("/videos/alpha/segment?start=abc&end=3");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = raw.Get("/videos/ghost/segment?start=0&end=1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(VspHttpTest, UnreachableServerIsRetryable) {
  server_->stop();
  HttpVspClient client(address_, {.connect_timeout_ms = 200, .read_timeout_ms = 200, .retries = 1});
  try {
    client.catalog();
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_TRUE(e.retryable());
  }
}

TEST_F(VspHttpTest, ReloadSwapsCatalog) {
  HttpVspClient client(address_);
  EXPECT_EQ(client.catalog().size(), 2u);
  add_small(dir_->path(), "gamma", 8);
  EXPECT_EQ(client.catalog().size(), 2u);
  server_->reload();
  EXPECT_EQ(client.catalog().size(), 3u);
}

TEST_F(VspHttpTest, ThirtyTwoConcurrentClients) {
  const auto store = server_->store();
  std::atomic<int> mismatches{0}, failures{0};
  std::vector<std::thread> threads;
  for (int c = 0; c < 32; ++c) {
    threads.emplace_back([&, c] {
      try {
        HttpVspClient client(address_);
        const std::string id = c % 2 ? "alpha" : "beta";
        const CatalogEntry e = client.video(id);
        const auto bytes = client.container(id);
        if (crc32_of(bytes) != e.container_crc32 || decode(bytes) != decode(store->container_bytes(id))) ++mismatches;
        for (const auto& s : e.segments) {
          const SegmentBundle b = client.segments(id, s.start, s.end);
          if (b.blobs.size() != 1 || crc32_of(b.blobs[0]) != s.crc32) ++mismatches;
        }
      } catch (const std::exception&) {
        ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace evs
