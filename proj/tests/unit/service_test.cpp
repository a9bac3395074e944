// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "helmetkit/service.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "support/fixtures.hpp"
#include "support/tempdir.hpp"

namespace helmetkit {
namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    clips_ = testing::make_dataset({.sites = {"SiteA"}, .clips_per_site = 2});
    save_annotations(dir_ / "ann.txt", clips_);
    save_detections(dir_ / "det.txt", synth_detect(clips_, {}));
    std::filesystem::create_directories(dir_ / "frames" / clips_[0].clip_id);
    text::atomic_write(dir_ / "frames" / clips_[0].clip_id / "000007.jpg", "JPEGDATA");
    service_ = std::make_unique<AnnotationService>(dir_ / "ann.txt", dir_ / "frames", dir_ / "det.txt");
    service_->bind(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  std::string clip_id(int i) const { return clips_[static_cast<std::size_t>(i)].clip_id; }

  testing::TempDir dir_;
  std::vector<Clip> clips_;
  std::unique_ptr<AnnotationService> service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(ServiceTest, ListsClipsAndTaxonomy) {
  auto c = client();
  auto res = c.Get("/api/clips");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, format_clip_header(clips_[0]) + "\n" + format_clip_header(clips_[1]) + "\n");
  res = c.Get("/api/taxonomy");
  ASSERT_TRUE(res);
  EXPECT_EQ(std::count(res->body.begin(), res->body.end(), '\n'), 90);
  EXPECT_EQ(res->body.rfind("DHelmet\n", 0), 0u);
}

TEST_F(ServiceTest, PutThenGetIsByteIdentical) {
  auto c = client();
  const std::string body = "track 3 DHelmetP1NoHelmet 0:10:20:30:40 1:11:20:30:40\ntrack 1 DNoHelmet 5:1:2:3:4\n";
  auto put = c.Put("/api/clips/" + clip_id(0) + "/tracks", body, "text/plain");
  ASSERT_TRUE(put);
  ASSERT_EQ(put->status, 200) << put->body;
  auto get = c.Get("/api/clips/" + clip_id(0) + "/tracks");
  ASSERT_TRUE(get);
  EXPECT_EQ(get->body, put->body);
  EXPECT_EQ(get->body, "track 1 DNoHelmet 5:1:2:3:4\ntrack 3 DHelmetP1NoHelmet 0:10:20:30:40 1:11:20:30:40\n");
  // persisted to disk
  const auto reloaded = load_annotations(dir_ / "ann.txt");
  ASSERT_EQ(find_clip(reloaded, clip_id(0))->tracks.size(), 2u);
  EXPECT_EQ(find_clip(reloaded, clip_id(1))->tracks, clips_[1].tracks);
}

TEST_F(ServiceTest, InvalidPutIsRejectedAndNothingChanges) {
  auto c = client();
  const std::string before = text::read_file(dir_ / "ann.txt");
  auto res = c.Put("/api/clips/" + clip_id(0) + "/tracks", "track 1 DHelmet 100:0:0:10:10\n", "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  const auto j = nlohmann::json::parse(res->body);
  EXPECT_EQ(j["rule"], "frame-index-out-of-range");
  EXPECT_NE(j["message"].get<std::string>().find("frame index out of range"), std::string::npos);
  EXPECT_EQ(text::read_file(dir_ / "ann.txt"), before);

  res = c.Put("/api/clips/" + clip_id(0) + "/tracks", "track 1 DHelmetP2Helmet 1:0:0:10:10\n", "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  res = c.Put("/api/clips/" + clip_id(0) + "/tracks", "track x\n", "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(text::read_file(dir_ / "ann.txt"), before);
}

TEST_F(ServiceTest, UnknownResourcesAre404) {
  auto c = client();
  EXPECT_EQ(c.Get("/api/clips/nope/tracks")->status, 404);
  EXPECT_EQ(c.Put("/api/clips/nope/tracks", "", "text/plain")->status, 404);
  EXPECT_EQ(c.Get("/api/clips/" + clip_id(0) + "/frames/100")->status, 404);
  EXPECT_EQ(c.Get("/api/clips/" + clip_id(0) + "/frames/8")->status, 404);  // no image on disk
  EXPECT_EQ(c.Get("/api/clips/" + clip_id(0) + "/frames/abc")->status, 404);
}

TEST_F(ServiceTest, ServesFrameImages) {
  auto res = client().Get("/api/clips/" + clip_id(0) + "/frames/7");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "JPEGDATA");
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/jpeg");
}

TEST_F(ServiceTest, MatchesOverlay) {
  auto res = client().Get("/api/clips/" + clip_id(0) + "/matches");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  std::size_t boxes = 0;
  for (const Track& t : clips_[0].tracks) boxes += t.boxes.size();
  EXPECT_EQ(static_cast<std::size_t>(std::count(res->body.begin(), res->body.end(), '\n')), boxes);
  EXPECT_EQ(res->body.find(" FP "), std::string::npos);
  EXPECT_EQ(res->body.find(" FN "), std::string::npos);
}

TEST_F(ServiceTest, ConcurrentPutsToDifferentClipsBothPersist) {
  for (int round = 0; round < 10; ++round) {
    std::thread a([&] {
      auto c = client();
      EXPECT_EQ(c.Put("/api/clips/" + clip_id(0) + "/tracks", "track 9 DHelmet 1:0:0:10:10\n", "text/plain")->status,
                200);
    });
    std::thread b([&] {
      auto c = client();
      EXPECT_EQ(c.Put("/api/clips/" + clip_id(1) + "/tracks", "track 8 DNoHelmet 2:0:0:10:10\n", "text/plain")->status,
                200);
    });
    a.join();
    b.join();
    const auto on_disk = load_annotations(dir_ / "ann.txt");
    EXPECT_EQ(find_clip(on_disk, clip_id(0))->tracks.at(0).track_id, 9u);
    EXPECT_EQ(find_clip(on_disk, clip_id(1))->tracks.at(0).track_id, 8u);
    // reset for the next round
    service_->put_tracks(clip_id(0), "");
    service_->put_tracks(clip_id(1), "");
  }
}

}  // namespace
}  // namespace helmetkit
