// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "helmetkit/remote.hpp"

#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <thread>

#include "support/tempdir.hpp"

namespace helmetkit {
namespace {

// Local inference stub on an ephemeral port.
class StubServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit StubServer(Handler handler) {
    server_.Post("/detect", [handler](const httplib::Request& req, httplib::Response& res) { handler(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// One helmeted driver per posted frame.
void echo_frames(const httplib::Request& req, httplib::Response& res) {
  const std::string clip = req.get_file_value("clip_id").content;
  std::string body;
  for (const auto& [name, file] : req.files) {
    if (name.rfind("frame_", 0) != 0) continue;
    body += clip + " " + name.substr(6) + " 10 20 30 40 DHelmet 0.900000\n";
  }
  res.set_content(body, "text/plain");
}

std::vector<FrameRef> frames(const testing::TempDir& dir, const std::string& clip, int n) {
  const auto image = dir.path() / "frame.jpg";
  text::atomic_write(image, "jpegbytes");
  std::vector<FrameRef> out;
  for (int i = 0; i < n; ++i) out.push_back({clip, i, image});
  return out;
}

RemoteOptions fast(const std::string& endpoint) {
  RemoteOptions o;
  o.endpoint = endpoint;
  o.backoff = std::chrono::milliseconds(5);
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

TEST(RemoteDetectTest, EchoesEveryFrame) {
  StubServer stub(echo_frames);
  testing::TempDir dir;
  auto input = frames(dir, "b", 25);
  const auto more = frames(dir, "a", 3);
  input.insert(input.end(), more.begin(), more.end());
  const auto dets = remote_detect(input, fast(stub.endpoint()));
  ASSERT_EQ(dets.size(), 28u);
  EXPECT_EQ(dets.front().clip_id, "a");
  EXPECT_EQ(dets.back().frame_index, 24);
  EXPECT_EQ(dets[0].cls.label, "DHelmet");
}

TEST(RemoteDetectTest, EmptyResponsesGiveNoDetections) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) { res.set_content("", "text/plain"); });
  testing::TempDir dir;
  EXPECT_TRUE(remote_detect(frames(dir, "a", 12), fast(stub.endpoint())).empty());
  EXPECT_TRUE(remote_detect({}, fast(stub.endpoint())).empty());
}

TEST(RemoteDetectTest, MalformedResponseNamesLabelAndPayload) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content("a 0 1 2 3 4 DHat 0.5\n", "text/plain");
  });
  testing::TempDir dir;
  try {
    remote_detect(frames(dir, "a", 1), fast(stub.endpoint()));
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("DHat"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("payload"), std::string::npos);
  }
}

TEST(RemoteDetectTest, RejectsFramesThatWereNotRequested) {
  StubServer stub([](const httplib::Request&, httplib::Response& res) {
    res.set_content("a 99 1 2 3 4 DHelmet 0.5\n", "text/plain");
  });
  testing::TempDir dir;
  EXPECT_THROW(remote_detect(frames(dir, "a", 2), fast(stub.endpoint())), ValidationError);
}

TEST(RemoteDetectTest, RetriesTransientFailures) {
  std::atomic<int> calls{0};
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    echo_frames(req, res);
  });
  testing::TempDir dir;
  EXPECT_EQ(remote_detect(frames(dir, "a", 4), fast(stub.endpoint())).size(), 4u);
  EXPECT_EQ(calls.load(), 3);
}

TEST(RemoteDetectTest, ClientErrorIsNotRetried) {
  std::atomic<int> calls{0};
  StubServer stub([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  testing::TempDir dir;
  EXPECT_THROW(remote_detect(frames(dir, "a", 1), fast(stub.endpoint())), IoError);
  EXPECT_EQ(calls.load(), 1);
}

TEST(RemoteDetectTest, UnreachableIsIoError) {
  // Bound but never listening: connections are refused.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), len), 0);
  ASSERT_EQ(::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len), 0);
  const int port = ntohs(addr.sin_port);
  testing::TempDir dir;
  auto opts = fast("http://127.0.0.1:" + std::to_string(port));
  opts.max_retries = 1;
  EXPECT_THROW(remote_detect(frames(dir, "a", 1), opts), IoError);
  ::close(fd);
}

TEST(RemoteDetectTest, BatchesRunConcurrently) {
  constexpr auto kLatency = std::chrono::milliseconds(150);
  std::atomic<int> in_flight{0}, peak{0};
  StubServer stub([&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(kLatency);
    echo_frames(req, res);
    --in_flight;
  });
  testing::TempDir dir;
  auto opts = fast(stub.endpoint());
  opts.batch_size = 10;
  opts.max_in_flight = 4;
  const auto t0 = std::chrono::steady_clock::now();
  const auto dets = remote_detect(frames(dir, "a", 100), opts);
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_EQ(dets.size(), 100u);
  EXPECT_LE(peak.load(), 4);
  // 10 batches: sequential would take 10 latencies; 4 in flight needs 3 waves.
  EXPECT_LT(elapsed, 10 * (kLatency + std::chrono::milliseconds(50)));
  EXPECT_LT(elapsed, 6 * kLatency);
}

TEST(RemoteDetectTest, RejectsBadOptions) {
  RemoteOptions o;
  o.batch_size = 0;
  EXPECT_THROW(remote_detect({}, o), ValidationError);
}

}  // namespace
}  // namespace helmetkit
