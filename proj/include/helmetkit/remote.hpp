// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Client for an external inference service. Wire contract:
//
//   POST <path>   multipart/form-data
//     clip_id          text field
//     frame_<index>    one file part per frame image in the batch
//   200 response body: detection-file lines for the posted frames.
//
// Transient failures (connection errors, 429, 5xx) are retried with
// exponential backoff.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <future>
#include <map>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"

#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

struct FrameRef {
  std::string clip_id;
  int frame_index = 0;
  std::filesystem::path image;
};

struct RemoteOptions {
  std::string endpoint = "http://127.0.0.1:8500";  // scheme://host:port
  std::string path = "/detect";
  std::size_t batch_size = 10;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds backoff{100};  // doubled on every retry
  std::chrono::milliseconds timeout{10000};
};

namespace detail {

inline std::string excerpt(const std::string& body, std::size_t n = 120) {
  return body.size() <= n ? body : body.substr(0, n) + "...";
}

inline std::vector<Detection> post_batch(std::span<const FrameRef> batch, const RemoteOptions& opts) {
  httplib::MultipartFormDataItems items;
  items.push_back({"clip_id", batch.front().clip_id, "", ""});
  std::set<int> requested;
  for (const FrameRef& f : batch) {
    items.push_back({"frame_" + std::to_string(f.frame_index), text::read_file(f.image), f.image.filename().string(),
                     "application/octet-stream"});
    requested.insert(f.frame_index);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opts.backoff * (1 << (attempt - 1)));
    httplib::Client client(opts.endpoint);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    auto res = client.Post(opts.path, items);
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw IoError("inference service returned HTTP " + std::to_string(res->status) + ": " + excerpt(res->body));
    }
    std::vector<Detection> dets;
    try {
      dets = parse_detections(res->body);
    } catch (const ValidationError& e) {
      throw ValidationError(e.rule(), std::string("malformed inference response: ") + e.what() + " (payload: " +
                                          excerpt(res->body) + ")");
    }
    for (const Detection& d : dets) {
      if (d.clip_id != batch.front().clip_id || !requested.contains(d.frame_index)) {
        throw ValidationError(Rule::kUnknownClip, "inference response references a frame that was not requested (" +
                                                      d.clip_id + " " + std::to_string(d.frame_index) +
                                                      ") (payload: " + excerpt(res->body) + ")");
      }
    }
    return dets;
  }
  throw IoError("inference service at " + opts.endpoint + " unreachable after " + std::to_string(opts.max_retries) +
                " retries: " + last_error);
}

}  // namespace detail

// Sends frames in per-clip batches, at most `max_in_flight` concurrently.
// The result is sorted into the canonical detection order.
inline std::vector<Detection> remote_detect(std::vector<FrameRef> frames, const RemoteOptions& opts) {
  if (opts.batch_size == 0 || opts.max_in_flight == 0 || opts.max_retries < 0) {
    throw ValidationError(Rule::kInvalidConfig, "batch size and in-flight limit must be positive");
  }
  std::stable_sort(frames.begin(), frames.end(), [](const FrameRef& a, const FrameRef& b) {
    return std::tie(a.clip_id, a.frame_index) < std::tie(b.clip_id, b.frame_index);
  });
  std::vector<std::span<const FrameRef>> batches;
  std::size_t i = 0;
  while (i < frames.size()) {
    std::size_t j = i;
    while (j < frames.size() && j - i < opts.batch_size && frames[j].clip_id == frames[i].clip_id) ++j;
    batches.emplace_back(frames.data() + i, j - i);
    i = j;
  }

  std::vector<std::vector<Detection>> results(batches.size());
  std::size_t next = 0;
  while (next < batches.size()) {
    const std::size_t end = std::min(batches.size(), next + opts.max_in_flight);
    std::vector<std::future<std::vector<Detection>>> wave;
    for (std::size_t b = next; b < end; ++b) {
      wave.push_back(std::async(std::launch::async, [&, b] { return detail::post_batch(batches[b], opts); }));
    }
    // Join every task before rethrowing so none outlives `frames`.
    std::exception_ptr first_error;
    for (std::size_t k = 0; k < wave.size(); ++k) {
      try {
        results[next + k] = wave[k].get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    next = end;
  }

  std::vector<Detection> out;
  for (auto& r : results) out.insert(out.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  sort_detections(out);
  return out;
}

}  // namespace helmetkit
