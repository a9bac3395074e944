// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// HTTP API over an annotation file, consumed by the browser annotation tool.
//
//   GET /api/clips                          clip header records
//   GET /api/clips/:clip/frames/:index      frame image (<frames>/<clip>/<index:06>.{jpg,png})
//   GET /api/clips/:clip/tracks             track records of one clip
//   PUT /api/clips/:clip/tracks             replace a clip's tracks (track records)
//   GET /api/taxonomy                       every class label, one per line
//   GET /api/clips/:clip/matches            TP/FP/FN per frame (needs detections)
//
// Record bodies use the annotation file syntax. Invariant violations answer
// 422 with {"rule": <id>, "message": <text>}; unknown clips/frames 404.

#pragma once

#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "helmetkit/annotations.hpp"
#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/metrics.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

class AnnotationService {
 public:
  AnnotationService(std::filesystem::path annotations_file, std::filesystem::path frames_dir,
                    std::optional<std::filesystem::path> detections_file = std::nullopt,
                    double iou_threshold = kDefaultIouThreshold)
      : store_path_(std::move(annotations_file)),
        frames_dir_(std::move(frames_dir)),
        iou_threshold_(iou_threshold) {
    if (std::filesystem::exists(store_path_)) clips_ = load_annotations(store_path_);
    canonicalize(clips_);
    if (detections_file) detections_ = load_detections(*detections_file);
  }

  void bind(httplib::Server& server) {
    server.Get("/api/clips", [this](const httplib::Request&, httplib::Response& res) {
      std::shared_lock lock(mutex_);
      std::string body;
      for (const Clip& c : clips_) body += format_clip_header(c) + "\n";
      res.set_content(body, "text/plain");
    });

    server.Get("/api/taxonomy", [](const httplib::Request&, httplib::Response& res) {
      std::string body;
      for (const HelmetClass& c : enumerate_classes(5)) body += c.label + "\n";
      res.set_content(body, "text/plain");
    });

    server.Get("/api/clips/:clip/tracks", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock lock(mutex_);
      const Clip* clip = find_clip(clips_, req.path_params.at("clip"));
      if (!clip) return not_found(res, "unknown clip");
      std::string body;
      for (const Track& t : clip->tracks) body += format_track(t) + "\n";
      res.set_content(body, "text/plain");
    });

    server.Put("/api/clips/:clip/tracks", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(put_tracks(req.path_params.at("clip"), req.body), "text/plain");
      } catch (const UnknownClip&) {
        not_found(res, "unknown clip");
      } catch (const ValidationError& e) {
        unprocessable(res, e);
      } catch (const IoError& e) {
        res.status = 500;
        res.set_content(nlohmann::json{{"rule", "io"}, {"message", e.what()}}.dump(), "application/json");
      }
    });

    server.Get("/api/clips/:clip/frames/:index", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string clip_id = req.path_params.at("clip");
      int index = -1;
      try {
        index = static_cast<int>(text::parse_int(req.path_params.at("index"), 0, "index"));
      } catch (const ParseError&) {
        return not_found(res, "unknown frame");
      }
      {
        std::shared_lock lock(mutex_);
        const Clip* clip = find_clip(clips_, clip_id);
        if (!clip) return not_found(res, "unknown clip");
        if (index < 0 || index >= clip->frame_count) return not_found(res, "unknown frame");
      }
      const auto path = frame_path(clip_id, index);
      if (!path) return not_found(res, "frame image missing");
      res.set_content(text::read_file(*path), path->extension() == ".png" ? "image/png" : "image/jpeg");
    });

    server.Get("/api/clips/:clip/matches", [this](const httplib::Request& req, httplib::Response& res) {
      std::shared_lock lock(mutex_);
      const Clip* clip = find_clip(clips_, req.path_params.at("clip"));
      if (!clip) return not_found(res, "unknown clip");
      std::string body;
      for (const FrameMatch& m : clip_matches(*clip, detections_, iou_threshold_)) {
        static constexpr const char* kinds[] = {"TP", "FP", "FN"};
        body += std::to_string(m.frame_index) + " " + kinds[static_cast<int>(m.kind)] + " " + m.label + " " +
                text::format_real(m.box.x) + " " + text::format_real(m.box.y) + " " + text::format_real(m.box.w) +
                " " + text::format_real(m.box.h) + " " + (m.track_id ? std::to_string(*m.track_id) : "-") + " " +
                (m.confidence ? text::format_fixed(*m.confidence, 6) : "-") + "\n";
      }
      res.set_content(body, "text/plain");
    });
  }

  // Validates and persists a clip's new track list; returns the canonical
  // payload. The file is rewritten atomically before memory is updated.
  std::string put_tracks(const std::string& clip_id, const std::string& body) {
    std::vector<Track> tracks = parse_tracks(body);
    std::lock_guard write_lock(write_mutex_);
    std::vector<Clip> next;
    {
      std::shared_lock lock(mutex_);
      if (!find_clip(clips_, clip_id)) throw UnknownClip{};
      next = clips_;
    }
    Clip* target = nullptr;
    for (Clip& c : next) {
      if (c.clip_id == clip_id) target = &c;
    }
    target->tracks = std::move(tracks);
    validate_clip(*target);
    canonicalize(next);
    text::atomic_write(store_path_, format_annotations(next));
    std::string payload;
    for (const Track& t : find_clip(next, clip_id)->tracks) payload += format_track(t) + "\n";
    {
      std::unique_lock lock(mutex_);
      clips_ = std::move(next);
    }
    return payload;
  }

  std::vector<Clip> snapshot() const {
    std::shared_lock lock(mutex_);
    return clips_;
  }

 private:
  struct UnknownClip {};

  std::optional<std::filesystem::path> frame_path(const std::string& clip_id, int index) const {
    char name[32];
    std::snprintf(name, sizeof name, "%06d", index);
    for (const char* ext : {".jpg", ".png"}) {
      auto p = frames_dir_ / clip_id / (std::string(name) + ext);
      if (std::filesystem::is_regular_file(p)) return p;
    }
    return std::nullopt;
  }

  static void not_found(httplib::Response& res, const std::string& what) {
    res.status = 404;
    res.set_content(nlohmann::json{{"rule", "not-found"}, {"message", what}}.dump(), "application/json");
  }

  static void unprocessable(httplib::Response& res, const ValidationError& e) {
    res.status = 422;
    res.set_content(nlohmann::json{{"rule", rule_id(e.rule())}, {"message", e.what()}}.dump(), "application/json");
  }

  std::filesystem::path store_path_;
  std::filesystem::path frames_dir_;
  double iou_threshold_;
  std::vector<Detection> detections_;
  std::vector<Clip> clips_;
  mutable std::shared_mutex mutex_;
  std::mutex write_mutex_;
};

}  // namespace helmetkit
