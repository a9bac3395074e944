// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Scored detector output: the detection file format and a ground-truth
// driven synthetic detector with controllable noise.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

struct Detection {
  std::string clip_id;
  int frame_index = 0;
  BoundingBox box;
  HelmetClass cls;
  double confidence = 0;
};

// (clip, frame, descending confidence), then box x, y, w, h and label so
// that equal-confidence detections still sort reproducibly.
inline bool detection_order(const Detection& a, const Detection& b) {
  return std::forward_as_tuple(a.clip_id, a.frame_index, b.confidence, a.box.x, a.box.y, a.box.w, a.box.h,
                               a.cls.label) <
         std::forward_as_tuple(b.clip_id, b.frame_index, a.confidence, b.box.x, b.box.y, b.box.w, b.box.h,
                               b.cls.label);
}

inline void sort_detections(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(), detection_order);
}

inline void validate_detection(const Detection& d, std::string_view where) {
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw ValidationError(Rule::kConfidenceOutOfRange,
                          std::string(where) + ": confidence " + text::format_real(d.confidence) + " not in [0, 1]");
  }
  if (d.frame_index < 0) {
    throw ValidationError(Rule::kFrameIndexOutOfRange, std::string(where) + ": frame index out of range");
  }
  validate_box(d.box, where);
}

// Checks clip membership and frame range against loaded annotations.
inline void validate_against_clips(std::span<const Detection> dets, std::span<const Clip> clips) {
  std::map<std::string_view, const Clip*> index;
  for (const Clip& c : clips) index.emplace(c.clip_id, &c);
  for (const Detection& d : dets) {
    auto it = index.find(d.clip_id);
    if (it == index.end()) {
      throw ValidationError(Rule::kUnknownClip, "detection references unknown clip '" + d.clip_id + "'");
    }
    if (d.frame_index < 0 || d.frame_index >= it->second->frame_count) {
      throw ValidationError(Rule::kFrameIndexOutOfRange,
                            "detection in clip " + d.clip_id + ": frame index out of range (" +
                                std::to_string(d.frame_index) + ")");
    }
  }
}

inline std::string format_detection(const Detection& d) {
  return d.clip_id + " " + std::to_string(d.frame_index) + " " + text::format_real(d.box.x) + " " +
         text::format_real(d.box.y) + " " + text::format_real(d.box.w) + " " + text::format_real(d.box.h) + " " +
         d.cls.label + " " + text::format_fixed(d.confidence, 6);
}

inline Detection parse_detection(std::string_view line, std::size_t line_no) {
  const auto f = text::split_ws(line);
  if (f.size() != 8) {
    throw ParseError(line_no, "clip_id frame x y w h label confidence",
                     text::field_error(line_no, "detection", "expected 8 fields, got " + std::to_string(f.size())));
  }
  Detection d;
  d.clip_id = std::string(f[0]);
  d.frame_index = static_cast<int>(text::parse_int(f[1], line_no, "frame_index"));
  d.box = {text::parse_real(f[2], line_no, "x"), text::parse_real(f[3], line_no, "y"),
           text::parse_real(f[4], line_no, "w"), text::parse_real(f[5], line_no, "h")};
  try {
    d.cls = parse_class(f[6]);
  } catch (const ValidationError& e) {
    throw ValidationError(Rule::kInvalidLabel,
                          text::field_error(line_no, "class", "non-canonical class label '" + std::string(f[6]) +
                                                                  "': " + e.what()));
  }
  d.confidence = text::parse_real(f[7], line_no, "confidence");
  validate_detection(d, "line " + std::to_string(line_no));
  return d;
}

inline std::vector<Detection> parse_detections(std::string_view content) {
  std::vector<Detection> dets;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    dets.push_back(parse_detection(line, line_no));
  });
  sort_detections(dets);
  return dets;
}

inline std::string format_detections(std::vector<Detection> dets) {
  sort_detections(dets);
  std::string out = "# helmetkit detections v1\n";
  for (const Detection& d : dets) {
    out += format_detection(d);
    out += '\n';
  }
  return out;
}

inline std::vector<Detection> load_detections(const std::filesystem::path& path) {
  return parse_detections(text::read_file(path));
}

inline void save_detections(const std::filesystem::path& path, std::vector<Detection> dets) {
  text::atomic_write(path, format_detections(std::move(dets)));
}

struct NoiseProfile {
  double jitter_sigma = 0;     // pixels, added to each box corner
  double miss_rate = 0;        // P(ground-truth box dropped)
  double fp_rate = 0;          // expected spurious boxes per frame (Poisson)
  double class_confusion = 0;  // P(label replaced by a different class)
  double confidence_spread = 0;  // true detections score 1 - U(0, spread)
  std::uint64_t rng_seed = 0;
};

inline void validate_profile(const NoiseProfile& p) {
  auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!prob(p.miss_rate) || !prob(p.class_confusion) || !prob(p.confidence_spread) || !(p.jitter_sigma >= 0) ||
      !(p.fp_rate >= 0) || !std::isfinite(p.jitter_sigma) || !std::isfinite(p.fp_rate)) {
    throw ValidationError(Rule::kInvalidConfig, "noise profile: probabilities must lie in [0, 1], rates >= 0");
  }
}

// Detections derived from ground truth. An all-zero profile reproduces every
// annotated box exactly with confidence 1.0.
inline std::vector<Detection> synth_detect(std::span<const Clip> clips, const NoiseProfile& profile) {
  validate_profile(profile);
  std::mt19937_64 rng(profile.rng_seed);
  std::bernoulli_distribution miss(profile.miss_rate);
  std::bernoulli_distribution confuse(profile.class_confusion);
  std::normal_distribution<double> jitter(0.0, profile.jitter_sigma > 0 ? profile.jitter_sigma : 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  static const std::vector<HelmetClass> all_classes = enumerate_classes(static_cast<int>(kPositionCount));
  auto random_class = [&](const std::string* exclude) -> const HelmetClass& {
    if (!exclude) return all_classes[std::uniform_int_distribution<std::size_t>(0, all_classes.size() - 1)(rng)];
    std::size_t skip = all_classes.size();
    for (std::size_t i = 0; i < all_classes.size(); ++i) {
      if (all_classes[i].label == *exclude) skip = i;
    }
    std::size_t k = std::uniform_int_distribution<std::size_t>(0, all_classes.size() - 2)(rng);
    if (k >= skip) ++k;
    return all_classes[k];
  };

  std::vector<const Clip*> ordered;
  for (const Clip& c : clips) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const Clip* a, const Clip* b) { return a->clip_id < b->clip_id; });

  std::vector<Detection> out;
  for (const Clip* clip : ordered) {
    std::vector<const Track*> tracks;
    for (const Track& t : clip->tracks) tracks.push_back(&t);
    std::sort(tracks.begin(), tracks.end(), [](const Track* a, const Track* b) { return a->track_id < b->track_id; });

    for (int frame = 0; frame < clip->frame_count; ++frame) {
      for (const Track* t : tracks) {
        auto it = t->boxes.find(frame);
        if (it == t->boxes.end()) continue;
        if (miss(rng)) continue;
        Detection d{clip->clip_id, frame, it->second, t->cls, 1.0};
        if (profile.jitter_sigma > 0) {
          double x1 = d.box.x + jitter(rng), y1 = d.box.y + jitter(rng);
          double x2 = d.box.x + d.box.w + jitter(rng), y2 = d.box.y + d.box.h + jitter(rng);
          if (x2 - x1 < 1.0) x2 = x1 + 1.0;
          if (y2 - y1 < 1.0) y2 = y1 + 1.0;
          d.box = {x1, y1, x2 - x1, y2 - y1};
        }
        if (confuse(rng)) d.cls = random_class(&t->cls.label);
        if (profile.confidence_spread > 0) d.confidence = 1.0 - profile.confidence_spread * unit(rng);
        out.push_back(std::move(d));
      }
      if (profile.fp_rate > 0) {
        const int n = std::poisson_distribution<int>(profile.fp_rate)(rng);
        for (int k = 0; k < n; ++k) {
          const double w = clip->width * (0.05 + 0.15 * unit(rng));
          const double h = clip->height * (0.05 + 0.15 * unit(rng));
          const BoundingBox box{(clip->width - w) * unit(rng), (clip->height - h) * unit(rng), w, h};
          const HelmetClass& cls = random_class(nullptr);
          out.push_back({clip->clip_id, frame, box, cls, unit(rng)});
        }
      }
    }
  }
  sort_detections(out);
  return out;
}

}  // namespace helmetkit
