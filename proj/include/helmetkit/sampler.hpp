// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Clip sampling from long recordings: cut each site's timeline into
// non-overlapping fixed-length clips, score them by detected motorcycles
// per frame, split a clip quota across sites in proportion to recorded
// hours and keep the highest-scoring clips per site.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "helmetkit/apportion.hpp"
#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

inline constexpr std::int64_t kDefaultClipLength = 100;

struct ClipCandidate {
  std::string site_id;
  std::int64_t start_frame = 0;  // global frame index in the site's recording
  double score = 0;              // mean motorcycles per frame

  friend bool operator==(const ClipCandidate&, const ClipCandidate&) = default;
};

inline std::vector<ClipCandidate> segment(std::int64_t total_frames, std::int64_t clip_len = kDefaultClipLength,
                                          const std::string& site_id = {}) {
  if (clip_len <= 0) throw ValidationError(Rule::kInvalidConfig, "clip length must be positive");
  std::vector<ClipCandidate> out;
  if (total_frames <= 0) return out;
  const std::int64_t n = total_frames / clip_len;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t k = 0; k < n; ++k) out.push_back({site_id, k * clip_len, 0.0});
  return out;
}

// Frames in a recording of `hours` at `fps`.
inline std::int64_t frames_for_hours(double hours, double fps) { return quantize(hours * 3600.0, fps); }

// Detections index the source recording: clip_id is the site id and
// frame_index is the global frame number.
inline std::vector<ClipCandidate> score(std::vector<ClipCandidate> candidates, std::span<const Detection> detections,
                                        std::int64_t clip_len = kDefaultClipLength) {
  std::map<std::pair<std::string_view, std::int64_t>, std::size_t> index;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    index.emplace(std::pair<std::string_view, std::int64_t>{candidates[i].site_id, candidates[i].start_frame}, i);
  }
  std::vector<std::int64_t> counts(candidates.size(), 0);
  for (const Detection& d : detections) {
    const std::int64_t start = (d.frame_index / clip_len) * clip_len;
    auto it = index.find({std::string_view(d.clip_id), start});
    if (it != index.end()) ++counts[it->second];
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i].score = static_cast<double>(counts[i]) / static_cast<double>(clip_len);
  }
  return candidates;
}

// Hours are weighted in milli-hour units.
inline constexpr double kHourScale = 1000.0;

// Largest-remainder split of `quota`, sites in lexicographic order for
// remainder ties.
inline std::map<std::string, std::int64_t> allocate(const std::map<std::string, double>& site_hours,
                                                    std::int64_t quota) {
  if (quota < 0) throw ValidationError(Rule::kNegativeCount, "quota must be non-negative");
  std::vector<std::int64_t> weights;
  for (const auto& [site, hours] : site_hours) {
    if (!(hours >= 0)) throw ValidationError(Rule::kNegativeCount, "recorded hours must be >= 0 for " + site);
    weights.push_back(quantize(hours, kHourScale));
  }
  std::int64_t total = 0;
  for (auto w : weights) total += w;
  if (quota > 0 && total == 0) {
    throw ValidationError(Rule::kInvalidRatios, "cannot allocate a positive quota when all sites have zero hours");
  }
  const auto seats = largest_remainder(weights, quota);
  std::map<std::string, std::int64_t> out;
  std::size_t i = 0;
  for (const auto& [site, hours] : site_hours) out[site] = seats[i++];
  return out;
}

// Top-k by score per site (ties: earliest start). Output is sorted by site
// then start_frame.
inline std::vector<ClipCandidate> select(std::span<const ClipCandidate> scored,
                                         const std::map<std::string, std::int64_t>& allocation) {
  std::map<std::string, std::vector<ClipCandidate>> by_site;
  for (const ClipCandidate& c : scored) by_site[c.site_id].push_back(c);
  std::vector<ClipCandidate> out;
  for (const auto& [site, k] : allocation) {
    if (k <= 0) continue;
    auto& pool = by_site[site];
    if (static_cast<std::int64_t>(pool.size()) < k) {
      throw ValidationError(Rule::kInsufficientCandidates,
                            "site " + site + ": needs " + std::to_string(k) + " clips but has " +
                                std::to_string(pool.size()) + " candidates (shortfall " +
                                std::to_string(k - static_cast<std::int64_t>(pool.size())) + ")");
    }
    std::stable_sort(pool.begin(), pool.end(), [](const ClipCandidate& a, const ClipCandidate& b) {
      return a.score != b.score ? a.score > b.score : a.start_frame < b.start_frame;
    });
    std::vector<ClipCandidate> chosen(pool.begin(), pool.begin() + k);
    std::sort(chosen.begin(), chosen.end(),
              [](const ClipCandidate& a, const ClipCandidate& b) { return a.start_frame < b.start_frame; });
    out.insert(out.end(), chosen.begin(), chosen.end());
  }
  return out;
}

// Drops explicitly excluded candidates, e.g. clips found unusable after
// sampling (fogged lens, parked motorcycles only).
inline std::vector<ClipCandidate> exclude(std::vector<ClipCandidate> candidates,
                                          const std::set<std::pair<std::string, std::int64_t>>& excluded) {
  std::erase_if(candidates, [&](const ClipCandidate& c) { return excluded.contains({c.site_id, c.start_frame}); });
  return candidates;
}

// Manifest: "site_id start_frame score" per line, sorted by site then start.
inline std::string format_manifest(std::vector<ClipCandidate> clips) {
  std::sort(clips.begin(), clips.end(), [](const ClipCandidate& a, const ClipCandidate& b) {
    return std::tie(a.site_id, a.start_frame) < std::tie(b.site_id, b.start_frame);
  });
  std::string out;
  for (const ClipCandidate& c : clips) {
    out += c.site_id + " " + std::to_string(c.start_frame) + " " + text::format_fixed(c.score, 6) + "\n";
  }
  return out;
}

inline std::vector<ClipCandidate> parse_manifest(std::string_view content) {
  std::vector<ClipCandidate> out;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f.size() != 3) {
      throw ParseError(line_no, "site_id start_frame score", text::field_error(line_no, "manifest", "expected 3 fields"));
    }
    out.push_back({std::string(f[0]), text::parse_int(f[1], line_no, "start_frame"),
                   text::parse_real(f[2], line_no, "score")});
  });
  return out;
}

}  // namespace helmetkit
