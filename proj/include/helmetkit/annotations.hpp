// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Sites, clips, motorcycle tracks and per-frame boxes, plus the
// line-delimited annotation file format (see docs/annotation-format.md).

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helmetkit/error.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"
#include "helmetkit/timestamp.hpp"

namespace helmetkit {

inline constexpr int kReferenceFramesPerClip = 100;
inline constexpr double kReferenceFps = 10.0;

// Pixel box, origin top-left.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  bool valid() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0 && h > 0;
  }
  double area() const { return w * h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

using TrackId = std::uint64_t;

struct Track {
  TrackId track_id = 0;
  HelmetClass cls;
  std::map<int, BoundingBox> boxes;  // frame index -> box; gaps allowed

  friend bool operator==(const Track&, const Track&) = default;
};

struct Clip {
  std::string clip_id;
  std::string site_id;
  Timestamp start{};
  double fps = kReferenceFps;
  int frame_count = kReferenceFramesPerClip;
  int width = 1920;
  int height = 1080;
  std::vector<Track> tracks;

  // Wall-clock time of a frame: start + index / fps.
  TimestampMs frame_time(int frame_index) const {
    const auto offset = std::chrono::milliseconds(std::llround(frame_index * 1000.0 / fps));
    return std::chrono::time_point_cast<std::chrono::milliseconds>(start) + offset;
  }
};

struct Site {
  std::string site_id;
  std::string city;
  double recorded_hours = 0;
};

struct ValidateOptions {
  // Require the 100-frame / 10 fps clip geometry of the source dataset.
  bool reference_conformant = false;
};

inline void validate_box(const BoundingBox& b, std::string_view where) {
  if (!b.valid()) {
    throw ValidationError(Rule::kInvalidBox, std::string(where) + ": box must be finite with w > 0 and h > 0");
  }
}

inline void validate_track(const Track& t, const Clip& clip) {
  const std::string where = "clip " + clip.clip_id + ", track " + std::to_string(t.track_id);
  if (t.boxes.empty()) throw ValidationError(Rule::kEmptyTrack, where + ": track has no boxes");
  for (const auto& [frame, box] : t.boxes) {
    if (frame < 0 || frame >= clip.frame_count) {
      throw ValidationError(Rule::kFrameIndexOutOfRange,
                            where + ": frame index out of range (" + std::to_string(frame) + " not in [0, " +
                                std::to_string(clip.frame_count) + "))");
    }
    validate_box(box, where + ", frame " + std::to_string(frame));
  }
}

inline void validate_clip(const Clip& clip, const ValidateOptions& opts = {}) {
  const std::string where = "clip " + clip.clip_id;
  if (clip.clip_id.empty() || clip.site_id.empty()) {
    throw ValidationError(Rule::kInvalidClip, where + ": clip_id and site_id must be non-empty");
  }
  if (!(clip.fps > 0) || !std::isfinite(clip.fps) || clip.frame_count <= 0 || clip.width <= 0 ||
      clip.height <= 0) {
    throw ValidationError(Rule::kInvalidClip, where + ": fps, frame_count and resolution must be positive");
  }
  if (opts.reference_conformant && (clip.frame_count != kReferenceFramesPerClip || clip.fps != kReferenceFps)) {
    throw ValidationError(Rule::kInvalidClip, where + ": expected 100 frames at 10 fps");
  }
  std::set<TrackId> seen;
  for (const Track& t : clip.tracks) {
    if (!seen.insert(t.track_id).second) {
      throw ValidationError(Rule::kDuplicateTrackId,
                            where + ": duplicate track_id " + std::to_string(t.track_id));
    }
    validate_track(t, clip);
  }
}

inline void validate_clips(std::span<const Clip> clips, const ValidateOptions& opts = {}) {
  std::set<std::string> ids;
  for (const Clip& c : clips) {
    if (!ids.insert(c.clip_id).second) {
      throw ValidationError(Rule::kDuplicateClipId, "duplicate clip_id " + c.clip_id);
    }
    validate_clip(c, opts);
  }
}

// Sorts clips by id, tracks by id. Frames are already ordered by the map.
inline void canonicalize(std::vector<Clip>& clips) {
  std::sort(clips.begin(), clips.end(), [](const Clip& a, const Clip& b) { return a.clip_id < b.clip_id; });
  for (Clip& c : clips) {
    std::sort(c.tracks.begin(), c.tracks.end(),
              [](const Track& a, const Track& b) { return a.track_id < b.track_id; });
  }
}

namespace detail {

inline std::string format_pixel(double v, std::string_view where) {
  if (v != std::floor(v) || std::fabs(v) > 1e15) {
    throw ValidationError(Rule::kInvalidBox, std::string(where) + ": annotation box coordinates must be integers");
  }
  return std::to_string(static_cast<long long>(v));
}

}  // namespace detail

inline std::string format_clip_header(const Clip& c) {
  return "clip " + c.clip_id + " " + c.site_id + " " + format_timestamp(c.start) + " " + text::format_real(c.fps) +
         " " + std::to_string(c.frame_count) + " " + std::to_string(c.width) + " " + std::to_string(c.height);
}

inline std::string format_track(const Track& t) {
  std::string line = "track " + std::to_string(t.track_id) + " " + t.cls.label;
  const std::string where = "track " + std::to_string(t.track_id);
  for (const auto& [frame, b] : t.boxes) {
    line += " " + std::to_string(frame) + ":" + detail::format_pixel(b.x, where) + ":" +
            detail::format_pixel(b.y, where) + ":" + detail::format_pixel(b.w, where) + ":" +
            detail::format_pixel(b.h, where);
  }
  return line;
}

inline std::string format_annotations(std::vector<Clip> clips) {
  canonicalize(clips);
  std::string out = "# helmetkit annotations v1\n";
  for (const Clip& c : clips) {
    out += format_clip_header(c);
    out += '\n';
    for (const Track& t : c.tracks) {
      out += format_track(t);
      out += '\n';
    }
  }
  return out;
}

namespace detail {

inline Clip parse_clip_header(const std::vector<std::string_view>& f, std::size_t line_no) {
  if (f.size() != 8) {
    throw ParseError(line_no, "clip record with 7 fields",
                     text::field_error(line_no, "clip", "expected 7 fields after 'clip', got " +
                                                             std::to_string(f.size() - 1)));
  }
  Clip c;
  c.clip_id = std::string(f[1]);
  c.site_id = std::string(f[2]);
  try {
    c.start = parse_timestamp(f[3]);
  } catch (const ParseError& e) {
    throw ParseError(line_no, "ISO-8601 timestamp", text::field_error(line_no, "start_timestamp", e.what()));
  }
  c.fps = text::parse_real(f[4], line_no, "fps");
  c.frame_count = static_cast<int>(text::parse_int(f[5], line_no, "frame_count"));
  c.width = static_cast<int>(text::parse_int(f[6], line_no, "width"));
  c.height = static_cast<int>(text::parse_int(f[7], line_no, "height"));
  return c;
}

}  // namespace detail

// Parses one track record ("track <id> <label> f:x:y:w:h ...").
inline Track parse_track(std::string_view line, std::size_t line_no = 1) {
  const auto f = text::split_ws(line);
  if (f.size() < 3 || f[0] != "track") {
    throw ParseError(line_no, "track <id> <label> <boxes...>",
                     text::field_error(line_no, "track", "malformed track record"));
  }
  Track t;
  const long long id = text::parse_int(f[1], line_no, "track_id");
  if (id < 0) throw ParseError(line_no, "non-negative track_id", text::field_error(line_no, "track_id", "negative"));
  t.track_id = static_cast<TrackId>(id);
  try {
    t.cls = parse_class(f[2]);
  } catch (const ValidationError& e) {
    throw ValidationError(Rule::kInvalidLabel, text::field_error(line_no, "class", e.what()));
  }
  for (std::size_t i = 3; i < f.size(); ++i) {
    const auto parts = text::split_char(f[i], ':');
    const std::string field = "box " + std::to_string(i - 2);
    if (parts.size() != 5) {
      throw ParseError(line_no, "frame:x:y:w:h", text::field_error(line_no, field, "expected frame:x:y:w:h"));
    }
    const int frame = static_cast<int>(text::parse_int(parts[0], line_no, field + ".frame"));
    BoundingBox b{static_cast<double>(text::parse_int(parts[1], line_no, field + ".x")),
                  static_cast<double>(text::parse_int(parts[2], line_no, field + ".y")),
                  static_cast<double>(text::parse_int(parts[3], line_no, field + ".w")),
                  static_cast<double>(text::parse_int(parts[4], line_no, field + ".h"))};
    if (!t.boxes.emplace(frame, b).second) {
      throw ParseError(line_no, "unique frame index",
                       text::field_error(line_no, field, "duplicate frame index " + std::to_string(frame)));
    }
  }
  return t;
}

inline std::vector<Track> parse_tracks(std::string_view content) {
  std::vector<Track> tracks;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    tracks.push_back(parse_track(line, line_no));
  });
  return tracks;
}

inline std::vector<Clip> parse_annotations(std::string_view content, const ValidateOptions& opts = {}) {
  std::vector<Clip> clips;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f[0] == "clip") {
      clips.push_back(detail::parse_clip_header(f, line_no));
    } else if (f[0] == "track") {
      if (clips.empty()) {
        throw ParseError(line_no, "clip record", text::field_error(line_no, "track", "track before any clip record"));
      }
      clips.back().tracks.push_back(parse_track(line, line_no));
    } else {
      throw ParseError(line_no, "clip|track",
                       text::field_error(line_no, "record", "unknown record type '" + std::string(f[0]) + "'"));
    }
  });
  validate_clips(clips, opts);
  return clips;
}

inline std::vector<Clip> load_annotations(const std::filesystem::path& path, const ValidateOptions& opts = {}) {
  return parse_annotations(text::read_file(path), opts);
}

inline void save_annotations(const std::filesystem::path& path, std::vector<Clip> clips) {
  validate_clips(clips);
  text::atomic_write(path, format_annotations(std::move(clips)));
}

inline const Clip* find_clip(std::span<const Clip> clips, std::string_view clip_id) {
  for (const Clip& c : clips) {
    if (c.clip_id == clip_id) return &c;
  }
  return nullptr;
}

struct DatasetStats {
  std::size_t clips = 0;
  std::size_t tracks = 0;
  std::size_t boxes = 0;
  std::map<std::string, std::size_t> tracks_per_class;
  std::map<std::string, std::size_t> boxes_per_class;
};

inline DatasetStats dataset_stats(std::span<const Clip> clips) {
  DatasetStats s;
  s.clips = clips.size();
  for (const Clip& c : clips) {
    for (const Track& t : c.tracks) {
      ++s.tracks;
      s.boxes += t.boxes.size();
      ++s.tracks_per_class[t.cls.label];
      s.boxes_per_class[t.cls.label] += t.boxes.size();
    }
  }
  return s;
}

// Sites file: "site_id city hours" per line.
inline std::vector<Site> parse_sites(std::string_view content) {
  std::vector<Site> sites;
  std::set<std::string> ids;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f.size() != 3) {
      throw ParseError(line_no, "site_id city hours", text::field_error(line_no, "site", "expected 3 fields"));
    }
    Site s{std::string(f[0]), std::string(f[1]), text::parse_real(f[2], line_no, "recorded_hours")};
    if (s.recorded_hours < 0) {
      throw ValidationError(Rule::kNegativeCount, text::field_error(line_no, "recorded_hours", "must be >= 0"));
    }
    if (!ids.insert(s.site_id).second) {
      throw ValidationError(Rule::kSchema, text::field_error(line_no, "site_id", "duplicate site " + s.site_id));
    }
    sites.push_back(std::move(s));
  });
  return sites;
}

inline std::vector<Site> load_sites(const std::filesystem::path& path) { return parse_sites(text::read_file(path)); }

}  // namespace helmetkit
