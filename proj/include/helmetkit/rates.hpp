// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Helmet-use rates over wall-clock buckets, from frame-level detections or
// from human observer counts, and their per-site comparison.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/metrics.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"
#include "helmetkit/timestamp.hpp"

namespace helmetkit {

enum class RateSource { kHuman, kMachine, kGroundTruth };

inline std::string_view source_name(RateSource s) {
  switch (s) {
    case RateSource::kHuman: return "human";
    case RateSource::kMachine: return "machine";
    case RateSource::kGroundTruth: return "ground_truth";
  }
  return "?";
}

struct RateBucket {
  Timestamp start{};
  std::int64_t duration_s = 0;
  std::int64_t riders = 0;
  std::int64_t helmeted = 0;

  // Percent; undefined when no riders were seen.
  std::optional<double> rate() const {
    if (riders <= 0) return std::nullopt;
    return 100.0 * static_cast<double>(helmeted) / static_cast<double>(riders);
  }
  Timestamp end() const { return start + std::chrono::seconds(duration_s); }
};

struct RateSeries {
  std::string site_id;
  RateSource source = RateSource::kMachine;
  std::vector<RateBucket> buckets;  // ascending, non-overlapping

  std::int64_t riders() const {
    std::int64_t n = 0;
    for (const auto& b : buckets) n += b.riders;
    return n;
  }
  std::int64_t helmeted() const {
    std::int64_t n = 0;
    for (const auto& b : buckets) n += b.helmeted;
    return n;
  }
  std::optional<double> overall_rate() const {
    const auto r = riders();
    if (r <= 0) return std::nullopt;
    return 100.0 * static_cast<double>(helmeted()) / static_cast<double>(r);
  }
};

inline constexpr std::int64_t kHourly = 3600;
inline constexpr std::int64_t kQuarterHour = 900;

enum class Weighting {
  kRider,       // every rider counts
  kMotorcycle,  // one unit per motorcycle, helmeted iff the driver is
};

struct AggregateOptions {
  double confidence_threshold = 0.5;
  double dedupe_iou = 0.5;
  std::int64_t bucket_seconds = kHourly;
  Weighting weighting = Weighting::kRider;
};

inline RiderStats weighted_stats(const RiderConfig& c, Weighting w) {
  if (w == Weighting::kMotorcycle) return {1, c.helmet(Position::kD) ? 1 : 0};
  return rider_stats(c);
}

namespace detail {

inline Timestamp bucket_floor(TimestampMs t, std::int64_t bucket_seconds) {
  const auto s = std::chrono::floor<std::chrono::seconds>(t).time_since_epoch().count();
  const auto start = s - (((s % bucket_seconds) + bucket_seconds) % bucket_seconds);
  return Timestamp(std::chrono::seconds(start));
}

using BucketMap = std::map<std::string, std::map<Timestamp, RateBucket>>;

inline std::vector<RateSeries> to_series(const BucketMap& m, RateSource source) {
  std::vector<RateSeries> out;
  for (const auto& [site, buckets] : m) {
    RateSeries s{site, source, {}};
    for (const auto& [start, b] : buckets) s.buckets.push_back(b);
    out.push_back(std::move(s));
  }
  return out;
}

inline void touch_clip_buckets(BucketMap& m, const Clip& clip, std::int64_t bucket_seconds) {
  for (int f = 0; f < clip.frame_count; ++f) {
    const Timestamp b = bucket_floor(clip.frame_time(f), bucket_seconds);
    m[clip.site_id].try_emplace(b, RateBucket{b, bucket_seconds, 0, 0});
  }
}

}  // namespace detail

// Confidence filter followed by greedy same-frame suppression: boxes are
// visited by descending confidence and dropped when their IoU with an
// already kept box exceeds `dedupe_iou`.
inline std::vector<Detection> kept_detections(std::vector<Detection> frame_dets, double confidence_threshold,
                                              double dedupe_iou) {
  std::erase_if(frame_dets, [&](const Detection& d) { return d.confidence < confidence_threshold; });
  sort_detections(frame_dets);
  std::vector<Detection> kept;
  for (Detection& d : frame_dets) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) { return iou(k.box, d.box) > dedupe_iou; });
    if (!dup) kept.push_back(std::move(d));
  }
  return kept;
}

// Machine series per site. Every bucket touched by a clip frame is present,
// with an undefined rate when nothing was counted in it.
inline std::vector<RateSeries> aggregate(std::span<const Clip> clips, std::span<const Detection> detections,
                                         const AggregateOptions& opts = {}) {
  if (opts.bucket_seconds <= 0) throw ValidationError(Rule::kInvalidConfig, "bucket length must be positive");
  validate_against_clips(detections, clips);
  std::map<std::string_view, const Clip*> index;
  for (const Clip& c : clips) index.emplace(c.clip_id, &c);

  detail::BucketMap m;
  for (const Clip& c : clips) detail::touch_clip_buckets(m, c, opts.bucket_seconds);

  std::map<std::pair<std::string_view, int>, std::vector<Detection>> frames;
  for (const Detection& d : detections) frames[{d.clip_id, d.frame_index}].push_back(d);
  for (auto& [key, dets] : frames) {
    const Clip& clip = *index.at(key.first);
    const Timestamp b = detail::bucket_floor(clip.frame_time(key.second), opts.bucket_seconds);
    RateBucket& bucket = m[clip.site_id][b];
    for (const Detection& d : kept_detections(std::move(dets), opts.confidence_threshold, opts.dedupe_iou)) {
      const RiderStats s = weighted_stats(d.cls.config, opts.weighting);
      bucket.riders += s.riders;
      bucket.helmeted += s.helmeted;
    }
  }
  return detail::to_series(m, RateSource::kMachine);
}

// The same frame-level counting applied directly to annotated boxes.
inline std::vector<RateSeries> ground_truth_series(std::span<const Clip> clips, std::int64_t bucket_seconds = kHourly,
                                                   Weighting weighting = Weighting::kRider) {
  detail::BucketMap m;
  for (const Clip& c : clips) {
    detail::touch_clip_buckets(m, c, bucket_seconds);
    for (const Track& t : c.tracks) {
      const RiderStats s = weighted_stats(t.cls.config, weighting);
      for (const auto& [f, box] : t.boxes) {
        RateBucket& b = m[c.site_id][detail::bucket_floor(c.frame_time(f), bucket_seconds)];
        b.riders += s.riders;
        b.helmeted += s.helmeted;
      }
    }
  }
  return detail::to_series(m, RateSource::kGroundTruth);
}

inline constexpr std::int64_t kHumanWindowSeconds = 900;

// Human counts: "site_id window_start helmeted unhelmeted" per line. Each
// row is one 15-minute observation window.
inline std::vector<RateSeries> human_series(std::string_view counts_content,
                                            std::int64_t window_seconds = kHumanWindowSeconds) {
  detail::BucketMap m;
  text::for_each_record(counts_content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f.size() != 4) {
      throw ParseError(line_no, "site_id window_start helmeted unhelmeted",
                       text::field_error(line_no, "counts", "expected 4 fields, got " + std::to_string(f.size())));
    }
    Timestamp start;
    try {
      start = parse_timestamp(f[1]);
    } catch (const ParseError& e) {
      throw ParseError(line_no, "ISO-8601 timestamp", text::field_error(line_no, "window_start", e.what()));
    }
    const long long with = text::parse_int(f[2], line_no, "helmeted");
    const long long without = text::parse_int(f[3], line_no, "unhelmeted");
    if (with < 0 || without < 0) {
      throw ValidationError(Rule::kNegativeCount, text::field_error(line_no, "counts", "negative count"));
    }
    auto& site = m[std::string(f[0])];
    if (!site.emplace(start, RateBucket{start, window_seconds, with + without, with}).second) {
      throw ValidationError(Rule::kSchema, text::field_error(line_no, "window_start", "duplicate window"));
    }
  });
  for (const auto& [site, buckets] : m) {
    const RateBucket* prev = nullptr;
    for (const auto& [start, b] : buckets) {
      if (prev && prev->end() > b.start) {
        throw ValidationError(Rule::kSchema, "site " + site + ": overlapping observation windows");
      }
      prev = &b;
    }
  }
  return detail::to_series(m, RateSource::kHuman);
}

struct WindowComparison {
  Timestamp start{};
  std::optional<double> human_rate;
  std::optional<double> machine_rate;
  std::optional<double> deviation;  // machine - human, percentage points
  bool flagged = false;             // |deviation| above the disagreement threshold
};

struct SiteComparison {
  std::string site_id;
  std::optional<double> human_rate;
  std::optional<double> machine_rate;
  std::optional<double> deviation;
  std::vector<WindowComparison> windows;
};

struct ComparisonReport {
  std::vector<SiteComparison> sites;
  std::optional<double> min_deviation;
  std::optional<double> max_deviation;
  std::optional<double> mean_abs_deviation;
};

struct CompareOptions {
  double flag_threshold_pp = 10.0;
};

// Aligns machine buckets to human windows by interval overlap; site rates
// are rider-weighted over the aligned windows.
inline SiteComparison compare(const RateSeries& human, const RateSeries& machine, const CompareOptions& opts = {}) {
  if (human.site_id != machine.site_id) {
    throw ValidationError(Rule::kUnknownSite, "cannot compare series of different sites (" + human.site_id + " vs " +
                                                  machine.site_id + ")");
  }
  SiteComparison out{human.site_id, {}, {}, {}, {}};
  std::int64_t h_riders = 0, h_helmeted = 0, m_riders = 0, m_helmeted = 0;
  std::set<std::size_t> used;
  bool any_overlap = false;
  for (const RateBucket& w : human.buckets) {
    std::int64_t wr = 0, wh = 0;
    bool overlap = false;
    for (std::size_t i = 0; i < machine.buckets.size(); ++i) {
      const RateBucket& mb = machine.buckets[i];
      if (mb.start < w.end() && w.start < mb.end()) {
        overlap = true;
        wr += mb.riders;
        wh += mb.helmeted;
        if (used.insert(i).second) {
          m_riders += mb.riders;
          m_helmeted += mb.helmeted;
        }
      }
    }
    WindowComparison wc{w.start, w.rate(), {}, {}, false};
    if (overlap) {
      any_overlap = true;
      h_riders += w.riders;
      h_helmeted += w.helmeted;
      if (wr > 0) wc.machine_rate = 100.0 * static_cast<double>(wh) / static_cast<double>(wr);
      if (wc.human_rate && wc.machine_rate) {
        wc.deviation = *wc.machine_rate - *wc.human_rate;
        wc.flagged = std::fabs(*wc.deviation) > opts.flag_threshold_pp;
      }
    }
    out.windows.push_back(wc);
  }
  if (!any_overlap) {
    throw ValidationError(Rule::kNoOverlap, "site " + human.site_id + ": no machine bucket overlaps a human window");
  }
  if (h_riders > 0) out.human_rate = 100.0 * static_cast<double>(h_helmeted) / static_cast<double>(h_riders);
  if (m_riders > 0) out.machine_rate = 100.0 * static_cast<double>(m_helmeted) / static_cast<double>(m_riders);
  if (out.human_rate && out.machine_rate) out.deviation = *out.machine_rate - *out.human_rate;
  return out;
}

// Compares every site present in the human series; sites without machine
// data are an error.
inline ComparisonReport compare_sites(std::span<const RateSeries> human, std::span<const RateSeries> machine,
                                      const CompareOptions& opts = {}) {
  ComparisonReport report;
  double abs_sum = 0;
  int defined = 0;
  for (const RateSeries& h : human) {
    auto it = std::find_if(machine.begin(), machine.end(), [&](const RateSeries& m) { return m.site_id == h.site_id; });
    if (it == machine.end()) {
      throw ValidationError(Rule::kNoOverlap, "site " + h.site_id + ": no machine series");
    }
    SiteComparison sc = compare(h, *it, opts);
    if (sc.deviation) {
      const double d = *sc.deviation;
      report.min_deviation = report.min_deviation ? std::min(*report.min_deviation, d) : d;
      report.max_deviation = report.max_deviation ? std::max(*report.max_deviation, d) : d;
      abs_sum += std::fabs(d);
      ++defined;
    }
    report.sites.push_back(std::move(sc));
  }
  if (defined > 0) report.mean_abs_deviation = abs_sum / defined;
  return report;
}

// True when every defined site deviation lies in [lo, hi] percentage points.
inline bool within_bounds(const ComparisonReport& r, double lo, double hi) {
  return std::all_of(r.sites.begin(), r.sites.end(), [&](const SiteComparison& s) {
    return !s.deviation || (*s.deviation >= lo && *s.deviation <= hi);
  });
}

namespace detail {
inline std::string opt_pct(const std::optional<double>& v) { return v ? text::format_fixed(*v, 2) : "--"; }
}  // namespace detail

inline std::string format_series(std::span<const RateSeries> series) {
  std::string out = "site\tsource\tbucket_start\tduration_s\triders\thelmeted\trate\n";
  for (const RateSeries& s : series) {
    for (const RateBucket& b : s.buckets) {
      out += s.site_id + "\t" + std::string(source_name(s.source)) + "\t" + format_timestamp(b.start) + "\t" +
             std::to_string(b.duration_s) + "\t" + std::to_string(b.riders) + "\t" + std::to_string(b.helmeted) +
             "\t" + detail::opt_pct(b.rate()) + "\n";
    }
  }
  return out;
}

inline std::string format_comparison(const ComparisonReport& r) {
  std::string out = "site\thuman_rate\tmachine_rate\tdeviation_pp\n";
  for (const SiteComparison& s : r.sites) {
    out += s.site_id + "\t" + detail::opt_pct(s.human_rate) + "\t" + detail::opt_pct(s.machine_rate) + "\t" +
           detail::opt_pct(s.deviation) + "\n";
  }
  out += "# min deviation: " + detail::opt_pct(r.min_deviation) + "\n";
  out += "# max deviation: " + detail::opt_pct(r.max_deviation) + "\n";
  out += "# mean absolute deviation: " + detail::opt_pct(r.mean_abs_deviation) + "\n";
  return out;
}

inline std::string format_window_comparison(const ComparisonReport& r) {
  std::string out = "site\twindow_start\thuman_rate\tmachine_rate\tdeviation_pp\tflag\n";
  for (const SiteComparison& s : r.sites) {
    for (const WindowComparison& w : s.windows) {
      out += s.site_id + "\t" + format_timestamp(w.start) + "\t" + detail::opt_pct(w.human_rate) + "\t" +
             detail::opt_pct(w.machine_rate) + "\t" + detail::opt_pct(w.deviation) + "\t" +
             (w.flagged ? "disagree" : "") + "\n";
    }
  }
  return out;
}

// Rider-weighted rate per hour of day, pooled over days.
inline std::map<int, double> hourly_profile(const RateSeries& s) {
  std::map<int, std::pair<std::int64_t, std::int64_t>> acc;
  for (const RateBucket& b : s.buckets) {
    auto& [riders, helmeted] = acc[hour_of_day(std::chrono::time_point_cast<std::chrono::milliseconds>(b.start))];
    riders += b.riders;
    helmeted += b.helmeted;
  }
  std::map<int, double> out;
  for (const auto& [h, rh] : acc) {
    if (rh.first > 0) out[h] = 100.0 * static_cast<double>(rh.second) / static_cast<double>(rh.first);
  }
  return out;
}

// SVG line chart, one panel per site: hour of day on x, percent on y, one
// polyline per source.
inline std::string render_chart(std::span<const RateSeries> series) {
  std::map<std::string, std::vector<const RateSeries*>> by_site;
  for (const RateSeries& s : series) by_site[s.site_id].push_back(&s);
  constexpr double kW = 480, kH = 200, kLeft = 50, kTop = 30, kPlotW = 400, kPlotH = 140;
  constexpr int kHourLo = 6, kHourHi = 19;
  const double total_h = kH * static_cast<double>(std::max<std::size_t>(1, by_site.size()));
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + text::format_real(kW) + "\" height=\"" +
                    text::format_real(total_h) + "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  auto x_of = [&](int hour) { return kLeft + kPlotW * (hour - kHourLo) / static_cast<double>(kHourHi - kHourLo); };
  auto y_of = [&](double pct, double top) { return top + kPlotH * (1.0 - pct / 100.0); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
  double offset = 0;
  for (const auto& [site, list] : by_site) {
    const double top = offset + kTop;
    svg += "<text x=\"" + text::format_real(kLeft) + "\" y=\"" + text::format_real(offset + 18) + "\">" + site +
           "</text>\n";
    svg += "<rect x=\"" + text::format_real(kLeft) + "\" y=\"" + text::format_real(top) + "\" width=\"" +
           text::format_real(kPlotW) + "\" height=\"" + text::format_real(kPlotH) +
           "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int h = kHourLo; h <= kHourHi; h += 2) {
      svg += "<text x=\"" + text::format_real(x_of(h) - 5) + "\" y=\"" + text::format_real(top + kPlotH + 12) +
             "\">" + std::to_string(h) + "</text>\n";
    }
    for (int p = 0; p <= 100; p += 50) {
      svg += "<text x=\"" + text::format_real(kLeft - 30) + "\" y=\"" + text::format_real(y_of(p, top) + 3) + "\">" +
             std::to_string(p) + "%</text>\n";
    }
    for (const RateSeries* s : list) {
      const char* color = colors[static_cast<int>(s->source)];
      std::string pts;
      for (const auto& [h, pct] : hourly_profile(*s)) {
        pts += text::format_fixed(x_of(h), 1) + "," + text::format_fixed(y_of(pct, top), 1) + " ";
      }
      svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" points=\"" + pts + "\">" +
             "<title>" + std::string(source_name(s->source)) + "</title></polyline>\n";
    }
    offset += kH;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace helmetkit
