// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Detection accuracy: IoU, greedy ground-truth matching at an overlap
// threshold, all-point interpolated average precision per class, and the
// instance-count weighted mean over classes.

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/detections.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/split.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

inline constexpr double kDefaultIouThreshold = 0.5;

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::min(1.0, inter / uni) : 0.0;
}

// One annotated box in a frame.
struct GtBox {
  TrackId track_id = 0;
  BoundingBox box;
  std::string label;
};

struct DetectionOutcome {
  std::size_t detection = 0;  // index into the matched detection list
  bool true_positive = false;
  std::optional<TrackId> matched_track;
  double iou = 0;
};

struct MatchResult {
  std::vector<DetectionOutcome> detections;  // in matching order
  std::vector<bool> gt_matched;              // parallel to the ground-truth input
  double iou_threshold = kDefaultIouThreshold;

  std::size_t tp() const {
    return static_cast<std::size_t>(
        std::count_if(detections.begin(), detections.end(), [](const auto& o) { return o.true_positive; }));
  }
  std::size_t fp() const { return detections.size() - tp(); }
  std::size_t fn() const {
    return static_cast<std::size_t>(std::count(gt_matched.begin(), gt_matched.end(), false));
  }
};

// Greedy matching within one frame. Detections of `label` are processed in
// descending confidence; each takes the unmatched ground-truth box of the
// same label with the highest IoU >= threshold (ties: lowest track_id).
// Items of other labels are ignored; their gt_matched entries stay false
// and are not counted by fn() callers that filter by label.
inline MatchResult match(std::span<const GtBox> gt, std::span<const Detection> detections, std::string_view label,
                         double iou_threshold = kDefaultIouThreshold) {
  MatchResult result;
  result.iou_threshold = iou_threshold;
  result.gt_matched.assign(gt.size(), false);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (detections[i].cls.label == label) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detection_order(detections[a], detections[b]);
  });

  for (std::size_t di : order) {
    const Detection& d = detections[di];
    std::optional<std::size_t> best;
    double best_iou = 0;
    for (std::size_t gi = 0; gi < gt.size(); ++gi) {
      if (result.gt_matched[gi] || gt[gi].label != label) continue;
      const double v = iou(d.box, gt[gi].box);
      if (v < iou_threshold) continue;
      if (!best || v > best_iou || (v == best_iou && gt[gi].track_id < gt[*best].track_id)) {
        best = gi;
        best_iou = v;
      }
    }
    DetectionOutcome o{di, false, std::nullopt, best_iou};
    if (best) {
      result.gt_matched[*best] = true;
      o.true_positive = true;
      o.matched_track = gt[*best].track_id;
    }
    result.detections.push_back(o);
  }
  return result;
}

// A detection's contribution to its class's PR sweep. The tie key orders
// equal-confidence detections by (clip, frame, box).
struct ScoredOutcome {
  double confidence = 0;
  bool true_positive = false;
  std::string clip_id;
  int frame_index = 0;
  BoundingBox box;
};

inline bool sweep_order(const ScoredOutcome& a, const ScoredOutcome& b) {
  return std::forward_as_tuple(b.confidence, a.clip_id, a.frame_index, a.box.x, a.box.y, a.box.w, a.box.h) <
         std::forward_as_tuple(a.confidence, b.clip_id, b.frame_index, b.box.x, b.box.y, b.box.w, b.box.h);
}

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

using PrCurve = std::vector<PrPoint>;

// One point per detection, in descending-confidence order.
inline PrCurve pr_curve(std::vector<ScoredOutcome> outcomes, std::size_t num_gt) {
  std::stable_sort(outcomes.begin(), outcomes.end(), sweep_order);
  PrCurve curve;
  curve.reserve(outcomes.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    if (outcomes[k].true_positive) ++tp;
    const double recall = num_gt ? static_cast<double>(tp) / static_cast<double>(num_gt) : 0.0;
    curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(k + 1)});
  }
  return curve;
}

// All-point interpolated AP: the area under p_interp(r) = max precision at
// recall >= r. Undefined (nullopt) when the class has no ground truth.
inline std::optional<double> average_precision(std::vector<ScoredOutcome> outcomes, std::size_t num_gt) {
  if (num_gt == 0) return std::nullopt;
  const PrCurve curve = pr_curve(std::move(outcomes), num_gt);
  std::vector<double> envelope(curve.size());
  double running = 0;
  for (std::size_t k = curve.size(); k-- > 0;) {
    running = std::max(running, curve[k].precision);
    envelope[k] = running;
  }
  double ap = 0;
  double prev_recall = 0;
  for (std::size_t k = 0; k < curve.size(); ++k) {
    if (curve[k].recall > prev_recall) {
      ap += (curve[k].recall - prev_recall) * envelope[k];
      prev_recall = curve[k].recall;
    }
  }
  return std::clamp(ap, 0.0, 1.0);
}

struct ClassAp {
  std::optional<double> ap;
  double count = 0;  // instance weight, e.g. ground-truth boxes in the bucket
};

// Sum(count_i * AP_i) / Sum(count_i) over classes with a defined AP.
inline double weighted_map(std::span<const ClassAp> classes) {
  double num = 0, den = 0;
  for (const ClassAp& c : classes) {
    if (!c.ap) continue;
    if (c.count < 0) throw ValidationError(Rule::kNegativeCount, "class instance counts must be non-negative");
    num += c.count * *c.ap;
    den += c.count;
  }
  if (den <= 0) throw ValidationError(Rule::kNoDefinedClasses, "weighted mAP needs at least one class with defined AP");
  return std::clamp(num / den, 0.0, 1.0);
}

// Restriction of the class set used for a secondary weighted mAP.
struct ClassSubset {
  enum class Kind { kAll, kMaxTwoRiders, kList };
  Kind kind = Kind::kAll;
  std::set<std::string> labels;

  // kMaxTwoRiders: at most two riders and nobody in front of the driver.
  bool contains(const HelmetClass& c) const {
    switch (kind) {
      case Kind::kAll: return true;
      case Kind::kMaxTwoRiders: return c.config.size() <= 2 && !c.config.has(Position::kP0);
      case Kind::kList: return labels.contains(c.label);
    }
    return false;
  }

  std::string name() const {
    switch (kind) {
      case Kind::kAll: return "all";
      case Kind::kMaxTwoRiders: return "max2riders";
      case Kind::kList: {
        std::string s;
        for (const auto& l : labels) s += (s.empty() ? "" : ",") + l;
        return s;
      }
    }
    return "";
  }
};

inline ClassSubset parse_class_subset(std::string_view text_spec) {
  if (text_spec.empty() || text_spec == "all") return {};
  if (text_spec == "max2riders") return {ClassSubset::Kind::kMaxTwoRiders, {}};
  ClassSubset s{ClassSubset::Kind::kList, {}};
  for (std::string_view part : text::split_char(text_spec, ',')) {
    s.labels.insert(parse_class(part).label);
  }
  return s;
}

struct ClassResult {
  HelmetClass cls;
  std::optional<double> ap;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  std::size_t tp = 0;
};

struct ApReport {
  std::vector<ClassResult> classes;  // by rider count, then label
  double weighted_map = 0;
  ClassSubset subset;
  std::optional<double> subset_weighted_map;  // set when subset is not "all"
  double iou_threshold = kDefaultIouThreshold;
};

inline void sort_class_results(std::vector<ClassResult>& rs) {
  std::sort(rs.begin(), rs.end(), [](const ClassResult& a, const ClassResult& b) {
    const int na = a.cls.config.size(), nb = b.cls.config.size();
    return na != nb ? na < nb : a.cls.label < b.cls.label;
  });
}

inline void finish_report(ApReport& report) {
  sort_class_results(report.classes);
  std::vector<ClassAp> all, sub;
  for (const ClassResult& r : report.classes) {
    all.push_back({r.ap, static_cast<double>(r.gt_count)});
    if (report.subset.contains(r.cls)) sub.push_back({r.ap, static_cast<double>(r.gt_count)});
  }
  report.weighted_map = weighted_map(all);
  if (report.subset.kind != ClassSubset::Kind::kAll) report.subset_weighted_map = weighted_map(sub);
}

struct EvalOptions {
  double iou_threshold = kDefaultIouThreshold;
  ClassSubset subset;
};

// Evaluates detections against the ground truth of the selected clips
// (`split` + `bucket`, or every clip when no split is given).
inline ApReport evaluate(std::span<const Clip> clips, std::span<const Detection> detections,
                         const DatasetSplit* split, std::optional<Bucket> bucket, const EvalOptions& opts = {}) {
  validate_against_clips(detections, clips);
  std::map<std::string_view, const Clip*> selected;
  for (const Clip& c : clips) {
    if (split && bucket) {
      auto b = split->bucket_of(c.clip_id);
      if (!b || *b != *bucket) continue;
    }
    selected.emplace(c.clip_id, &c);
  }
  if (selected.empty()) throw ValidationError(Rule::kEmptyBucket, "no clips in the selected bucket");

  struct Frame {
    std::vector<GtBox> gt;
    std::vector<Detection> dets;
  };
  std::map<std::pair<std::string_view, int>, Frame> frames;
  std::map<std::string, ClassResult> per_class;
  for (const auto& [id, clip] : selected) {
    for (const Track& t : clip->tracks) {
      auto& cr = per_class.try_emplace(t.cls.label, ClassResult{t.cls, std::nullopt}).first->second;
      for (const auto& [f, box] : t.boxes) {
        frames[{id, f}].gt.push_back({t.track_id, box, t.cls.label});
        ++cr.gt_count;
      }
    }
  }
  for (const Detection& d : detections) {
    auto it = selected.find(d.clip_id);
    if (it == selected.end()) continue;
    frames[{it->first, d.frame_index}].dets.push_back(d);
    auto& cr = per_class.try_emplace(d.cls.label, ClassResult{d.cls, std::nullopt}).first->second;
    ++cr.detection_count;
  }

  std::map<std::string, std::vector<ScoredOutcome>> sweeps;
  for (const auto& [key, frame] : frames) {
    std::set<std::string> labels;
    for (const Detection& d : frame.dets) labels.insert(d.cls.label);
    for (const std::string& label : labels) {
      const MatchResult m = match(frame.gt, frame.dets, label, opts.iou_threshold);
      auto& sweep = sweeps[label];
      for (const DetectionOutcome& o : m.detections) {
        const Detection& d = frame.dets[o.detection];
        sweep.push_back({d.confidence, o.true_positive, d.clip_id, d.frame_index, d.box});
      }
    }
  }

  ApReport report;
  report.subset = opts.subset;
  report.iou_threshold = opts.iou_threshold;
  for (auto& [label, cr] : per_class) {
    auto& sweep = sweeps[label];
    cr.tp = static_cast<std::size_t>(
        std::count_if(sweep.begin(), sweep.end(), [](const ScoredOutcome& s) { return s.true_positive; }));
    cr.ap = average_precision(std::move(sweep), cr.gt_count);
    report.classes.push_back(std::move(cr));
  }
  finish_report(report);
  return report;
}

// Replay input: "label count ap_percent" per line; ap "--" means undefined.
struct ReplayEntry {
  HelmetClass cls;
  std::size_t count = 0;
  std::optional<double> ap;  // fraction in [0, 1]
};

inline std::vector<ReplayEntry> parse_replay(std::string_view content) {
  std::vector<ReplayEntry> out;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f.size() != 3) {
      throw ParseError(line_no, "label count ap", text::field_error(line_no, "replay", "expected 3 fields"));
    }
    ReplayEntry e{parse_class(f[0]), 0, std::nullopt};
    const long long n = text::parse_int(f[1], line_no, "count");
    if (n < 0) throw ValidationError(Rule::kNegativeCount, text::field_error(line_no, "count", "negative count"));
    e.count = static_cast<std::size_t>(n);
    if (f[2] != "--") {
      const double ap = text::parse_real(f[2], line_no, "ap");
      if (ap < 0 || ap > 100) throw ValidationError(Rule::kSchema, text::field_error(line_no, "ap", "not in [0, 100]"));
      e.ap = ap / 100.0;
    }
    out.push_back(std::move(e));
  });
  return out;
}

inline ApReport replay_report(std::span<const ReplayEntry> entries, const ClassSubset& subset = {}) {
  ApReport report;
  report.subset = subset;
  for (const ReplayEntry& e : entries) {
    ClassResult r{e.cls, std::nullopt};
    r.ap = e.ap;
    r.gt_count = e.count;
    report.classes.push_back(std::move(r));
  }
  finish_report(report);
  return report;
}

// Frame-level counts per bucket: train, val, test, overall; plus tracks.
struct BucketCounts {
  std::array<std::size_t, 4> frames{};
  std::size_t tracks = 0;
};

inline std::map<std::string, BucketCounts> bucket_counts(std::span<const Clip> clips, const DatasetSplit& split) {
  std::map<std::string, BucketCounts> out;
  for (const Clip& c : clips) {
    const auto b = split.bucket_of(c.clip_id);
    for (const Track& t : c.tracks) {
      auto& bc = out[t.cls.label];
      ++bc.tracks;
      if (b) bc.frames[static_cast<std::size_t>(*b)] += t.boxes.size();
      bc.frames[3] += t.boxes.size();
    }
  }
  return out;
}

inline std::string position_marks(const RiderConfig& c) {
  std::string s;
  for (Position p : {Position::kD, Position::kP1, Position::kP2, Position::kP3, Position::kP0}) {
    s += '\t';
    s += !c.has(p) ? "-" : (c.helmet(p) ? "+" : "x");
  }
  return s;
}

// Tab-separated table: class, position marks (D P1 P2 P3 P0; '+' helmet,
// 'x' no helmet, '-' absent), per-bucket counts when available, AP (%).
inline std::string format_ap_report(const ApReport& report,
                                    const std::map<std::string, BucketCounts>* counts = nullptr) {
  std::string out = "class\tD\tP1\tP2\tP3\tP0";
  out += counts ? "\ttracks\ttrain\tval\ttest\toverall" : "\tinstances";
  out += "\tdetections\tAP\n";
  for (const ClassResult& r : report.classes) {
    out += r.cls.label + position_marks(r.cls.config);
    if (counts) {
      BucketCounts bc;
      if (auto it = counts->find(r.cls.label); it != counts->end()) bc = it->second;
      out += "\t" + std::to_string(bc.tracks);
      for (std::size_t v : bc.frames) out += "\t" + std::to_string(v);
    } else {
      out += "\t" + std::to_string(r.gt_count);
    }
    out += "\t" + std::to_string(r.detection_count);
    out += "\t" + (r.ap ? text::format_fixed(*r.ap * 100.0, 1) : std::string("--")) + "\n";
  }
  out += "# weighted mAP: " + text::format_fixed(report.weighted_map * 100.0, 1) + "\n";
  if (report.subset_weighted_map) {
    out += "# weighted mAP (" + report.subset.name() + "): " +
           text::format_fixed(*report.subset_weighted_map * 100.0, 1) + "\n";
  }
  return out;
}

// Per-frame TP/FP/FN listing for one clip, used by the review overlay.
struct FrameMatch {
  enum class Kind { kTruePositive, kFalsePositive, kFalseNegative };
  int frame_index = 0;
  Kind kind = Kind::kFalseNegative;
  BoundingBox box;
  std::string label;
  std::optional<TrackId> track_id;
  std::optional<double> confidence;
};

inline std::vector<FrameMatch> clip_matches(const Clip& clip, std::span<const Detection> detections,
                                            double iou_threshold = kDefaultIouThreshold) {
  std::map<int, std::vector<GtBox>> gt;
  std::map<int, std::vector<Detection>> dets;
  for (const Track& t : clip.tracks) {
    for (const auto& [f, box] : t.boxes) gt[f].push_back({t.track_id, box, t.cls.label});
  }
  for (const Detection& d : detections) {
    if (d.clip_id == clip.clip_id) dets[d.frame_index].push_back(d);
  }
  std::set<int> frame_ids;
  for (const auto& kv : gt) frame_ids.insert(kv.first);
  for (const auto& kv : dets) frame_ids.insert(kv.first);

  std::vector<FrameMatch> out;
  for (int f : frame_ids) {
    const auto& g = gt[f];
    const auto& d = dets[f];
    std::vector<bool> covered(g.size(), false);
    std::set<std::string> labels;
    for (const auto& x : d) labels.insert(x.cls.label);
    for (const auto& label : labels) {
      const MatchResult m = match(g, d, label, iou_threshold);
      for (std::size_t i = 0; i < g.size(); ++i) covered[i] = covered[i] || m.gt_matched[i];
      for (const auto& o : m.detections) {
        const Detection& det = d[o.detection];
        out.push_back({f, o.true_positive ? FrameMatch::Kind::kTruePositive : FrameMatch::Kind::kFalsePositive,
                       det.box, det.cls.label, o.matched_track, det.confidence});
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!covered[i]) out.push_back({f, FrameMatch::Kind::kFalseNegative, g[i].box, g[i].label, g[i].track_id, {}});
    }
  }
  return out;
}

}  // namespace helmetkit
