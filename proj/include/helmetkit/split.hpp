// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Train/validation/test split construction, stratified per observation
// site, and the leave-site-out derivation used for untrained-site runs.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/apportion.hpp"
#include "helmetkit/error.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit {

enum class Bucket : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

inline constexpr std::array<Bucket, 3> kAllBuckets = {Bucket::kTrain, Bucket::kValidation, Bucket::kTest};

inline std::string_view bucket_name(Bucket b) {
  switch (b) {
    case Bucket::kTrain: return "train";
    case Bucket::kValidation: return "val";
    case Bucket::kTest: return "test";
  }
  return "?";
}

inline Bucket parse_bucket(std::string_view s) {
  if (s == "train") return Bucket::kTrain;
  if (s == "val" || s == "validation") return Bucket::kValidation;
  if (s == "test") return Bucket::kTest;
  throw ParseError(0, "train|val|test", "unknown bucket '" + std::string(s) + "'");
}

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

// Ratios are compared in parts per million.
inline constexpr double kRatioScale = 1e6;

inline void validate_ratios(const SplitRatios& r) {
  const std::array<double, 3> v = {r.train, r.validation, r.test};
  std::int64_t sum = 0;
  for (double x : v) {
    if (!(x >= 0) || x > 1) throw ValidationError(Rule::kInvalidRatios, "split ratios must lie in [0, 1]");
    sum += quantize(x, kRatioScale);
  }
  if (sum != static_cast<std::int64_t>(kRatioScale)) {
    throw ValidationError(Rule::kInvalidRatios, "split ratios must sum to 1");
  }
}

struct Assignment {
  std::string site_id;
  Bucket bucket;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct DatasetSplit {
  std::map<std::string, Assignment> assignment;  // clip_id -> (site, bucket)
  std::set<std::string> sites;                   // every site the split knows about
  std::set<std::string> excluded_sites;

  std::size_t count(Bucket b) const {
    return static_cast<std::size_t>(std::count_if(assignment.begin(), assignment.end(),
                                                  [b](const auto& kv) { return kv.second.bucket == b; }));
  }

  std::size_t count(std::string_view site, Bucket b) const {
    return static_cast<std::size_t>(std::count_if(assignment.begin(), assignment.end(), [&](const auto& kv) {
      return kv.second.bucket == b && kv.second.site_id == site;
    }));
  }

  std::optional<Bucket> bucket_of(const std::string& clip_id) const {
    auto it = assignment.find(clip_id);
    if (it == assignment.end()) return std::nullopt;
    return it->second.bucket;
  }

  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

// Per-site bucket sizes: largest remainder over (train, val, test), ties to
// the earlier bucket.
inline std::array<std::int64_t, 3> bucket_sizes(std::int64_t n, const SplitRatios& r) {
  const std::array<std::int64_t, 3> w = {quantize(r.train, kRatioScale), quantize(r.validation, kRatioScale),
                                         quantize(r.test, kRatioScale)};
  const auto v = largest_remainder(w, n);
  return {v[0], v[1], v[2]};
}

// Within each site, clips are shuffled with a generator seeded by `seed`
// and cut into consecutive runs of the apportioned sizes. Sites are visited
// in id order so the result depends only on (clips, ratios, seed).
inline DatasetSplit make_split(std::span<const Clip> clips, const SplitRatios& ratios, std::uint64_t seed,
                               std::span<const Site> registry = {}) {
  validate_ratios(ratios);
  if (clips.empty()) throw ValidationError(Rule::kEmptyBucket, "cannot split an empty clip list");
  std::map<std::string, std::vector<std::string>> by_site;
  for (const Clip& c : clips) by_site[c.site_id].push_back(c.clip_id);

  DatasetSplit split;
  for (const Site& s : registry) split.sites.insert(s.site_id);
  std::mt19937_64 rng(seed);
  for (auto& [site, ids] : by_site) {
    split.sites.insert(site);
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto sizes = bucket_sizes(static_cast<std::int64_t>(ids.size()), ratios);
    std::size_t k = 0;
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::int64_t j = 0; j < sizes[b]; ++j, ++k) {
        split.assignment[ids[k]] = {site, kAllBuckets[b]};
      }
    }
  }
  return split;
}

// Removes every train/validation clip of `site_id`; its test clips stay.
inline DatasetSplit leave_site_out(const DatasetSplit& split, const std::string& site_id) {
  if (!split.sites.contains(site_id)) {
    throw ValidationError(Rule::kUnknownSite, "unknown site '" + site_id + "'");
  }
  DatasetSplit out = split;
  out.excluded_sites.insert(site_id);
  std::erase_if(out.assignment, [&](const auto& kv) {
    return kv.second.site_id == site_id && kv.second.bucket != Bucket::kTest;
  });
  return out;
}

// Split file:
//   site <site_id>
//   excluded <site_id>
//   assign <clip_id> <site_id> <train|val|test>
inline std::string format_split(const DatasetSplit& split) {
  std::string out = "# helmetkit split v1\n";
  for (const auto& s : split.sites) out += "site " + s + "\n";
  for (const auto& s : split.excluded_sites) out += "excluded " + s + "\n";
  for (const auto& [clip, a] : split.assignment) {
    out += "assign " + clip + " " + a.site_id + " " + std::string(bucket_name(a.bucket)) + "\n";
  }
  return out;
}

inline DatasetSplit parse_split(std::string_view content) {
  DatasetSplit split;
  text::for_each_record(content, [&](std::string_view line, std::size_t line_no) {
    const auto f = text::split_ws(line);
    if (f[0] == "site" && f.size() == 2) {
      split.sites.insert(std::string(f[1]));
    } else if (f[0] == "excluded" && f.size() == 2) {
      split.excluded_sites.insert(std::string(f[1]));
    } else if (f[0] == "assign" && f.size() == 4) {
      Bucket b;
      try {
        b = parse_bucket(f[3]);
      } catch (const ParseError&) {
        throw ParseError(line_no, "train|val|test", text::field_error(line_no, "bucket", "unknown bucket"));
      }
      if (!split.assignment.emplace(std::string(f[1]), Assignment{std::string(f[2]), b}).second) {
        throw ValidationError(Rule::kDuplicateClipId,
                              text::field_error(line_no, "clip_id", "clip assigned twice: " + std::string(f[1])));
      }
      split.sites.insert(std::string(f[2]));
    } else {
      throw ParseError(line_no, "site|excluded|assign", text::field_error(line_no, "record", "malformed split record"));
    }
  });
  return split;
}

inline void save_split(const std::filesystem::path& path, const DatasetSplit& split) {
  text::atomic_write(path, format_split(split));
}

inline DatasetSplit load_split(const std::filesystem::path& path) { return parse_split(text::read_file(path)); }

}  // namespace helmetkit
