// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic annotated datasets for tests. Each track owns a horizontal lane
// so boxes of one frame never overlap.

#pragma once

#include <chrono>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/taxonomy.hpp"
#include "helmetkit/text_io.hpp"

namespace helmetkit::testing {

inline std::string data_path(const std::string& name) { return std::string(HELMETKIT_DATA_DIR) + "/" + name; }

struct DatasetShape {
  std::vector<std::string> sites = {"SiteA", "SiteB"};
  int clips_per_site = 4;
  int max_tracks_per_clip = 6;
  std::vector<std::string> labels;  // empty: every class with up to 3 riders
  std::uint64_t seed = 1;
};

inline std::vector<Clip> make_dataset(const DatasetShape& shape) {
  std::mt19937_64 rng(shape.seed);
  std::vector<HelmetClass> classes;
  if (shape.labels.empty()) {
    classes = enumerate_classes(3);
  } else {
    for (const auto& l : shape.labels) classes.push_back(parse_class(l));
  }
  const Timestamp day = parse_timestamp("2019-03-04T06:00:00");
  std::vector<Clip> clips;
  for (std::size_t s = 0; s < shape.sites.size(); ++s) {
    for (int k = 0; k < shape.clips_per_site; ++k) {
      Clip c;
      c.clip_id = shape.sites[s] + "_" + std::to_string(1000 + k);
      c.site_id = shape.sites[s];
      // One clip every 20 minutes, spread over the recording day.
      c.start = day + std::chrono::minutes(20 * k) + std::chrono::seconds(13 * static_cast<int>(s));
      const int n_tracks = std::uniform_int_distribution<int>(1, shape.max_tracks_per_clip)(rng);
      for (int t = 0; t < n_tracks; ++t) {
        Track tr;
        tr.track_id = static_cast<TrackId>(t + 1);
        tr.cls = classes[std::uniform_int_distribution<std::size_t>(0, classes.size() - 1)(rng)];
        const int a = std::uniform_int_distribution<int>(0, 80)(rng);
        const int b = std::uniform_int_distribution<int>(a, 99)(rng);
        for (int f = a; f <= b; ++f) {
          if (f != a && f != b && std::uniform_int_distribution<int>(0, 9)(rng) == 0) continue;  // occlusion gap
          tr.boxes[f] = BoundingBox{static_cast<double>(t * 150 + f % 20), static_cast<double>(400 + f % 7), 100, 80};
        }
        c.tracks.push_back(std::move(tr));
      }
      clips.push_back(std::move(c));
    }
  }
  return clips;
}

}  // namespace helmetkit::testing
