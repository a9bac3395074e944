// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Readers for the published reference tables under data/.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "helmetkit/annotations.hpp"
#include "helmetkit/text_io.hpp"
#include "support/fixtures.hpp"

namespace helmetkit::testing {

// site -> published clip count (sites table, sampled column)
inline std::map<std::string, std::int64_t> published_sampled_clips() {
  std::map<std::string, std::int64_t> out;
  text::for_each_record(text::read_file(data_path("sampled_clips.txt")), [&](std::string_view line, std::size_t n) {
    const auto f = text::split_ws(line);
    out[std::string(f[0])] = text::parse_int(f[1], n, "clips");
  });
  return out;
}

inline std::map<std::string, double> published_site_hours() {
  std::map<std::string, double> out;
  for (const Site& s : load_sites(data_path("sites.txt"))) out[s.site_id] = s.recorded_hours;
  return out;
}

// site -> {train, val, test, overall}
inline std::map<std::string, std::array<std::int64_t, 4>> published_split() {
  std::map<std::string, std::array<std::int64_t, 4>> out;
  text::for_each_record(text::read_file(data_path("split_counts.txt")), [&](std::string_view line, std::size_t n) {
    const auto f = text::split_ws(line);
    out[std::string(f[0])] = {text::parse_int(f[1], n, "train"), text::parse_int(f[2], n, "val"),
                              text::parse_int(f[3], n, "test"), text::parse_int(f[4], n, "overall")};
  });
  return out;
}

// Bare clips (no tracks) distributed per the published per-site totals.
inline std::vector<Clip> clips_per_published_split() {
  std::vector<Clip> clips;
  for (const auto& [site, row] : published_split()) {
    for (std::int64_t k = 0; k < row[3]; ++k) {
      Clip c;
      c.clip_id = site + "_" + std::to_string(1000 + k);
      c.site_id = site;
      c.start = parse_timestamp("2019-03-04T06:00:00");
      clips.push_back(std::move(c));
    }
  }
  return clips;
}

}  // namespace helmetkit::testing
