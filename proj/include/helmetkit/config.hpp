// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "helmetkit/error.hpp"
#include "helmetkit/split.hpp"

namespace helmetkit {

// Settings shared by the command-line tools. Populated from flags and an
// optional key=value file.
struct Config {
  std::string annotations;
  std::string detections;
  std::string frames_dir;
  std::string out_dir;
  std::string sites;
  std::string counts;
  std::string split;
  std::string replay;
  std::string ui_dir;
  double iou_threshold = 0.5;
  double confidence_threshold = 0.5;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  int port = 8080;

  void validate() const {
    if (!(iou_threshold >= 0 && iou_threshold <= 1)) {
      throw ValidationError(Rule::kInvalidConfig, "iou-threshold must lie in [0, 1]");
    }
    if (!(confidence_threshold >= 0 && confidence_threshold <= 1)) {
      throw ValidationError(Rule::kInvalidConfig, "confidence must lie in [0, 1]");
    }
    if (port < 0 || port > 65535) throw ValidationError(Rule::kInvalidConfig, "port must lie in [0, 65535]");
    validate_ratios(ratios);
  }
};

}  // namespace helmetkit
