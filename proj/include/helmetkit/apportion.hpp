// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "helmetkit/error.hpp"

namespace helmetkit {

// Largest-remainder (Hamilton) apportionment of `seats` proportional to
// integer `weights`. Remainders are exact; ties go to the lower index.
inline std::vector<std::int64_t> largest_remainder(std::span<const std::int64_t> weights,
                                                   std::int64_t seats) {
  if (seats < 0) throw ValidationError(Rule::kInvalidRatios, "seat count must be non-negative");
  std::int64_t total = 0;
  for (auto w : weights) {
    if (w < 0) throw ValidationError(Rule::kInvalidRatios, "apportionment weights must be non-negative");
    total += w;
  }
  std::vector<std::int64_t> out(weights.size(), 0);
  if (seats == 0) return out;
  if (total == 0) {
    throw ValidationError(Rule::kInvalidRatios, "cannot apportion a positive quota over all-zero weights");
  }
  std::vector<std::int64_t> remainder(weights.size());
  std::int64_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // seats * w fits comfortably for dataset-scale inputs.
    const __int128 q = static_cast<__int128>(seats) * weights[i];
    out[i] = static_cast<std::int64_t>(q / total);
    remainder[i] = static_cast<std::int64_t>(q % total);
    assigned += out[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::int64_t k = 0; k < seats - assigned; ++k) ++out[order[static_cast<std::size_t>(k)]];
  return out;
}

// Fixed-point weight for a real-valued share (hours, ratios).
inline std::int64_t quantize(double value, double scale) {
  return static_cast<std::int64_t>(std::llround(value * scale));
}

}  // namespace helmetkit
