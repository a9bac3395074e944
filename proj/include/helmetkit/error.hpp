// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace helmetkit {

// Machine-readable identifiers for invariant violations. The HTTP service
// reports these verbatim in 422 bodies.
enum class Rule {
  kEmptyConfig,
  kMissingDriver,
  kDuplicatePosition,
  kTooManyRiders,
  kPassengerGap,
  kInvalidLabel,
  kInvalidBox,
  kFrameIndexOutOfRange,
  kEmptyTrack,
  kDuplicateTrackId,
  kDuplicateClipId,
  kInvalidClip,
  kConfidenceOutOfRange,
  kInvalidRatios,
  kUnknownSite,
  kUnknownClip,
  kInsufficientCandidates,
  kNoDefinedClasses,
  kEmptyBucket,
  kNegativeCount,
  kNoOverlap,
  kInvalidConfig,
  kSchema,
};

inline const char* rule_id(Rule rule) {
  switch (rule) {
    case Rule::kEmptyConfig: return "empty-config";
    case Rule::kMissingDriver: return "missing-driver";
    case Rule::kDuplicatePosition: return "duplicate-position";
    case Rule::kTooManyRiders: return "too-many-riders";
    case Rule::kPassengerGap: return "passenger-gap";
    case Rule::kInvalidLabel: return "invalid-label";
    case Rule::kInvalidBox: return "invalid-box";
    case Rule::kFrameIndexOutOfRange: return "frame-index-out-of-range";
    case Rule::kEmptyTrack: return "empty-track";
    case Rule::kDuplicateTrackId: return "duplicate-track-id";
    case Rule::kDuplicateClipId: return "duplicate-clip-id";
    case Rule::kInvalidClip: return "invalid-clip";
    case Rule::kConfidenceOutOfRange: return "confidence-out-of-range";
    case Rule::kInvalidRatios: return "invalid-ratios";
    case Rule::kUnknownSite: return "unknown-site";
    case Rule::kUnknownClip: return "unknown-clip";
    case Rule::kInsufficientCandidates: return "insufficient-candidates";
    case Rule::kNoDefinedClasses: return "no-defined-classes";
    case Rule::kEmptyBucket: return "empty-bucket";
    case Rule::kNegativeCount: return "negative-count";
    case Rule::kNoOverlap: return "no-overlap";
    case Rule::kInvalidConfig: return "invalid-config";
    case Rule::kSchema: return "schema";
  }
  return "unknown";
}

// Input violates a domain invariant. Maps to CLI exit code 2 and HTTP 422.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(Rule rule, const std::string& message)
      : std::runtime_error(message), rule_(rule) {}

  Rule rule() const noexcept { return rule_; }

 private:
  Rule rule_;
};

// A label or record could not be tokenized. `offset` is a byte offset into
// the parsed text (or the 1-based line number for file parsers, see `line`).
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t offset, std::string expected, const std::string& message,
             Rule rule = Rule::kSchema)
      : ValidationError(rule, message),
        offset_(offset),
        expected_(std::move(expected)) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  std::size_t offset_;
  std::string expected_;
};

// Filesystem or network failure. Maps to CLI exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace helmetkit
