// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Rider-position / helmet-use class scheme. A class label concatenates one
// "<Pos>Helmet" or "<Pos>NoHelmet" segment per present rider, in the fixed
// position order D, P0, P1, P2, P3. D is the driver, P0 a passenger in front
// of the driver and P1..P3 passengers behind the driver from near to far.

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "helmetkit/error.hpp"

namespace helmetkit {

enum class Position : std::uint8_t { kD = 0, kP0 = 1, kP1 = 2, kP2 = 3, kP3 = 4 };

inline constexpr std::size_t kPositionCount = 5;
inline constexpr std::array<Position, kPositionCount> kAllPositions = {
    Position::kD, Position::kP0, Position::kP1, Position::kP2, Position::kP3};

inline constexpr std::string_view position_name(Position p) {
  constexpr std::array<std::string_view, kPositionCount> names = {"D", "P0", "P1", "P2", "P3"};
  return names[static_cast<std::size_t>(p)];
}

struct Rider {
  Position position;
  bool helmet;

  friend bool operator==(const Rider&, const Rider&) = default;
};

struct RiderStats {
  int riders = 0;
  int helmeted = 0;

  friend bool operator==(const RiderStats&, const RiderStats&) = default;
};

// A validated set of riders on one motorcycle. Always satisfies:
// driver present, positions unique, 1..5 riders, passengers behind the
// driver occupy P1..Pk without gaps.
class RiderConfig {
 public:
  // Validates and canonicalizes; input order is irrelevant.
  static RiderConfig make(std::span<const Rider> riders) {
    if (riders.empty()) {
      throw ValidationError(Rule::kEmptyConfig, "rider config is empty (driver required)");
    }
    if (riders.size() > kPositionCount) {
      throw ValidationError(Rule::kTooManyRiders, "rider config has more than 5 riders");
    }
    RiderConfig config;
    config.present_ = 0;
    config.helmet_ = 0;
    for (const Rider& r : riders) {
      const auto bit = static_cast<std::uint8_t>(1u << static_cast<unsigned>(r.position));
      if (config.present_ & bit) {
        throw ValidationError(Rule::kDuplicatePosition,
                              "duplicate rider position " + std::string(position_name(r.position)));
      }
      config.present_ |= bit;
      if (r.helmet) config.helmet_ |= bit;
    }
    if (!config.has(Position::kD)) {
      throw ValidationError(Rule::kMissingDriver, "rider config has no driver (D)");
    }
    if ((config.has(Position::kP2) && !config.has(Position::kP1)) ||
        (config.has(Position::kP3) && !config.has(Position::kP2))) {
      throw ValidationError(Rule::kPassengerGap,
                            "passengers behind the driver must fill P1..P3 without gaps");
    }
    return config;
  }

  // A lone helmeted driver.
  constexpr RiderConfig() = default;

  static RiderConfig make(std::initializer_list<Rider> riders) {
    return make(std::span<const Rider>(riders.begin(), riders.size()));
  }

  bool has(Position p) const noexcept { return present_ & bit(p); }
  bool helmet(Position p) const noexcept { return helmet_ & bit(p); }

  // Riders in canonical position order.
  std::vector<Rider> riders() const {
    std::vector<Rider> out;
    for (Position p : kAllPositions) {
      if (has(p)) out.push_back({p, helmet(p)});
    }
    return out;
  }

  int size() const noexcept { return std::popcount(present_); }

  friend bool operator==(const RiderConfig&, const RiderConfig&) = default;

 private:
  static constexpr std::uint8_t bit(Position p) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
  }

  std::uint8_t present_ = bit(Position::kD);
  std::uint8_t helmet_ = bit(Position::kD);
};

struct HelmetClass {
  std::string label = "DHelmet";
  RiderConfig config;

  friend bool operator==(const HelmetClass&, const HelmetClass&) = default;
};

inline HelmetClass encode(const RiderConfig& config) {
  std::string label;
  for (const Rider& r : config.riders()) {
    label += position_name(r.position);
    label += r.helmet ? "Helmet" : "NoHelmet";
  }
  return {std::move(label), config};
}

inline HelmetClass encode(std::span<const Rider> riders) { return encode(RiderConfig::make(riders)); }

// Parses a canonical label. Segments must appear in strictly increasing
// position order; "NoHelmet" is tried before "Helmet".
inline RiderConfig decode(std::string_view label) {
  constexpr std::string_view kNo = "NoHelmet";
  constexpr std::string_view kYes = "Helmet";
  std::vector<Rider> riders;
  std::size_t i = 0;
  int last = -1;
  if (label.empty()) {
    throw ParseError(0, "D", "empty class label", Rule::kInvalidLabel);
  }
  while (i < label.size()) {
    const std::size_t seg_start = i;
    Position pos;
    if (label[i] == 'D') {
      pos = Position::kD;
      i += 1;
    } else if (label[i] == 'P' && i + 1 < label.size() && label[i + 1] >= '0' && label[i + 1] <= '3') {
      pos = static_cast<Position>(1 + (label[i + 1] - '0'));
      i += 2;
    } else {
      throw ParseError(i, "position (D|P0|P1|P2|P3)",
                       "class label '" + std::string(label) + "': unknown position at byte " +
                           std::to_string(i),
                       Rule::kInvalidLabel);
    }
    if (static_cast<int>(pos) <= last) {
      throw ParseError(seg_start, "position after " + std::string(position_name(static_cast<Position>(last))),
                       "class label '" + std::string(label) + "': non-canonical position order at byte " +
                           std::to_string(seg_start),
                       Rule::kInvalidLabel);
    }
    last = static_cast<int>(pos);
    const std::string_view rest = label.substr(i);
    bool helmet;
    if (rest.starts_with(kNo)) {
      helmet = false;
      i += kNo.size();
    } else if (rest.starts_with(kYes)) {
      helmet = true;
      i += kYes.size();
    } else {
      throw ParseError(i, "Helmet|NoHelmet",
                       "class label '" + std::string(label) + "': malformed segment at byte " +
                           std::to_string(i),
                       Rule::kInvalidLabel);
    }
    riders.push_back({pos, helmet});
  }
  return RiderConfig::make(riders);
}

inline HelmetClass parse_class(std::string_view label) { return encode(decode(label)); }

inline RiderStats rider_stats(const RiderConfig& config) {
  RiderStats s;
  for (const Rider& r : config.riders()) {
    ++s.riders;
    if (r.helmet) ++s.helmeted;
  }
  return s;
}

// Every valid config with at most `max_riders` riders, ordered by rider
// count and then by label.
inline std::vector<HelmetClass> enumerate_classes(int max_riders) {
  if (max_riders < 1 || max_riders > static_cast<int>(kPositionCount)) {
    throw ValidationError(Rule::kTooManyRiders, "max_riders must be in [1, 5]");
  }
  std::vector<HelmetClass> out;
  // Presence of P0 and the number of rear passengers are the only free
  // choices; each present rider then has two helmet states.
  for (int rear = 0; rear <= 3; ++rear) {
    for (int front = 0; front <= 1; ++front) {
      const int n = 1 + rear + front;
      if (n > max_riders) continue;
      std::vector<Position> positions = {Position::kD};
      if (front) positions.push_back(Position::kP0);
      for (int k = 0; k < rear; ++k) positions.push_back(static_cast<Position>(2 + k));
      for (unsigned mask = 0; mask < (1u << n); ++mask) {
        std::vector<Rider> riders;
        for (int k = 0; k < n; ++k) riders.push_back({positions[k], static_cast<bool>(mask & (1u << k))});
        out.push_back(encode(riders));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const HelmetClass& a, const HelmetClass& b) {
    const int na = a.config.size(), nb = b.config.size();
    return na != nb ? na < nb : a.label < b.label;
  });
  return out;
}

}  // namespace helmetkit
