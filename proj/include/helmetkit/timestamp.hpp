// Copyright 2026 The helmetkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "helmetkit/error.hpp"

namespace helmetkit {

// Wall-clock time at the observation site. No time zone is attached; all
// times in one dataset are assumed to share the site's local clock.
using Timestamp = std::chrono::sys_seconds;
using TimestampMs = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS" with an optional trailing 'Z'.
inline Timestamp parse_timestamp(std::string_view s) {
  auto fail = [&]() -> Timestamp {
    throw ParseError(0, "YYYY-MM-DDTHH:MM:SS", "invalid ISO-8601 timestamp '" + std::string(s) + "'");
  };
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':') {
    return fail();
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (s[i] < '0' || s[i] > '9') fail();
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  using namespace std::chrono;
  const year_month_day ymd{year{num(0, 4)}, month{static_cast<unsigned>(num(5, 2))},
                           day{static_cast<unsigned>(num(8, 2))}};
  const int hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return fail();
  return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss<seconds> tod{t - day_point};
  char buf[80];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(tod.hours().count()), static_cast<long>(tod.minutes().count()),
                static_cast<long>(tod.seconds().count()));
  return buf;
}

inline int hour_of_day(TimestampMs t) {
  using namespace std::chrono;
  const auto since_midnight = t - floor<days>(t);
  return static_cast<int>(duration_cast<hours>(since_midnight).count());
}

}  // namespace helmetkit
