// Copyright 2026 The ocelgan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace ocelgan {

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

namespace detail {

inline bool read_int(std::string_view s, std::size_t& pos, std::size_t min_digits,
                     std::size_t max_digits, int& out) {
  std::size_t start = pos;
  while (pos < s.size() && pos - start < max_digits && s[pos] >= '0' && s[pos] <= '9') ++pos;
  if (pos - start < min_digits) return false;
  auto [p, ec] = std::from_chars(s.data() + start, s.data() + pos, out);
  return ec == std::errc{} && p == s.data() + pos;
}

}  // namespace detail

/// Parses an ISO-8601 style timestamp. Accepted forms include
/// "2019-05-20T09:07:47", "2019-05-20 09:07:47.120+02:00", "2020-9-14 11:37"
/// and a bare date. Fractional seconds are truncated; offsets are folded
/// into UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!detail::read_int(s, pos, 4, 4, y)) return std::nullopt;
  if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!detail::read_int(s, pos, 1, 2, mo)) return std::nullopt;
  if (pos >= s.size() || s[pos++] != '-') return std::nullopt;
  if (!detail::read_int(s, pos, 1, 2, d)) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                     day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;

  long offset_seconds = 0;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    ++pos;
    if (!detail::read_int(s, pos, 1, 2, h)) return std::nullopt;
    if (pos >= s.size() || s[pos++] != ':') return std::nullopt;
    if (!detail::read_int(s, pos, 1, 2, mi)) return std::nullopt;
    if (pos < s.size() && s[pos] == ':') {
      ++pos;
      if (!detail::read_int(s, pos, 1, 2, sec)) return std::nullopt;
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return std::nullopt;
      }
    }
    if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
    if (pos < s.size()) {
      char c = s[pos++];
      if (c == 'Z' || c == 'z') {
        // UTC
      } else if (c == '+' || c == '-') {
        int oh = 0, om = 0;
        if (!detail::read_int(s, pos, 2, 2, oh)) return std::nullopt;
        if (pos < s.size() && s[pos] == ':') ++pos;
        if (pos < s.size() && !detail::read_int(s, pos, 2, 2, om)) return std::nullopt;
        offset_seconds = (c == '+' ? 1 : -1) * (oh * 3600L + om * 60L);
      } else {
        return std::nullopt;
      }
    }
    if (pos != s.size()) return std::nullopt;
  }
  auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600L + mi * 60L + sec - offset_seconds;
}

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  auto days = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
  auto rem = t - days * 86400;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<long long>(rem / 3600),
                static_cast<long long>(rem % 3600 / 60), static_cast<long long>(rem % 60));
  return buf;
}

}  // namespace ocelgan
