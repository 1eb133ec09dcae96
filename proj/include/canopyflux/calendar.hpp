#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace canopyflux {

using Date = std::chrono::sys_days;
using Instant = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`.
std::optional<Date> parse_date(std::string_view text);

/// Parses UTC timestamps of the form `YYYY-MM-DDTHH:MM:SS` with an optional
/// `Z` or `+00:00` suffix. A space may replace the `T`.
std::optional<Instant> parse_timestamp(std::string_view text);

std::string format_date(Date date);
std::string format_timestamp(Instant instant);  // YYYY-MM-DDTHH:MM:SSZ

inline Date utc_date(Instant instant) { return std::chrono::floor<std::chrono::days>(instant); }

/// ISO-8601 week (Monday start; week 1 contains the year's first Thursday).
struct IsoWeek {
  int year = 0;
  unsigned week = 0;

  static IsoWeek of(Date date);
  static IsoWeek of(Instant instant) { return of(utc_date(instant)); }
  /// Parses `YYYY-Www`.
  static std::optional<IsoWeek> parse(std::string_view text);

  Date monday() const;
  std::string to_string() const;

  friend auto operator<=>(const IsoWeek&, const IsoWeek&) = default;
};

/// Whole weeks from `a` to `b` (negative when `b` precedes `a`).
long weeks_between(const IsoWeek& a, const IsoWeek& b);

}  // namespace canopyflux
