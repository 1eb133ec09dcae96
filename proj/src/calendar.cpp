#include "canopyflux/calendar.hpp"

#include <charconv>

#include <fmt/format.h>

namespace canopyflux {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{} && ptr == text.data() + pos + len;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::optional<Instant> parse_timestamp(std::string_view text) {
  if (text.size() < 19) return std::nullopt;
  auto date = parse_date(text.substr(0, 10));
  if (!date || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':') {
    return std::nullopt;
  }
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mm) || !read_int(text, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  auto rest = text.substr(19);
  if (!(rest.empty() || rest == "Z" || rest == "+00:00")) return std::nullopt;
  return Instant{*date} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_date(Date date) {
  year_month_day ymd{date};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::string format_timestamp(Instant instant) {
  auto date = utc_date(instant);
  auto secs = (instant - Instant{date}).count();
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(date), secs / 3600, (secs / 60) % 60,
                     secs % 60);
}

IsoWeek IsoWeek::of(Date date) {
  const unsigned iso_weekday = weekday{date}.iso_encoding();  // Mon = 1 .. Sun = 7
  const Date thursday = date - days{iso_weekday - 1} + days{3};
  const std::chrono::year y = year_month_day{thursday}.year();
  const Date jan1 = sys_days{y / January / 1};
  const auto week = static_cast<unsigned>((thursday - jan1).count() / 7 + 1);
  return IsoWeek{static_cast<int>(y), week};
}

std::optional<IsoWeek> IsoWeek::parse(std::string_view text) {
  int y = 0, w = 0;
  if (text.size() != 8 || text[4] != '-' || text[5] != 'W') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 6, 2, w) || w < 1 || w > 53) return std::nullopt;
  IsoWeek candidate{y, static_cast<unsigned>(w)};
  // Reject week 53 in 52-week years.
  if (IsoWeek::of(candidate.monday()) != candidate) return std::nullopt;
  return candidate;
}

Date IsoWeek::monday() const {
  // Jan 4 always falls in ISO week 1.
  const Date jan4 = sys_days{std::chrono::year{year} / January / 4};
  const Date week1_monday = jan4 - days{weekday{jan4}.iso_encoding() - 1};
  return week1_monday + days{7 * (static_cast<int>(week) - 1)};
}

std::string IsoWeek::to_string() const { return fmt::format("{:04d}-W{:02d}", year, week); }

long weeks_between(const IsoWeek& a, const IsoWeek& b) { return (b.monday() - a.monday()).count() / 7; }

}  // namespace canopyflux
