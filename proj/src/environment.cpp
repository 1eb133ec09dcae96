#include "canopyflux/environment.hpp"

#include <fstream>
#include <map>
#include <set>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"

namespace canopyflux {

namespace {

std::vector<SpectralSample> samples_from_table(const CsvTable& table) {
  const auto c_time = table.require_column("timestamp_utc");
  const auto c_pixel = table.require_column("pixel_id");
  const auto c_dist = table.require_column("distance_m");
  std::array<std::size_t, kBandCount> c_bands{};
  for (std::size_t b = 0; b < kBandCount; ++b) c_bands[b] = table.require_column(kBandNames[b]);
  const auto c_cloud = table.require_column("cloud");
  const auto c_snow = table.require_column("snow");

  auto flag = [&](const CsvRecord& row, std::size_t column) {
    const auto& f = table.text(row, column);
    if (f == "0") return false;
    if (f == "1") return true;
    table.row_error(row, fmt::format("column '{}': flag must be 0 or 1, got '{}'", table.header[column], f));
  };

  std::vector<SpectralSample> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SpectralSample s;
    auto ts = parse_timestamp(table.text(row, c_time));
    if (!ts) table.row_error(row, fmt::format("bad timestamp '{}'", table.text(row, c_time)));
    s.timestamp = *ts;
    s.pixel_id = table.text(row, c_pixel);
    s.distance = table.number(row, c_dist);
    if (s.distance < 0.0) table.row_error(row, "distance_m must be >= 0");
    for (std::size_t b = 0; b < kBandCount; ++b) {
      const double v = table.number(row, c_bands[b]) / kReflectanceDivisor;
      if (v < 0.0 || v > 1.0) {
        table.row_error(row, fmt::format("band {} reflectance {} outside [0, 1]", kBandNames[b], v));
      }
      s.bands[b] = v;
    }
    s.cloud = flag(row, c_cloud);
    s.snow = flag(row, c_snow);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<SpectralSample> parse_s2_csv(const std::filesystem::path& path) {
  return samples_from_table(read_csv(path));
}

std::vector<SpectralSample> parse_s2_csv(std::istream& in, const std::string& source) {
  return samples_from_table(read_csv(in, source));
}

std::vector<SpectralSample> qa_filter(std::span<const SpectralSample> samples) {
  std::vector<SpectralSample> out;
  for (const auto& s : samples) {
    if (!s.cloud && !s.snow) out.push_back(s);
  }
  return out;
}

std::vector<AcquisitionMean> buffer_average(std::span<const SpectralSample> samples, double radius) {
  if (!(radius > 0.0)) throw Error(ErrorKind::ConfigError, fmt::format("buffer radius must be > 0, got {}", radius));
  // Accumulate in input order within each acquisition.
  std::map<Instant, AcquisitionMean> groups;
  for (const auto& s : samples) {
    if (s.distance > radius) continue;
    auto& g = groups[s.timestamp];
    g.timestamp = s.timestamp;
    for (std::size_t b = 0; b < kBandCount; ++b) g.bands[b] += s.bands[b];
    g.n_pixels += 1;
  }
  std::vector<AcquisitionMean> out;
  out.reserve(groups.size());
  for (auto& [ts, g] : groups) {
    for (auto& v : g.bands) v /= static_cast<double>(g.n_pixels);
    out.push_back(g);
  }
  return out;
}

std::vector<WeeklySpectra> weekly_bands(std::span<const AcquisitionMean> acquisitions) {
  std::map<IsoWeek, WeeklySpectra> groups;
  for (const auto& a : acquisitions) {
    const auto week = IsoWeek::of(a.timestamp);
    auto& g = groups[week];
    g.week = week;
    for (std::size_t b = 0; b < kBandCount; ++b) g.band_means[b] += a.bands[b];
    g.n_obs += 1;
  }
  std::vector<WeeklySpectra> out;
  out.reserve(groups.size());
  for (auto& [week, g] : groups) {
    for (auto& v : g.band_means) v /= static_cast<double>(g.n_obs);
    out.push_back(g);
  }
  return out;
}

std::vector<MeteoDaily> parse_meteo_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_date = table.require_column("date");
  const auto c_tair = table.require_column("tair_c");
  const auto c_precip = table.require_column("precip_mm");
  std::vector<MeteoDaily> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto date = parse_date(table.text(row, c_date));
    if (!date) table.row_error(row, fmt::format("bad date '{}'", table.text(row, c_date)));
    const double precip = table.number(row, c_precip);
    if (precip < 0.0) table.row_error(row, fmt::format("precip_mm must be >= 0, got {}", precip));
    out.push_back({*date, table.number(row, c_tair), precip});
  }
  return out;
}

std::vector<WeeklyMeteo> weekly_meteo(std::span<const MeteoDaily> daily, int min_days) {
  std::map<Date, const MeteoDaily*> by_date;
  for (const auto& d : daily) {
    if (!by_date.emplace(d.date, &d).second) {
      throw Error(ErrorKind::DuplicateRecord, fmt::format("duplicate meteo date {}", format_date(d.date)));
    }
  }
  std::map<IsoWeek, WeeklyMeteo> groups;
  for (const auto& [date, d] : by_date) {
    const auto week = IsoWeek::of(date);
    auto& g = groups[week];
    g.week = week;
    g.tair_mean += d->tair;
    g.precip_sum += d->precip;
    g.n_days += 1;
  }
  std::vector<WeeklyMeteo> out;
  for (auto& [week, g] : groups) {
    if (g.n_days < min_days) continue;
    g.tair_mean /= g.n_days;
    out.push_back(g);
  }
  return out;
}

std::string weekly_spectra_csv(std::span<const WeeklySpectra> weeks) {
  std::string out = std::string(kSpectraWeeklyHeader) + "\n";
  for (const auto& w : weeks) {
    out += w.week.to_string();
    for (double v : w.band_means) out += "," + format_number(v);
    out += fmt::format(",{}\n", w.n_obs);
  }
  return out;
}

std::vector<WeeklySpectra> read_weekly_spectra_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_week = table.require_column("iso_week");
  std::array<std::size_t, kBandCount> c_bands{};
  for (std::size_t b = 0; b < kBandCount; ++b) c_bands[b] = table.require_column(kBandNames[b]);
  const auto c_obs = table.require_column("n_obs");
  std::vector<WeeklySpectra> out;
  for (const auto& row : table.rows) {
    auto week = IsoWeek::parse(table.text(row, c_week));
    if (!week) table.row_error(row, fmt::format("bad ISO week '{}'", table.text(row, c_week)));
    WeeklySpectra w{*week, {}, static_cast<std::size_t>(table.integer(row, c_obs))};
    for (std::size_t b = 0; b < kBandCount; ++b) w.band_means[b] = table.number(row, c_bands[b]);
    out.push_back(w);
  }
  return out;
}

std::string weekly_meteo_csv(std::span<const WeeklyMeteo> weeks) {
  std::string out = std::string(kMeteoWeeklyHeader) + "\n";
  for (const auto& w : weeks) {
    out += fmt::format("{},{},{},{}\n", w.week.to_string(), format_number(w.tair_mean), format_number(w.precip_sum),
                       w.n_days);
  }
  return out;
}

std::vector<WeeklyMeteo> read_weekly_meteo_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_week = table.require_column("iso_week");
  const auto c_tair = table.require_column("tair_mean_c");
  const auto c_precip = table.require_column("precip_sum_mm");
  const auto c_days = table.require_column("n_days");
  std::vector<WeeklyMeteo> out;
  for (const auto& row : table.rows) {
    auto week = IsoWeek::parse(table.text(row, c_week));
    if (!week) table.row_error(row, fmt::format("bad ISO week '{}'", table.text(row, c_week)));
    out.push_back({*week, table.number(row, c_tair), table.number(row, c_precip),
                   static_cast<int>(table.integer(row, c_days))});
  }
  return out;
}

}  // namespace canopyflux
