#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canopyflux/calendar.hpp"

namespace canopyflux {

// Sentinel-2 L2A band samples and station meteorology, reduced to weekly
// predictor tables.

inline constexpr std::size_t kBandCount = 12;
inline constexpr std::array<std::string_view, kBandCount> kBandNames = {
    "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8", "B8A", "B9", "B11", "B12"};

/// L2A archive integers are reflectance * 10^4.
inline constexpr double kReflectanceDivisor = 1e4;

using BandValues = std::array<double, kBandCount>;

struct SpectralSample {
  Instant timestamp;
  std::string pixel_id;
  double distance = 0.0;  // m from site centre
  BandValues bands{};     // surface reflectance, 0..1
  bool cloud = false;
  bool snow = false;
};

/// Buffer mean of all in-radius pixels for one acquisition.
struct AcquisitionMean {
  Instant timestamp;
  BandValues bands{};
  std::size_t n_pixels = 0;
};

struct WeeklySpectra {
  IsoWeek week;
  BandValues band_means{};
  std::size_t n_obs = 0;
};

struct MeteoDaily {
  Date date;
  double tair = 0.0;    // degC
  double precip = 0.0;  // mm day-1
};

struct WeeklyMeteo {
  IsoWeek week;
  double tair_mean = 0.0;
  double precip_sum = 0.0;  // mm week-1
  int n_days = 0;
};

inline constexpr const char* kS2Header =
    "timestamp_utc,pixel_id,distance_m,B1,B2,B3,B4,B5,B6,B7,B8,B8A,B9,B11,B12,cloud,snow";
inline constexpr const char* kMeteoHeader = "date,tair_c,precip_mm";
inline constexpr const char* kSpectraWeeklyHeader = "iso_week,B1,B2,B3,B4,B5,B6,B7,B8,B8A,B9,B11,B12,n_obs";
inline constexpr const char* kMeteoWeeklyHeader = "iso_week,tair_mean_c,precip_sum_mm,n_days";

/// Columns are located by name. Missing column: SchemaError; bad value,
/// reflectance outside [0, 1] after scaling, or a flag not in {0, 1}:
/// RowError with the line number.
std::vector<SpectralSample> parse_s2_csv(const std::filesystem::path& path);
std::vector<SpectralSample> parse_s2_csv(std::istream& in, const std::string& source);

/// Keeps samples with neither the cloud nor the snow flag set.
std::vector<SpectralSample> qa_filter(std::span<const SpectralSample> samples);

/// Per-acquisition band means over pixels with distance <= radius;
/// acquisitions with no such pixel are omitted. Sorted by timestamp.
std::vector<AcquisitionMean> buffer_average(std::span<const SpectralSample> samples, double radius);

/// ISO-week means over acquisitions. Weeks without acquisitions are absent.
std::vector<WeeklySpectra> weekly_bands(std::span<const AcquisitionMean> acquisitions);

std::vector<MeteoDaily> parse_meteo_csv(const std::filesystem::path& path);

/// Tair by mean, precipitation by sum, per ISO week; weeks with fewer than
/// `min_days` days are not emitted (7 = complete weeks only). Throws
/// DuplicateRecord when a date appears twice.
std::vector<WeeklyMeteo> weekly_meteo(std::span<const MeteoDaily> daily, int min_days = 7);

std::string weekly_spectra_csv(std::span<const WeeklySpectra> weeks);
std::vector<WeeklySpectra> read_weekly_spectra_csv(const std::filesystem::path& path);
std::string weekly_meteo_csv(std::span<const WeeklyMeteo> weeks);
std::vector<WeeklyMeteo> read_weekly_meteo_csv(const std::filesystem::path& path);

}  // namespace canopyflux
