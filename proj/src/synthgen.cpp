#include "canopyflux/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"
#include "canopyflux/evaluation.hpp"
#include "canopyflux/random.hpp"

namespace canopyflux {

namespace {

using std::chrono::days;
using std::chrono::hours;

// Typical closed spruce canopy reflectance per band, and the relative spread
// of the weekly drivers around it.
constexpr BandValues kBandCenter = {0.030, 0.040, 0.070, 0.050, 0.100, 0.220,
                                    0.270, 0.300, 0.310, 0.320, 0.160, 0.080};
constexpr double kBandRelativeScale = 0.15;
constexpr double kPixelJitterSd = 0.002;
constexpr double kEdgePixelOffset = 0.03;

constexpr double kTairCenter = 8.0;
constexpr double kTairScale = 6.0;
constexpr double kPrecipCenter = 15.0;
constexpr double kPrecipScale = 15.0;

enum StreamTag : std::uint64_t { kDrivers = 1, kNoise, kTrees, kSpectra, kMeteo };

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

void validate(const SynthConfig& config) {
  if (!(config.cloud_fraction >= 0.0 && config.cloud_fraction < 1.0)) {
    throw Error(ErrorKind::ConfigError, "cloud_fraction must lie in [0, 1)");
  }
  if (!(config.noise_sd >= 0.0)) throw Error(ErrorKind::ConfigError, "noise_sd must be >= 0");
  if (!(config.target_oracle_r2 >= 0.0 && config.target_oracle_r2 < 1.0)) {
    throw Error(ErrorKind::ConfigError, "target_oracle_r2 must lie in [0, 1)");
  }
  if (config.n_trees < 1 || config.n_weeks < 1) {
    throw Error(ErrorKind::ConfigError, "n_trees and n_weeks must be >= 1");
  }
  if (std::chrono::weekday{config.start} != std::chrono::Monday) {
    throw Error(ErrorKind::ConfigError, fmt::format("start date {} is not a Monday", format_date(config.start)));
  }
  if (!(config.plot_radius > 0.0) || !(config.pixel_spacing > 0.0)) {
    throw Error(ErrorKind::ConfigError, "plot_radius and pixel_spacing must be > 0");
  }
  const auto names = predictor_names(FeatureSet::S2Meteo);
  for (const auto& [name, weight] : config.planted_coefficients) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw Error(ErrorKind::ConfigError, fmt::format("unknown planted predictor '{}'", name));
    }
  }
}

double seasonal_tair(Date date) {
  const auto doy = (date - Date{std::chrono::year_month_day{date}.year() / std::chrono::January / 1}).count();
  return 7.0 + 10.0 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(doy) - 200.0) / 365.0);
}

}  // namespace

SynthData generate_data(const SynthConfig& config) {
  validate(config);
  SynthData data;
  const std::size_t n_days = config.n_weeks * 7;

  // Weekly band drivers.
  auto drivers = RandomStream::derive(config.seed, {kDrivers});
  std::vector<BandValues> band_z(config.n_weeks);
  for (auto& week : band_z) {
    for (auto& z : week) z = clip(drivers.normal(), -2.5, 2.5);
  }

  // Daily meteorology and its weekly aggregates.
  auto meteo_rng = RandomStream::derive(config.seed, {kMeteo});
  std::vector<double> tair_anomaly(config.n_weeks);
  for (auto& a : tair_anomaly) a = 2.5 * meteo_rng.normal();
  for (std::size_t d = 0; d < n_days; ++d) {
    const Date date = config.start + days{d};
    const double tair = seasonal_tair(date) + tair_anomaly[d / 7] + 1.2 * meteo_rng.normal();
    const bool rain = meteo_rng.bernoulli(0.35);
    const double amount = rain ? -8.0 * std::log(1.0 - meteo_rng.uniform()) : 0.0;
    data.meteo.push_back({date, tair, amount});
  }
  const auto weekly = weekly_meteo(data.meteo, 7);

  // Planted signal.
  const auto names = predictor_names(FeatureSet::S2Meteo);
  std::vector<double> clean(config.n_weeks, config.base_transpiration);
  for (std::size_t w = 0; w < config.n_weeks; ++w) {
    for (const auto& [name, weight] : config.planted_coefficients) {
      double z = 0.0;
      if (name == "Tair") {
        z = (weekly[w].tair_mean - kTairCenter) / kTairScale;
      } else if (name == "Prpc") {
        z = (weekly[w].precip_sum - kPrecipCenter) / kPrecipScale;
      } else {
        const auto b = static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
        z = band_z[w][b];
      }
      clean[w] += weight * z;
    }
  }
  data.noise_sd = config.noise_sd;
  if (config.target_oracle_r2 > 0.0) {
    const auto s = summarize(clean);
    const double population_sd =
        config.n_weeks > 1 ? s.sd * std::sqrt(static_cast<double>(config.n_weeks - 1) / config.n_weeks) : 0.0;
    data.noise_sd = population_sd * std::sqrt((1.0 - config.target_oracle_r2) / config.target_oracle_r2);
  }
  auto noise = RandomStream::derive(config.seed, {kNoise});
  std::vector<double> truth(config.n_weeks);
  for (std::size_t w = 0; w < config.n_weeks; ++w) {
    truth[w] = std::max(config.min_transpiration, clean[w] + data.noise_sd * noise.normal());
    data.truth.push_back({IsoWeek::of(config.start + days{7 * w}), truth[w], clean[w]});
  }
  if (config.n_weeks >= 2) {
    if (auto r2 = metrics(truth, clean).r2) data.oracle_r2 = *r2;
  }

  // Trees: inventory, per-tree flux share and zero-flow plateau.
  auto tree_rng = RandomStream::derive(config.seed, {kTrees});
  std::vector<double> share(config.n_trees), plateau(config.n_trees);
  double weighted_area = 0.0;
  for (std::size_t i = 0; i < config.n_trees; ++i) {
    TreeRecord tree{fmt::format("T{:02d}", i + 1), std::round(tree_rng.uniform(0.20, 0.50) * 1000.0) / 1000.0,
                    "Picea abies"};
    share[i] = tree_rng.uniform(0.6, 1.4);
    plateau[i] = std::round(tree_rng.uniform(8.5, 12.0) * 100.0) / 100.0;
    weighted_area += share[i] * sapwood_area(tree.dbh, config.allometry);
    data.inventory.push_back(std::move(tree));
  }

  // Diurnal shape: half-sine between 06:00 and 18:00, summing to one.
  std::array<double, 24> shape{};
  double shape_total = 0.0;
  for (int h = 0; h < 24; ++h) {
    shape[h] = std::max(0.0, std::sin(std::numbers::pi * (h - 6) / 12.0));
    if (h <= 6 || h >= 18) shape[h] = 0.0;
    shape_total += shape[h];
  }
  for (auto& s : shape) s /= shape_total;

  const double ground_area = std::numbers::pi * config.plot_radius * config.plot_radius;
  const auto& cal = config.calibration;
  data.sapflow.reserve(config.n_trees * n_days * 24);
  for (std::size_t i = 0; i < config.n_trees; ++i) {
    for (std::size_t d = 0; d < n_days; ++d) {
      // Volume per unit sapwood so that sum_i Fd_i As_i / ground = T.
      const double fd_day = share[i] * truth[d / 7] / 1000.0 * ground_area / weighted_area;
      for (int h = 0; h < 24; ++h) {
        const double fd = fd_day * shape[h] / 3600.0;
        const double k = fd > 0.0 ? std::pow(fd / cal.coefficient, 1.0 / cal.exponent) : 0.0;
        const Instant ts = Instant{config.start + days{d}} + hours{h};
        data.sapflow.push_back({data.inventory[i].tree_id, ts, plateau[i] / (1.0 + k)});
      }
    }
  }

  // Sentinel-2: alternating 2/3-day revisits over a 3x3 pixel grid.
  auto s2 = RandomStream::derive(config.seed, {kSpectra});
  std::size_t day = 1;
  bool short_gap = true;
  while (day < n_days) {
    const std::size_t w = day / 7;
    const Instant ts = Instant{config.start + days{day}} + hours{10} + std::chrono::minutes{20};
    const bool flagged = s2.bernoulli(config.cloud_fraction);
    const bool snow = flagged && s2.bernoulli(0.25);
    const bool cloud = flagged && !snow;
    ++data.n_acquisitions;
    data.n_flagged_acquisitions += flagged ? 1 : 0;
    for (int row = -1; row <= 1; ++row) {
      for (int col = -1; col <= 1; ++col) {
        SpectralSample px;
        px.timestamp = ts;
        px.pixel_id = fmt::format("r{}c{}", row + 1, col + 1);
        px.distance = config.pixel_spacing * std::sqrt(static_cast<double>(row * row + col * col));
        px.cloud = cloud;
        px.snow = snow;
        const bool edge = row != 0 && col != 0;
        for (std::size_t b = 0; b < kBandCount; ++b) {
          double v = 0.0;
          if (cloud) {
            v = s2.uniform(0.45, 0.75);
          } else if (snow) {
            v = (kBandNames[b] == "B11" || kBandNames[b] == "B12") ? s2.uniform(0.05, 0.10) : s2.uniform(0.70, 0.90);
          } else {
            v = kBandCenter[b] * (1.0 + kBandRelativeScale * band_z[w][b]) + kPixelJitterSd * s2.normal() +
                (edge ? kEdgePixelOffset : 0.0);
          }
          // Stored at the archive's integer scale.
          px.bands[b] = std::round(clip(v, 1e-4, 1.0) * kReflectanceDivisor) / kReflectanceDivisor;
        }
        data.spectra.push_back(std::move(px));
      }
    }
    day += short_gap ? 2 : 3;
    short_gap = !short_gap;
  }
  return data;
}

SynthPaths default_synth_paths(const std::filesystem::path& out_dir) {
  return {out_dir / "sapflow.csv", out_dir / "inventory.csv", out_dir / "s2_samples.csv", out_dir / "meteo.csv",
          out_dir / "truth.json"};
}

std::string sapflow_csv(const std::vector<ThermalReading>& readings) {
  std::string out = std::string(kSapflowHeader) + "\n";
  out.reserve(readings.size() * 40);
  for (const auto& r : readings) {
    out += fmt::format("{},{},{}\n", r.tree_id, format_timestamp(r.timestamp), format_number(r.delta_t));
  }
  return out;
}

std::string inventory_csv(const std::vector<TreeRecord>& trees) {
  std::string out = std::string(kInventoryHeader) + "\n";
  for (const auto& t : trees) out += fmt::format("{},{},{}\n", t.tree_id, format_number(t.dbh), t.species);
  return out;
}

std::string s2_samples_csv(const std::vector<SpectralSample>& samples) {
  std::string out = std::string(kS2Header) + "\n";
  for (const auto& s : samples) {
    out += fmt::format("{},{},{}", format_timestamp(s.timestamp), s.pixel_id, format_number(s.distance));
    for (double v : s.bands) out += fmt::format(",{}", std::lround(v * kReflectanceDivisor));
    out += fmt::format(",{},{}\n", s.cloud ? 1 : 0, s.snow ? 1 : 0);
  }
  return out;
}

std::string meteo_csv(const std::vector<MeteoDaily>& days) {
  std::string out = std::string(kMeteoHeader) + "\n";
  for (const auto& d : days) {
    out += fmt::format("{},{},{}\n", format_date(d.date), format_number(d.tair), format_number(d.precip));
  }
  return out;
}

nlohmann::json truth_json(const SynthConfig& config, const SynthData& data) {
  nlohmann::json weeks = nlohmann::json::array();
  for (const auto& t : data.truth) {
    weeks.push_back({{"iso_week", t.week.to_string()},
                     {"transpiration_mm_day", t.transpiration},
                     {"clean_signal", t.clean_signal}});
  }
  return {{"schema", "synth-truth-v1"},
          {"site_id", config.site_id},
          {"seed", config.seed},
          {"noise_sd", data.noise_sd},
          {"oracle_r2", data.oracle_r2},
          {"cloud_fraction", config.cloud_fraction},
          {"planted_coefficients", config.planted_coefficients},
          {"n_acquisitions", data.n_acquisitions},
          {"n_flagged_acquisitions", data.n_flagged_acquisitions},
          {"weeks", std::move(weeks)}};
}

void write_synth(const SynthConfig& config, const SynthData& data, const SynthPaths& paths) {
  write_text_file(paths.sapflow, sapflow_csv(data.sapflow));
  write_text_file(paths.inventory, inventory_csv(data.inventory));
  write_text_file(paths.s2, s2_samples_csv(data.spectra));
  write_text_file(paths.meteo, meteo_csv(data.meteo));
  write_text_file(paths.truth, truth_json(config, data).dump(2) + "\n");
}

SynthData generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
  auto data = generate_data(config);
  write_synth(config, data, default_synth_paths(out_dir));
  return data;
}

}  // namespace canopyflux
