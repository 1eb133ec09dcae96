#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "canopyflux/calendar.hpp"
#include "canopyflux/environment.hpp"
#include "canopyflux/sapflow.hpp"

namespace canopyflux {

// Deterministic synthetic site: all four input tables plus the weekly
// transpiration they encode.
//
// Each week w gets standardized latent drivers z_j(w). Band reflectance is
// center_j + scale_j * z_j and meteorology is generated daily around a
// seasonal cycle. The weekly transpiration is
//   T(w) = max(min_transpiration, base + sum_j coef_j * z_j(w) + noise_sd * e(w))
// and is spread over each day of the week. Hourly delta_t comes from
// inverting the Granier formula against a constant night-time plateau, so
// the upscaling chain recovers T(w) up to rounding.

struct SynthConfig {
  std::uint64_t seed = 1;
  std::string site_id = "synthetic";
  std::size_t n_trees = 20;
  std::size_t n_weeks = 30;
  Date start = Date{std::chrono::year{2020} / std::chrono::June / 1};  // a Monday
  double cloud_fraction = 0.2;  // share of flagged acquisitions, in [0, 1)
  double noise_sd = 0.15;       // mm day-1
  /// When in (0, 1), overrides noise_sd so that the squared correlation of
  /// the clean signal with the noisy truth is about this value.
  double target_oracle_r2 = 0.0;
  /// Predictor name (B1..B12, Tair, Prpc) -> weight on its standardized driver.
  std::map<std::string, double> planted_coefficients = {{"B11", -0.6}, {"B8", 0.35}, {"Tair", 0.4}};
  double base_transpiration = 1.6;  // mm day-1
  double min_transpiration = 0.05;
  double plot_radius = 12.0;
  double pixel_spacing = 10.0;  // 3x3 grid; corner pixels sit outside a 12 m buffer
  Allometry allometry{0.5, 2.1};
  GranierCalibration calibration;
};

struct SynthTruthWeek {
  IsoWeek week;
  double transpiration = 0.0;  // mm day-1, noise included
  double clean_signal = 0.0;   // before noise and clipping
};

struct SynthData {
  std::vector<ThermalReading> sapflow;
  std::vector<TreeRecord> inventory;
  std::vector<SpectralSample> spectra;
  std::vector<MeteoDaily> meteo;
  std::vector<SynthTruthWeek> truth;
  std::size_t n_acquisitions = 0;
  std::size_t n_flagged_acquisitions = 0;
  double noise_sd = 0.0;  // after any target_oracle_r2 override
  double oracle_r2 = 0.0;
};

/// Throws ConfigError for an invalid configuration.
SynthData generate_data(const SynthConfig& config);

struct SynthPaths {
  std::filesystem::path sapflow;
  std::filesystem::path inventory;
  std::filesystem::path s2;
  std::filesystem::path meteo;
  std::filesystem::path truth;
};

SynthPaths default_synth_paths(const std::filesystem::path& out_dir);

std::string sapflow_csv(const std::vector<ThermalReading>& readings);
std::string inventory_csv(const std::vector<TreeRecord>& trees);
std::string s2_samples_csv(const std::vector<SpectralSample>& samples);
std::string meteo_csv(const std::vector<MeteoDaily>& days);
nlohmann::json truth_json(const SynthConfig& config, const SynthData& data);

/// Writes every table; IoError when a destination is not writable.
void write_synth(const SynthConfig& config, const SynthData& data, const SynthPaths& paths);
SynthData generate(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace canopyflux
