#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "canopyflux/calendar.hpp"

namespace canopyflux {

// Tree-level thermal dissipation processing and tree-to-plot upscaling.
//
// Units: delta_t in degC, sap flux density in m3 m-2 s-1, daily flux in
// m3 m-2 day-1, sapwood area in m2, plot transpiration in mm day-1.

struct ThermalReading {
  std::string tree_id;
  Instant timestamp;
  double delta_t = 0.0;  // heated minus reference probe, > 0
};

struct TreeRecord {
  std::string tree_id;
  double dbh = 0.0;  // m
  std::string species;
};

struct FluxSample {
  Instant timestamp;
  double flux_density = 0.0;
};

struct SapFluxSeries {
  std::string tree_id;
  std::vector<FluxSample> samples;
  std::size_t clamped = 0;  // readings where delta_t exceeded the baseline
};

/// Granier calibration Fd = coefficient * K^exponent.
struct GranierCalibration {
  double coefficient = 118.99e-6;
  double exponent = 1.231;
};

struct GranierFlux {
  double flux_density = 0.0;
  bool clamped = false;  // flow index was negative and forced to zero
};

/// Power-law sapwood allometry As = alpha * dbh^beta. There is no built-in
/// default; site configs must supply both coefficients.
struct Allometry {
  double alpha = 0.0;
  double beta = 0.0;
};

enum class TreeCoverage {
  AllTrees,         // a day needs every instrumented tree
  AvailableSubset,  // sum over whichever trees report that day
};

/// Trailing-window zero-flow baseline: max delta_t over [t - window_days, t]
/// for each reading of a single tree. Readings must be strictly increasing.
std::vector<double> compute_delta_t_max(std::span<const ThermalReading> readings, int window_days);

/// Flow index K = (delta_t_max - delta_t) / delta_t, negative K clamped to 0.
/// Throws InvalidReading for delta_t <= 0.
GranierFlux granier_flux(double delta_t, double delta_t_max, const GranierCalibration& calibration = {});

/// Baseline plus Granier conversion for one tree's readings.
SapFluxSeries sap_flux_series(std::span<const ThermalReading> readings, int window_days,
                              const GranierCalibration& calibration = {});

struct DailyFlux {
  Date date;
  double flux = 0.0;  // m3 m-2 day-1
  int n_samples = 0;
};

/// Sums hourly flux densities x 3600 s per UTC day. Days with fewer than
/// `min_hours` samples are gaps and are not emitted.
std::vector<DailyFlux> daily_flux(const SapFluxSeries& series, int min_hours = 20);

/// Throws InvalidInventory for dbh <= 0 or alpha <= 0.
double sapwood_area(double dbh, const Allometry& allometry);

struct DailyTranspiration {
  std::string site_id;
  double plot_radius = 0.0;
  struct Value {
    Date date;
    double mm_day = 0.0;
  };
  std::vector<Value> values;
};

struct WeeklyTranspiration {
  std::string site_id;
  double plot_radius = 0.0;
  struct Value {
    IsoWeek week;
    double mm_day = 0.0;
    int n_days = 0;
  };
  std::vector<Value> values;
};

/// T(day) = sum_i Fd_i(day) * As_i / (pi r^2), in mm day-1. Every tree in
/// `daily_by_tree` counts as instrumented. Throws InventoryMismatch for a
/// tree with no sapwood area.
DailyTranspiration plot_transpiration(const std::map<std::string, std::vector<DailyFlux>>& daily_by_tree,
                                      const std::map<std::string, double>& sapwood_areas, double plot_radius,
                                      std::string site_id, TreeCoverage coverage = TreeCoverage::AllTrees);

/// ISO-week means of the daily values; weeks with fewer than `min_days`
/// valid days are gaps and are not emitted.
WeeklyTranspiration weekly_transpiration(const DailyTranspiration& daily, int min_days = 4);

struct UpscalingParams {
  int window_days = 10;
  int min_hours = 20;
  int min_days = 4;
  GranierCalibration calibration;
  Allometry allometry;
  double plot_radius = 12.0;
  TreeCoverage coverage = TreeCoverage::AllTrees;
};

struct UpscalingResult {
  DailyTranspiration daily;
  WeeklyTranspiration weekly;
  std::size_t clamped_readings = 0;
  std::size_t n_trees = 0;
};

/// The whole tree-to-plot chain. Trees are processed independently, so the
/// result does not depend on `threads`.
UpscalingResult upscale_site(std::span<const ThermalReading> readings, std::span<const TreeRecord> inventory,
                             const UpscalingParams& params, const std::string& site_id, unsigned threads = 1);

// CSV schemas.
inline constexpr const char* kSapflowHeader = "tree_id,timestamp_utc,delta_t_c";
inline constexpr const char* kInventoryHeader = "tree_id,dbh_m,species";
inline constexpr const char* kWeeklyTranspirationHeader = "site_id,iso_week,transpiration_mm_day,n_days";

std::vector<ThermalReading> read_sapflow_csv(const std::filesystem::path& path);
std::vector<TreeRecord> read_inventory_csv(const std::filesystem::path& path);
std::string weekly_transpiration_csv(const WeeklyTranspiration& weekly);
WeeklyTranspiration read_weekly_transpiration_csv(const std::filesystem::path& path);

}  // namespace canopyflux
