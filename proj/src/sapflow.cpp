#include "canopyflux/sapflow.hpp"

#include <cmath>
#include <deque>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"
#include "canopyflux/parallel.hpp"

namespace canopyflux {

std::vector<double> compute_delta_t_max(std::span<const ThermalReading> readings, int window_days) {
  if (readings.empty()) throw Error(ErrorKind::EmptyInput, "delta_t series is empty");
  if (window_days < 1) throw Error(ErrorKind::ConfigError, "window_days must be >= 1");
  for (std::size_t i = 1; i < readings.size(); ++i) {
    if (readings[i].timestamp <= readings[i - 1].timestamp) {
      throw Error(ErrorKind::MalformedSeries,
                  fmt::format("tree '{}': timestamps not strictly increasing at {}", readings[i].tree_id,
                              format_timestamp(readings[i].timestamp)));
    }
  }

  const auto window = std::chrono::days{window_days};
  std::vector<double> out(readings.size());
  // Monotone deque of indices with decreasing delta_t.
  std::deque<std::size_t> candidates;
  std::size_t oldest = 0;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    while (!candidates.empty() && readings[candidates.back()].delta_t <= readings[i].delta_t) {
      candidates.pop_back();
    }
    candidates.push_back(i);
    const Instant start = readings[i].timestamp - window;
    while (readings[oldest].timestamp < start) ++oldest;
    while (candidates.front() < oldest) candidates.pop_front();
    out[i] = readings[candidates.front()].delta_t;
  }
  return out;
}

GranierFlux granier_flux(double delta_t, double delta_t_max, const GranierCalibration& calibration) {
  if (!(delta_t > 0.0)) {
    throw Error(ErrorKind::InvalidReading, fmt::format("delta_t must be > 0, got {}", delta_t));
  }
  if (delta_t_max < delta_t) return {0.0, true};
  const double k = (delta_t_max - delta_t) / delta_t;
  if (k == 0.0) return {0.0, false};
  return {calibration.coefficient * std::pow(k, calibration.exponent), false};
}

SapFluxSeries sap_flux_series(std::span<const ThermalReading> readings, int window_days,
                              const GranierCalibration& calibration) {
  const auto baseline = compute_delta_t_max(readings, window_days);
  SapFluxSeries series;
  series.tree_id = readings.front().tree_id;
  series.samples.reserve(readings.size());
  for (std::size_t i = 0; i < readings.size(); ++i) {
    const auto flux = granier_flux(readings[i].delta_t, baseline[i], calibration);
    series.clamped += flux.clamped ? 1 : 0;
    series.samples.push_back({readings[i].timestamp, flux.flux_density});
  }
  return series;
}

std::vector<DailyFlux> daily_flux(const SapFluxSeries& series, int min_hours) {
  std::vector<DailyFlux> out;
  std::size_t i = 0;
  while (i < series.samples.size()) {
    const Date day = utc_date(series.samples[i].timestamp);
    double sum = 0.0;
    int count = 0;
    for (; i < series.samples.size() && utc_date(series.samples[i].timestamp) == day; ++i) {
      sum += series.samples[i].flux_density * 3600.0;
      ++count;
    }
    if (count >= min_hours) out.push_back({day, sum, count});
  }
  return out;
}

double sapwood_area(double dbh, const Allometry& allometry) {
  if (!(dbh > 0.0)) throw Error(ErrorKind::InvalidInventory, fmt::format("dbh must be > 0, got {}", dbh));
  if (!(allometry.alpha > 0.0)) {
    throw Error(ErrorKind::InvalidInventory, fmt::format("allometry alpha must be > 0, got {}", allometry.alpha));
  }
  return allometry.alpha * std::pow(dbh, allometry.beta);
}

DailyTranspiration plot_transpiration(const std::map<std::string, std::vector<DailyFlux>>& daily_by_tree,
                                      const std::map<std::string, double>& sapwood_areas, double plot_radius,
                                      std::string site_id, TreeCoverage coverage) {
  if (!(plot_radius > 0.0)) {
    throw Error(ErrorKind::ConfigError, fmt::format("plot_radius must be > 0, got {}", plot_radius));
  }
  for (const auto& [tree, days] : daily_by_tree) {
    if (!sapwood_areas.contains(tree)) {
      throw Error(ErrorKind::InventoryMismatch, fmt::format("tree '{}' has flux but no inventory record", tree));
    }
  }

  // Per day: weighted volume sum and reporting-tree count, trees in id order.
  std::map<Date, std::pair<double, std::size_t>> per_day;
  for (const auto& [tree, days] : daily_by_tree) {
    const double area = sapwood_areas.at(tree);
    for (const auto& d : days) {
      auto& slot = per_day[d.date];
      slot.first += d.flux * area;
      slot.second += 1;
    }
  }

  const double ground_area = std::numbers::pi * plot_radius * plot_radius;
  DailyTranspiration out{std::move(site_id), plot_radius, {}};
  for (const auto& [date, slot] : per_day) {
    if (coverage == TreeCoverage::AllTrees && slot.second != daily_by_tree.size()) continue;
    out.values.push_back({date, slot.first / ground_area * 1000.0});
  }
  return out;
}

WeeklyTranspiration weekly_transpiration(const DailyTranspiration& daily, int min_days) {
  std::map<IsoWeek, std::pair<double, int>> groups;
  for (const auto& v : daily.values) {
    auto& g = groups[IsoWeek::of(v.date)];
    g.first += v.mm_day;
    g.second += 1;
  }
  WeeklyTranspiration out{daily.site_id, daily.plot_radius, {}};
  for (const auto& [week, g] : groups) {
    if (g.second < min_days) continue;
    out.values.push_back({week, g.first / g.second, g.second});
  }
  return out;
}

UpscalingResult upscale_site(std::span<const ThermalReading> readings, std::span<const TreeRecord> inventory,
                             const UpscalingParams& params, const std::string& site_id, unsigned threads) {
  if (readings.empty()) throw Error(ErrorKind::EmptyInput, "no sap flow readings");

  std::map<std::string, std::vector<ThermalReading>> by_tree;
  for (const auto& r : readings) by_tree[r.tree_id].push_back(r);

  std::map<std::string, double> areas;
  for (const auto& tree : inventory) areas[tree.tree_id] = sapwood_area(tree.dbh, params.allometry);
  for (const auto& [tree, series] : by_tree) {
    if (!areas.contains(tree)) {
      throw Error(ErrorKind::InventoryMismatch, fmt::format("tree '{}' has flux but no inventory record", tree));
    }
  }

  std::vector<const std::vector<ThermalReading>*> trees;
  for (const auto& [tree, series] : by_tree) trees.push_back(&series);
  std::vector<SapFluxSeries> converted(trees.size());
  parallel_for(trees.size(), threads, [&](std::size_t i) {
    converted[i] = sap_flux_series(*trees[i], params.window_days, params.calibration);
  });

  UpscalingResult result;
  std::map<std::string, std::vector<DailyFlux>> daily_by_tree;
  for (const auto& series : converted) {
    result.clamped_readings += series.clamped;
    daily_by_tree[series.tree_id] = daily_flux(series, params.min_hours);
  }
  result.n_trees = converted.size();
  result.daily = plot_transpiration(daily_by_tree, areas, params.plot_radius, site_id, params.coverage);
  result.weekly = weekly_transpiration(result.daily, params.min_days);
  return result;
}

std::vector<ThermalReading> read_sapflow_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_tree = table.require_column("tree_id");
  const auto c_time = table.require_column("timestamp_utc");
  const auto c_dt = table.require_column("delta_t_c");
  std::vector<ThermalReading> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    auto ts = parse_timestamp(table.text(row, c_time));
    if (!ts) table.row_error(row, fmt::format("bad timestamp '{}'", table.text(row, c_time)));
    const double dt = table.number(row, c_dt);
    if (!(dt > 0.0)) {
      throw Error(ErrorKind::InvalidReading, fmt::format("{}:{}: delta_t must be > 0, got {}", table.source,
                                                         row.line, dt));
    }
    out.push_back({table.text(row, c_tree), *ts, dt});
  }
  return out;
}

std::vector<TreeRecord> read_inventory_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_tree = table.require_column("tree_id");
  const auto c_dbh = table.require_column("dbh_m");
  const auto c_species = table.require_column("species");
  std::vector<TreeRecord> out;
  std::set<std::string> seen;
  for (const auto& row : table.rows) {
    TreeRecord rec{table.text(row, c_tree), table.number(row, c_dbh), table.text(row, c_species)};
    if (!(rec.dbh > 0.0)) {
      throw Error(ErrorKind::InvalidInventory,
                  fmt::format("{}:{}: dbh must be > 0, got {}", table.source, row.line, rec.dbh));
    }
    if (!seen.insert(rec.tree_id).second) {
      throw Error(ErrorKind::DuplicateRecord,
                  fmt::format("{}:{}: duplicate tree_id '{}'", table.source, row.line, rec.tree_id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string weekly_transpiration_csv(const WeeklyTranspiration& weekly) {
  std::string out = std::string(kWeeklyTranspirationHeader) + "\n";
  for (const auto& v : weekly.values) {
    out += fmt::format("{},{},{},{}\n", weekly.site_id, v.week.to_string(), format_number(v.mm_day), v.n_days);
  }
  return out;
}

WeeklyTranspiration read_weekly_transpiration_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const auto c_site = table.require_column("site_id");
  const auto c_week = table.require_column("iso_week");
  const auto c_value = table.require_column("transpiration_mm_day");
  const auto c_days = table.require_column("n_days");
  WeeklyTranspiration out;
  for (const auto& row : table.rows) {
    auto week = IsoWeek::parse(table.text(row, c_week));
    if (!week) table.row_error(row, fmt::format("bad ISO week '{}'", table.text(row, c_week)));
    if (out.site_id.empty()) out.site_id = table.text(row, c_site);
    out.values.push_back({*week, table.number(row, c_value), static_cast<int>(table.integer(row, c_days))});
  }
  return out;
}

}  // namespace canopyflux
