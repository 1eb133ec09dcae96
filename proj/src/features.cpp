#include "canopyflux/features.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"

namespace canopyflux {

std::string_view to_string(FeatureSet set) { return set == FeatureSet::S2 ? "S2" : "S2+Meteo"; }

std::string_view file_slug(FeatureSet set) { return set == FeatureSet::S2 ? "s2" : "s2_meteo"; }

std::optional<FeatureSet> parse_feature_set(std::string_view text) {
  if (text == "S2" || text == "s2") return FeatureSet::S2;
  if (text == "S2+Meteo" || text == "s2+meteo" || text == "s2_meteo") return FeatureSet::S2Meteo;
  return std::nullopt;
}

std::vector<std::string> predictor_names(FeatureSet set) {
  std::vector<std::string> names(kBandNames.begin(), kBandNames.end());
  if (set == FeatureSet::S2Meteo) {
    names.emplace_back("Tair");
    names.emplace_back("Prpc");
  }
  return names;
}

FeatureTable join_weekly(const WeeklyTranspiration& transpiration, std::span<const WeeklySpectra> spectra,
                         std::span<const WeeklyMeteo> meteo, FeatureSet set) {
  std::map<IsoWeek, const WeeklySpectra*> s2_by_week;
  for (const auto& s : spectra) s2_by_week[s.week] = &s;
  std::map<IsoWeek, const WeeklyMeteo*> meteo_by_week;
  for (const auto& m : meteo) meteo_by_week[m.week] = &m;

  FeatureTable table{transpiration.site_id, set, predictor_names(set), {}};
  std::map<IsoWeek, FeatureRow> rows;
  for (const auto& t : transpiration.values) {
    auto s = s2_by_week.find(t.week);
    if (s == s2_by_week.end()) continue;
    FeatureRow row{t.week, {s->second->band_means.begin(), s->second->band_means.end()}, t.mm_day};
    if (set == FeatureSet::S2Meteo) {
      auto m = meteo_by_week.find(t.week);
      if (m == meteo_by_week.end()) continue;
      row.predictors.push_back(m->second->tair_mean);
      row.predictors.push_back(m->second->precip_sum);
    }
    rows[t.week] = std::move(row);
  }
  for (auto& [week, row] : rows) table.rows.push_back(std::move(row));

  if (table.rows.empty()) {
    std::string coverage = fmt::format("transpiration={} weeks, spectra={} weeks", transpiration.values.size(),
                                       spectra.size());
    if (set == FeatureSet::S2Meteo) coverage += fmt::format(", meteo={} weeks", meteo.size());
    throw Error(ErrorKind::NoOverlap,
                fmt::format("site '{}' feature set {}: no week present in every source ({})", transpiration.site_id,
                            to_string(set), coverage));
  }
  return table;
}

DesignMatrix to_matrix(const FeatureTable& table) {
  if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "feature table has no rows");
  const std::size_t p = table.predictor_names.size();
  DesignMatrix out{Matrix(table.rows.size(), p), std::vector<double>(table.rows.size()), table.predictor_names};
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.predictors.size() != p) {
      throw Error(ErrorKind::ShapeError,
                  fmt::format("row {} has {} predictors, expected {}", i, row.predictors.size(), p));
    }
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(row.predictors[j])) {
        throw Error(ErrorKind::DataError,
                    fmt::format("non-finite value at row {} ({}), column '{}'", i, row.week.to_string(),
                                table.predictor_names[j]));
      }
      out.x(i, j) = row.predictors[j];
    }
    if (!std::isfinite(row.target)) {
      throw Error(ErrorKind::DataError,
                  fmt::format("non-finite value at row {} ({}), column 'transpiration_mm_day'", i, row.week.to_string()));
    }
    out.y[i] = row.target;
  }
  return out;
}

FeatureTable from_matrix(const DesignMatrix& design, std::span<const IsoWeek> weeks, std::string site_id,
                         FeatureSet set) {
  if (weeks.size() != design.x.rows() || design.y.size() != design.x.rows() ||
      design.names.size() != design.x.cols()) {
    throw Error(ErrorKind::ShapeError, "design matrix, target, names and weeks disagree in size");
  }
  FeatureTable table{std::move(site_id), set, design.names, {}};
  for (std::size_t i = 0; i < design.x.rows(); ++i) {
    auto r = design.x.row(i);
    table.rows.push_back({weeks[i], {r.begin(), r.end()}, design.y[i]});
  }
  return table;
}

std::string feature_table_csv(const FeatureTable& table) {
  std::string out = "iso_week";
  for (const auto& name : table.predictor_names) out += "," + name;
  out += ",transpiration_mm_day\n";
  for (const auto& row : table.rows) {
    out += row.week.to_string();
    for (double v : row.predictors) out += "," + format_number(v);
    out += "," + format_number(row.target) + "\n";
  }
  return out;
}

FeatureTable read_feature_table_csv(const std::filesystem::path& path, std::string site_id, FeatureSet set) {
  const auto csv = read_csv(path);
  if (csv.header.size() < 3 || csv.header.front() != "iso_week" || csv.header.back() != "transpiration_mm_day") {
    throw Error(ErrorKind::SchemaError,
                fmt::format("{}: expected header 'iso_week,<predictors...>,transpiration_mm_day'", csv.source));
  }
  FeatureTable table{std::move(site_id), set, {csv.header.begin() + 1, csv.header.end() - 1}, {}};
  const std::size_t p = table.predictor_names.size();
  for (const auto& rec : csv.rows) {
    auto week = IsoWeek::parse(csv.text(rec, 0));
    if (!week) csv.row_error(rec, fmt::format("bad ISO week '{}'", csv.text(rec, 0)));
    FeatureRow row{*week, std::vector<double>(p), csv.number(rec, p + 1)};
    for (std::size_t j = 0; j < p; ++j) row.predictors[j] = csv.number(rec, j + 1);
    if (!table.rows.empty() && !(table.rows.back().week < row.week)) {
      csv.row_error(rec, "weeks must be strictly increasing");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string feature_table_filename(std::string_view site_id, FeatureSet set) {
  return fmt::format("features_{}_{}.csv", site_id, file_slug(set));
}

}  // namespace canopyflux
