#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "canopyflux/calendar.hpp"
#include "canopyflux/environment.hpp"
#include "canopyflux/matrix.hpp"
#include "canopyflux/sapflow.hpp"

namespace canopyflux {

enum class FeatureSet {
  S2,       // 12 bands
  S2Meteo,  // 12 bands + Tair + Prpc
};

std::string_view to_string(FeatureSet set);  // "S2" / "S2+Meteo"
std::string_view file_slug(FeatureSet set);  // "s2" / "s2_meteo"
std::optional<FeatureSet> parse_feature_set(std::string_view text);

struct FeatureRow {
  IsoWeek week;
  std::vector<double> predictors;  // ordered as FeatureTable::predictor_names
  double target = 0.0;             // transpiration, mm day-1
};

struct FeatureTable {
  std::string site_id;
  FeatureSet feature_set = FeatureSet::S2;
  std::vector<std::string> predictor_names;
  std::vector<FeatureRow> rows;  // sorted by week
};

std::vector<std::string> predictor_names(FeatureSet set);

/// Inner join on ISO week. A week is emitted iff the target and every source
/// the feature set needs have it. Empty result: NoOverlap with per-source
/// week counts. `meteo` is only consulted for S2Meteo.
FeatureTable join_weekly(const WeeklyTranspiration& transpiration, std::span<const WeeklySpectra> spectra,
                         std::span<const WeeklyMeteo> meteo, FeatureSet set);

struct DesignMatrix {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> names;
};

/// Throws EmptyInput for a table with no rows and DataError(row, column) for
/// a non-finite value.
DesignMatrix to_matrix(const FeatureTable& table);
FeatureTable from_matrix(const DesignMatrix& design, std::span<const IsoWeek> weeks, std::string site_id,
                         FeatureSet set);

std::string feature_table_csv(const FeatureTable& table);
FeatureTable read_feature_table_csv(const std::filesystem::path& path, std::string site_id, FeatureSet set);
std::string feature_table_filename(std::string_view site_id, FeatureSet set);

}  // namespace canopyflux
