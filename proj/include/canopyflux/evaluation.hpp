#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "canopyflux/features.hpp"
#include "canopyflux/forest.hpp"
#include "canopyflux/random.hpp"

namespace canopyflux {

/// Shuffles [0, n) and cuts it into k folds whose sizes differ by at most
/// one (the first n % k folds get the extra index). Each fold is sorted.
/// Throws ConfigError unless 1 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, RandomStream& rng);

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> r2;  // squared Pearson correlation; absent for n < 2 or zero variance
};

/// Throws ShapeError for mismatched or empty inputs.
Metrics metrics(std::span<const double> y_true, std::span<const double> y_pred);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 when count < 2
  std::size_t count = 0;
};

Summary summarize(std::span<const double> values);

struct MetricSet {
  Summary rmse;
  Summary mae;
  Summary r2;  // count == 0 means undefined in every resample
};

struct CvConfig {
  std::size_t k = 5;
  std::size_t repeats = 30;
  std::vector<std::size_t> mtry_grid;  // empty: every value in 1..p
  std::uint64_t seed = 1;
  /// Optional explicit per-repeat seeds (size must equal `repeats`). By
  /// default repeat r is seeded from (seed, r).
  std::vector<std::uint64_t> repeat_seeds;
};

struct ResampleMetrics {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::size_t mtry = 0;
  Metrics metrics;
};

struct CvResult {
  struct Entry {
    std::size_t mtry = 0;
    MetricSet metrics;
  };
  std::vector<Entry> per_mtry;  // ascending mtry
  std::size_t best_mtry = 0;
  MetricSet best;
  std::vector<ResampleMetrics> resamples;  // ordered by (repeat, fold, mtry)
  std::size_t n_rows = 0;
  std::size_t k = 0;
  std::size_t repeats = 0;
};

/// Seed of repeat r, and the forest seed of fold f within that repeat.
std::uint64_t repeat_seed(const CvConfig& cv, std::size_t repeat);
std::uint64_t resample_forest_seed(std::uint64_t repeat_seed, std::size_t fold);

/// Repeated k-fold cross-validation over the mtry grid. Every (repeat, fold)
/// trains on the out-of-fold rows with the same forest seed for every mtry,
/// predicts the held-out fold and records its metrics. Per-mtry metrics are
/// unweighted means over resamples; best_mtry minimises mean RMSE, ties to
/// the smaller mtry. Results do not depend on `threads`.
CvResult repeated_cv(const DesignMatrix& data, const ForestConfig& forest, const CvConfig& cv, unsigned threads = 1);
CvResult repeated_cv(const FeatureTable& table, const ForestConfig& forest, const CvConfig& cv, unsigned threads = 1);

struct ImportanceEntry {
  std::string name;
  double scaled = 0.0;  // 0..100
  double raw = 0.0;
};

/// Min-max scaled to [0, 100], sorted descending with ties by name. All-equal
/// raw values map to 100.
std::vector<ImportanceEntry> scale_importance(std::span<const double> raw, std::span<const std::string> names);

struct SiteResult {
  std::string site_id;
  FeatureSet feature_set = FeatureSet::S2;
  CvResult cv;
  std::vector<ImportanceEntry> importance;
};

/// Accuracy table cell: "R2 (MAE)" with two decimals; "NA" for an undefined R2.
std::string format_cell(std::optional<double> r2, double mae);

nlohmann::json site_result_to_json(const SiteResult& result);
SiteResult site_result_from_json(const nlohmann::json& doc);

/// `report-v1`: sites -> feature sets -> summary fields and importance.
nlohmann::json report_json(std::span<const SiteResult> results);
/// Plain-text accuracy table (site rows, feature-set columns) followed by
/// the ranked importance table.
std::string render_report_tables(std::span<const SiteResult> results);

}  // namespace canopyflux
