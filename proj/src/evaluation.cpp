#include "canopyflux/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "canopyflux/errors.hpp"
#include "canopyflux/parallel.hpp"

namespace canopyflux {

namespace {

constexpr std::uint64_t kRepeatTag = 0x726570656174ULL;  // "repeat"
constexpr std::uint64_t kFoldForestTag = 0x666f6c64ULL;  // "fold"

Matrix select_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

MetricSet aggregate(std::span<const ResampleMetrics> records, std::size_t mtry) {
  std::vector<double> rmse, mae, r2;
  for (const auto& r : records) {
    if (r.mtry != mtry) continue;
    rmse.push_back(r.metrics.rmse);
    mae.push_back(r.metrics.mae);
    if (r.metrics.r2) r2.push_back(*r.metrics.r2);
  }
  return {summarize(rmse), summarize(mae), summarize(r2)};
}

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"count", s.count}}; }

Summary summary_from_json(const nlohmann::json& j) {
  return {j.at("mean").get<double>(), j.at("sd").get<double>(), j.at("count").get<std::size_t>()};
}

nlohmann::json metric_set_json(const MetricSet& m) {
  return {{"rmse", summary_json(m.rmse)}, {"mae", summary_json(m.mae)}, {"r2", summary_json(m.r2)}};
}

MetricSet metric_set_from_json(const nlohmann::json& j) {
  return {summary_from_json(j.at("rmse")), summary_from_json(j.at("mae")), summary_from_json(j.at("r2"))};
}

// Column padding leaves trailing blanks on each line; drop them.
std::string trim_line_ends(const std::string& text) {
  std::string out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::size_t last = end;
    while (last > start && text[last - 1] == ' ') --last;
    out.append(text, start, last - start);
    if (end < text.size()) out += '\n';
    start = end + 1;
  }
  return out;
}

nlohmann::json optional_number(const Summary& s, double value) {
  return s.count == 0 ? nlohmann::json(nullptr) : nlohmann::json(value);
}

}  // namespace

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, RandomStream& rng) {
  if (k < 1 || k > n) throw Error(ErrorKind::ConfigError, fmt::format("need 1 <= k <= n, got k={} n={}", k, n));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t start = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                    order.begin() + static_cast<std::ptrdiff_t>(start + size));
    std::sort(folds[f].begin(), folds[f].end());
    start += size;
  }
  return folds;
}

Metrics metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorKind::ShapeError,
                fmt::format("metrics: {} observations vs {} predictions", y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw Error(ErrorKind::ShapeError, "metrics: empty input");
  const double n = static_cast<double>(y_true.size());

  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double e = y_pred[i] - y_true[i];
    se += e * e;
    ae += std::abs(e);
  }
  Metrics out{std::sqrt(se / n), ae / n, std::nullopt};

  if (y_true.size() >= 2) {
    const double mean_t = std::accumulate(y_true.begin(), y_true.end(), 0.0) / n;
    const double mean_p = std::accumulate(y_pred.begin(), y_pred.end(), 0.0) / n;
    double cov = 0.0, var_t = 0.0, var_p = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const double dt = y_true[i] - mean_t;
      const double dp = y_pred[i] - mean_p;
      cov += dt * dp;
      var_t += dt * dt;
      var_p += dp * dp;
    }
    if (var_t > 0.0 && var_p > 0.0) out.r2 = std::min(1.0, (cov * cov) / (var_t * var_p));
  }
  return out;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

std::uint64_t repeat_seed(const CvConfig& cv, std::size_t repeat) {
  if (!cv.repeat_seeds.empty()) return cv.repeat_seeds.at(repeat);
  return RandomStream::derive(cv.seed, {kRepeatTag, static_cast<std::uint64_t>(repeat)})();
}

std::uint64_t resample_forest_seed(std::uint64_t repeat_seed, std::size_t fold) {
  return RandomStream::derive(repeat_seed, {kFoldForestTag, static_cast<std::uint64_t>(fold)})();
}

CvResult repeated_cv(const DesignMatrix& data, const ForestConfig& forest, const CvConfig& cv, unsigned threads) {
  const std::size_t n = data.x.rows();
  const std::size_t p = data.x.cols();
  if (cv.k < 2 || cv.k > n) {
    throw Error(ErrorKind::ConfigError, fmt::format("cross-validation needs 2 <= k <= n, got k={} n={}", cv.k, n));
  }
  if (cv.repeats < 1) throw Error(ErrorKind::ConfigError, "repeats must be >= 1");
  if (!cv.repeat_seeds.empty() && cv.repeat_seeds.size() != cv.repeats) {
    throw Error(ErrorKind::ConfigError, "repeat_seeds must list one seed per repeat");
  }
  std::vector<std::size_t> grid = cv.mtry_grid;
  if (grid.empty()) {
    grid.resize(p);
    std::iota(grid.begin(), grid.end(), std::size_t{1});
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.front() < 1 || grid.back() > p) {
    throw Error(ErrorKind::ConfigError, fmt::format("mtry grid must lie within [1, {}]", p));
  }

  // Fold assignments per repeat, shared by every mtry.
  std::vector<std::uint64_t> seeds(cv.repeats);
  std::vector<std::vector<std::vector<std::size_t>>> folds(cv.repeats);
  for (std::size_t r = 0; r < cv.repeats; ++r) {
    seeds[r] = repeat_seed(cv, r);
    RandomStream rng(seeds[r]);
    folds[r] = kfold_split(n, cv.k, rng);
  }

  const std::size_t tasks = cv.repeats * cv.k * grid.size();
  std::vector<ResampleMetrics> records(tasks);
  parallel_for(tasks, threads, [&](std::size_t t) {
    const std::size_t m = t % grid.size();
    const std::size_t f = (t / grid.size()) % cv.k;
    const std::size_t r = t / (grid.size() * cv.k);
    const auto& test = folds[r][f];
    std::vector<std::size_t> train;
    train.reserve(n - test.size());
    for (std::size_t i = 0, j = 0; i < n; ++i) {
      if (j < test.size() && test[j] == i) {
        ++j;
      } else {
        train.push_back(i);
      }
    }
    const Matrix x_train = select_rows(data.x, train);
    std::vector<double> y_train;
    for (std::size_t i : train) y_train.push_back(data.y[i]);

    ForestConfig config = forest;
    config.mtry = grid[m];
    config.seed = resample_forest_seed(seeds[r], f);
    const Forest model = fit_forest(x_train, y_train, config, data.names, 1);

    std::vector<double> truth, predicted;
    for (std::size_t i : test) {
      truth.push_back(data.y[i]);
      predicted.push_back(model.predict(data.x.row(i)));
    }
    records[t] = {r, f, grid[m], metrics(truth, predicted)};
  });

  CvResult result;
  result.n_rows = n;
  result.k = cv.k;
  result.repeats = cv.repeats;
  for (std::size_t mtry : grid) result.per_mtry.push_back({mtry, aggregate(records, mtry)});
  const CvResult::Entry* best = &result.per_mtry.front();
  for (const auto& entry : result.per_mtry) {
    if (entry.metrics.rmse.mean < best->metrics.rmse.mean) best = &entry;
  }
  result.best_mtry = best->mtry;
  result.best = best->metrics;
  result.resamples = std::move(records);
  return result;
}

CvResult repeated_cv(const FeatureTable& table, const ForestConfig& forest, const CvConfig& cv, unsigned threads) {
  return repeated_cv(to_matrix(table), forest, cv, threads);
}

std::vector<ImportanceEntry> scale_importance(std::span<const double> raw, std::span<const std::string> names) {
  if (raw.empty() || raw.size() != names.size()) {
    throw Error(ErrorKind::ShapeError, fmt::format("{} importances for {} names", raw.size(), names.size()));
  }
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  std::vector<ImportanceEntry> out;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    double scaled = 100.0;
    if (*hi > *lo) {
      if (raw[j] == *hi) {
        scaled = 100.0;
      } else if (raw[j] == *lo) {
        scaled = 0.0;
      } else {
        scaled = 100.0 * (raw[j] - *lo) / (*hi - *lo);
      }
    }
    out.push_back({names[j], scaled, raw[j]});
  }
  std::stable_sort(out.begin(), out.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    if (a.scaled != b.scaled) return a.scaled > b.scaled;
    return a.name < b.name;
  });
  return out;
}

std::string format_cell(std::optional<double> r2, double mae) {
  return r2 ? fmt::format("{:.2f} ({:.2f})", *r2, mae) : fmt::format("NA ({:.2f})", mae);
}

nlohmann::json site_result_to_json(const SiteResult& result) {
  nlohmann::json doc;
  doc["schema"] = "cv-result-v1";
  doc["site_id"] = result.site_id;
  doc["feature_set"] = std::string(to_string(result.feature_set));
  doc["n_rows"] = result.cv.n_rows;
  doc["k"] = result.cv.k;
  doc["repeats"] = result.cv.repeats;
  doc["best_mtry"] = result.cv.best_mtry;
  doc["best"] = metric_set_json(result.cv.best);
  auto grid = nlohmann::json::array();
  for (const auto& e : result.cv.per_mtry) grid.push_back({{"mtry", e.mtry}, {"metrics", metric_set_json(e.metrics)}});
  doc["per_mtry"] = std::move(grid);
  auto importance = nlohmann::json::array();
  for (const auto& e : result.importance) importance.push_back({{"name", e.name}, {"scaled", e.scaled}, {"raw", e.raw}});
  doc["importance"] = std::move(importance);
  return doc;
}

SiteResult site_result_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "cv-result-v1") {
      throw Error(ErrorKind::DataError, "unsupported cross-validation result schema");
    }
    SiteResult out;
    out.site_id = doc.at("site_id").get<std::string>();
    auto set = parse_feature_set(doc.at("feature_set").get<std::string>());
    if (!set) throw Error(ErrorKind::DataError, "unknown feature set in cross-validation result");
    out.feature_set = *set;
    out.cv.n_rows = doc.at("n_rows").get<std::size_t>();
    out.cv.k = doc.at("k").get<std::size_t>();
    out.cv.repeats = doc.at("repeats").get<std::size_t>();
    out.cv.best_mtry = doc.at("best_mtry").get<std::size_t>();
    out.cv.best = metric_set_from_json(doc.at("best"));
    for (const auto& e : doc.at("per_mtry")) {
      out.cv.per_mtry.push_back({e.at("mtry").get<std::size_t>(), metric_set_from_json(e.at("metrics"))});
    }
    for (const auto& e : doc.at("importance")) {
      out.importance.push_back({e.at("name").get<std::string>(), e.at("scaled").get<double>(), e.at("raw").get<double>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataError, fmt::format("malformed cross-validation result: {}", e.what()));
  }
}

nlohmann::json report_json(std::span<const SiteResult> results) {
  nlohmann::json sites = nlohmann::json::object();
  for (const auto& r : results) {
    auto importance = nlohmann::json::array();
    for (const auto& e : r.importance) importance.push_back({{"name", e.name}, {"scaled", e.scaled}});
    const auto& m = r.cv.best;
    sites[r.site_id][std::string(to_string(r.feature_set))] = {
        {"r2_mean", optional_number(m.r2, m.r2.mean)},
        {"r2_sd", optional_number(m.r2, m.r2.sd)},
        {"mae_mean", m.mae.mean},
        {"mae_sd", m.mae.sd},
        {"rmse_mean", m.rmse.mean},
        {"rmse_sd", m.rmse.sd},
        {"best_mtry", r.cv.best_mtry},
        {"n_weeks", r.cv.n_rows},
        {"folds", r.cv.k},
        {"repeats", r.cv.repeats},
        {"importance", std::move(importance)},
    };
  }
  return {{"schema", "report-v1"}, {"sites", std::move(sites)}};
}

std::string render_report_tables(std::span<const SiteResult> results) {
  std::map<std::string, std::map<FeatureSet, const SiteResult*>> grid;
  std::vector<FeatureSet> sets;
  for (const auto& r : results) {
    grid[r.site_id][r.feature_set] = &r;
    if (std::find(sets.begin(), sets.end(), r.feature_set) == sets.end()) sets.push_back(r.feature_set);
  }
  std::sort(sets.begin(), sets.end());

  std::string out = "R^2 and mean absolute error (in parentheses), cross-validated\n";
  out += fmt::format("{:<12}", "Site");
  for (auto set : sets) out += fmt::format("{:<16}", to_string(set));
  out += "\n";
  for (const auto& [site, by_set] : grid) {
    out += fmt::format("{:<12}", site);
    for (auto set : sets) {
      auto it = by_set.find(set);
      std::string cell = "-";
      if (it != by_set.end()) {
        const auto& m = it->second->cv.best;
        cell = format_cell(m.r2.count ? std::optional<double>(m.r2.mean) : std::nullopt, m.mae.mean);
      }
      out += fmt::format("{:<16}", cell);
    }
    out += "\n";
  }

  out += "\nRelative importance of variables\n";
  std::vector<const SiteResult*> columns;
  for (auto set : sets) {
    for (const auto& [site, by_set] : grid) {
      if (auto it = by_set.find(set); it != by_set.end()) columns.push_back(it->second);
    }
  }
  std::size_t depth = 0;
  out += fmt::format("{:<8}", "Ranking");
  for (const auto* c : columns) {
    out += fmt::format("{:<22}", fmt::format("{} {}", c->site_id, to_string(c->feature_set)));
    depth = std::max(depth, c->importance.size());
  }
  out += "\n";
  for (std::size_t i = 0; i < depth; ++i) {
    out += fmt::format("{:<8}", i + 1);
    for (const auto* c : columns) {
      std::string cell;
      if (i < c->importance.size()) cell = fmt::format("{} {:.3f}", c->importance[i].name, c->importance[i].scaled);
      out += fmt::format("{:<22}", cell);
    }
    out += "\n";
  }
  return trim_line_ends(out);
}

}  // namespace canopyflux
