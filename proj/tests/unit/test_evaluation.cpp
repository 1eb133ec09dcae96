#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"

#include "canopyflux/evaluation.hpp"
#include "canopyflux/random.hpp"

using namespace canopyflux;
using testing::rel_err;

namespace {

DesignMatrix toy_design(std::uint64_t seed, std::size_t n, std::size_t p) {
  RandomStream rng(seed);
  DesignMatrix d{Matrix(n, p), std::vector<double>(n), {}};
  for (std::size_t j = 0; j < p; ++j) d.names.push_back("f" + std::to_string(j));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) d.x(i, j) = rng.uniform();
    d.y[i] = 2.0 * d.x(i, 0) - d.x(i, 1) + 0.2 * rng.normal();
  }
  return d;
}

}  // namespace

TEST_CASE("k-fold partitions") {
  RandomStream rng(1);
  const auto folds = kfold_split(7, 5, rng);
  std::vector<std::size_t> sizes;
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    sizes.push_back(f.size());
    CHECK(std::is_sorted(f.begin(), f.end()));
    for (auto i : f) CHECK(seen.insert(i).second);
  }
  CHECK(sizes == std::vector<std::size_t>{2, 2, 1, 1, 1});
  CHECK(seen.size() == 7);

  const auto even = kfold_split(10, 5, rng);
  std::set<std::size_t> all;
  for (const auto& f : even) {
    CHECK(f.size() == 2);
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == 10);

  RandomStream a(9), b(9);
  CHECK(kfold_split(30, 5, a) == kfold_split(30, 5, b));
  CHECK_ERROR_KIND(kfold_split(3, 4, rng), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(kfold_split(3, 0, rng), ErrorKind::ConfigError);
}

TEST_CASE("metrics on hand-computed cases") {
  const std::vector<double> t = {1, 2, 3};
  auto m = metrics(t, t);
  CHECK(m.rmse == 0.0);
  CHECK(m.mae == 0.0);
  CHECK(m.r2 == 1.0);

  m = metrics(t, std::vector<double>{2, 2, 2});
  CHECK(rel_err(m.rmse, std::sqrt(2.0 / 3.0)) < 1e-15);
  CHECK(rel_err(m.mae, 2.0 / 3.0) < 1e-15);
  CHECK_FALSE(m.r2.has_value());

  m = metrics(t, std::vector<double>{1, 3, 2});
  CHECK(m.r2 == 0.25);

  m = metrics(std::vector<double>{4.0}, std::vector<double>{1.0});
  CHECK(m.rmse == 3.0);
  CHECK_FALSE(m.r2.has_value());

  CHECK_ERROR_KIND(metrics(t, std::vector<double>{1, 2}), ErrorKind::ShapeError);
  CHECK_ERROR_KIND(metrics(std::vector<double>{}, std::vector<double>{}), ErrorKind::ShapeError);
}

TEST_CASE("metric identities on random inputs") {
  RandomStream rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    std::vector<double> t(n), p(n), shifted(n);
    const double a = 0.1 + 5.0 * rng.uniform(), b = rng.uniform(-10.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = rng.normal();
      p[i] = t[i] + rng.normal();
      shifted[i] = a * p[i] + b;
    }
    const auto m = metrics(t, p);
    CHECK(m.mae <= m.rmse * (1.0 + 1e-15));
    REQUIRE(m.r2.has_value());
    CHECK(*m.r2 >= 0.0);
    CHECK(*m.r2 <= 1.0);
    CHECK(std::abs(*metrics(t, shifted).r2 - *m.r2) < 1e-9);
  }
}

TEST_CASE("summaries") {
  const auto s = summarize(std::vector<double>{1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(rel_err(s.sd, std::sqrt(5.0 / 3.0)) < 1e-15);
  CHECK(s.count == 4);
  CHECK(summarize(std::vector<double>{7}).sd == 0.0);
  CHECK(summarize(std::vector<double>{}).count == 0);
}

TEST_CASE("repeated cv matches a hand-rolled loop") {
  const auto d = toy_design(3, 23, 4);
  const ForestConfig forest{30, 0, 3, true, 0};
  CvConfig cv{5, 3, {1, 2, 4}, 77, {}};
  const auto result = repeated_cv(d, forest, cv, 1);
  REQUIRE(result.per_mtry.size() == 3);
  CHECK(result.resamples.size() == 3 * 5 * 3);
  CHECK(result.n_rows == 23);

  for (const auto& entry : result.per_mtry) {
    std::vector<double> rmse, mae, r2;
    for (std::size_t r = 0; r < 3; ++r) {
      const auto seed = repeat_seed(cv, r);
      RandomStream rng(seed);
      const auto folds = kfold_split(23, 5, rng);
      for (std::size_t f = 0; f < 5; ++f) {
        std::vector<std::size_t> train;
        for (std::size_t i = 0; i < 23; ++i) {
          if (!std::binary_search(folds[f].begin(), folds[f].end(), i)) train.push_back(i);
        }
        Matrix xt(train.size(), 4);
        std::vector<double> yt;
        for (std::size_t i = 0; i < train.size(); ++i) {
          for (std::size_t j = 0; j < 4; ++j) xt(i, j) = d.x(train[i], j);
          yt.push_back(d.y[train[i]]);
        }
        ForestConfig fc = forest;
        fc.mtry = entry.mtry;
        fc.seed = resample_forest_seed(seed, f);
        const auto model = fit_forest(xt, yt, fc);
        std::vector<double> truth, pred;
        for (auto i : folds[f]) {
          truth.push_back(d.y[i]);
          pred.push_back(model.predict(d.x.row(i)));
        }
        const auto m = metrics(truth, pred);
        rmse.push_back(m.rmse);
        mae.push_back(m.mae);
        if (m.r2) r2.push_back(*m.r2);
      }
    }
    const auto s_rmse = summarize(rmse);
    CHECK(rel_err(entry.metrics.rmse.mean, s_rmse.mean) < 1e-12);
    CHECK(rel_err(entry.metrics.rmse.sd, s_rmse.sd) < 1e-12);
    CHECK(rel_err(entry.metrics.mae.mean, summarize(mae).mean) < 1e-12);
    CHECK(rel_err(entry.metrics.r2.mean, summarize(r2).mean) < 1e-12);
    CHECK(entry.metrics.r2.count == r2.size());
  }

  const auto best = std::min_element(result.per_mtry.begin(), result.per_mtry.end(), [](const auto& a, const auto& b) {
    return a.metrics.rmse.mean < b.metrics.rmse.mean;
  });
  CHECK(result.best_mtry == best->mtry);
  CHECK(result.best.rmse.mean == best->metrics.rmse.mean);
}

TEST_CASE("repeated cv is thread-count independent and seed sensitive") {
  const auto d = toy_design(5, 20, 3);
  const ForestConfig forest{20, 0, 3, true, 0};
  const CvConfig cv{4, 2, {}, 11, {}};
  const auto a = repeated_cv(d, forest, cv, 1);
  const auto b = repeated_cv(d, forest, cv, 3);
  REQUIRE(a.resamples.size() == b.resamples.size());
  for (std::size_t i = 0; i < a.resamples.size(); ++i) {
    CHECK(a.resamples[i].metrics.rmse == b.resamples[i].metrics.rmse);
  }
  CHECK(a.per_mtry.size() == 3);  // empty grid covers 1..p

  // Identical repeat seeds give identical repeats.
  const CvConfig dup{4, 2, {2}, 0, {42, 42}};
  const auto same = repeated_cv(d, forest, dup, 1);
  for (std::size_t f = 0; f < 4; ++f) CHECK(same.resamples[f].metrics.rmse == same.resamples[4 + f].metrics.rmse);

  CHECK_ERROR_KIND(repeated_cv(d, forest, CvConfig{1, 2, {}, 1, {}}), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(repeated_cv(d, forest, CvConfig{4, 2, {5}, 1, {}}), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(repeated_cv(d, forest, CvConfig{4, 2, {}, 1, {1}}), ErrorKind::ConfigError);
}

TEST_CASE("best mtry ties go to the smaller value") {
  // Constant target: every mtry predicts it exactly, so all RMSEs are 0.
  DesignMatrix d{Matrix(10, 3), std::vector<double>(10, 1.5), {"a", "b", "c"}};
  for (std::size_t i = 0; i < 10; ++i) d.x(i, 0) = static_cast<double>(i);
  const auto r = repeated_cv(d, ForestConfig{5, 0, 1, true, 0}, CvConfig{5, 1, {3, 2}, 1, {}});
  CHECK(r.best_mtry == 2);
  CHECK(r.best.r2.count == 0);
}

TEST_CASE("importance scaling") {
  const std::vector<std::string> names = {"a", "b", "c"};
  auto s = scale_importance(std::vector<double>{5, 10, 20}, names);
  REQUIRE(s.size() == 3);
  CHECK(s[0].name == "c");
  CHECK(s[0].scaled == 100.0);
  CHECK(s[1].name == "b");
  CHECK(rel_err(s[1].scaled, 100.0 / 3.0) < 1e-14);
  CHECK(s[2].name == "a");
  CHECK(s[2].scaled == 0.0);
  CHECK(s[2].raw == 5.0);

  s = scale_importance(std::vector<double>{2, 2, 2}, names);
  for (const auto& e : s) CHECK(e.scaled == 100.0);
  CHECK(s[0].name == "a");

  CHECK_ERROR_KIND(scale_importance(std::vector<double>{1, 2}, names), ErrorKind::ShapeError);
}

TEST_CASE("table cells") {
  CHECK(format_cell(0.57, 0.5) == "0.57 (0.50)");
  CHECK(format_cell(0.795, 0.054) == "0.80 (0.05)");
  CHECK(format_cell(std::nullopt, 0.25) == "NA (0.25)");
}

TEST_CASE("result json and report rendering") {
  const auto d = toy_design(6, 15, 3);
  SiteResult r{"site2", FeatureSet::S2, repeated_cv(d, ForestConfig{10, 0, 3, true, 0}, CvConfig{3, 2, {}, 5, {}}), {}};
  r.importance = scale_importance(std::vector<double>{4.0, 1.0, 2.0}, std::vector<std::string>{"B11", "B8A", "B4"});

  const auto back = site_result_from_json(nlohmann::json::parse(site_result_to_json(r).dump()));
  CHECK(back.site_id == "site2");
  CHECK(back.cv.best_mtry == r.cv.best_mtry);
  CHECK(back.cv.best.r2.mean == r.cv.best.r2.mean);
  CHECK(back.importance.size() == 3);

  auto bad = site_result_to_json(r);
  bad["schema"] = "cv-result-v0";
  CHECK_ERROR_KIND(site_result_from_json(bad), ErrorKind::DataError);
  CHECK_ERROR_KIND(site_result_from_json(nlohmann::json::object()), ErrorKind::DataError);

  SiteResult undefined = r;
  undefined.feature_set = FeatureSet::S2Meteo;
  undefined.cv.best.r2 = Summary{};
  const std::vector<SiteResult> both = {r, undefined};
  const auto report = report_json(both);
  CHECK(report["schema"] == "report-v1");
  const auto& cell = report["sites"]["site2"]["S2"];
  CHECK(cell["r2_mean"].get<double>() == r.cv.best.r2.mean);
  CHECK(cell["n_weeks"] == 15);
  CHECK(cell["folds"] == 3);
  CHECK(cell["importance"][0]["name"] == "B11");
  CHECK(cell["importance"][0]["scaled"] == 100.0);
  CHECK(report["sites"]["site2"]["S2+Meteo"]["r2_mean"].is_null());

  const auto text = render_report_tables(both);
  CHECK(text.find(format_cell(r.cv.best.r2.mean, r.cv.best.mae.mean)) != std::string::npos);
  CHECK(text.find("NA (") != std::string::npos);
  CHECK(text.find("B11 100.000") != std::string::npos);
  CHECK(text.find("B8A 0.000") != std::string::npos);
  CHECK(text.find(" \n") == std::string::npos);
}
