#include <cmath>
#include <set>

#include "helpers.hpp"

#include "canopyflux/csv.hpp"
#include "canopyflux/features.hpp"
#include "canopyflux/random.hpp"

using namespace canopyflux;

namespace {

WeeklySpectra spectra_week(IsoWeek w, double fill) {
  WeeklySpectra s{w, {}, 2};
  s.band_means.fill(fill);
  return s;
}

}  // namespace

TEST_CASE("feature set names") {
  CHECK(to_string(FeatureSet::S2) == "S2");
  CHECK(to_string(FeatureSet::S2Meteo) == "S2+Meteo");
  CHECK(parse_feature_set("S2+Meteo") == FeatureSet::S2Meteo);
  CHECK(parse_feature_set("s2_meteo") == FeatureSet::S2Meteo);
  CHECK_FALSE(parse_feature_set("S3").has_value());
  CHECK(predictor_names(FeatureSet::S2).size() == 12);
  const auto names = predictor_names(FeatureSet::S2Meteo);
  REQUIRE(names.size() == 14);
  CHECK(names[12] == "Tair");
  CHECK(names[13] == "Prpc");
  CHECK(feature_table_filename("site1", FeatureSet::S2Meteo) == "features_site1_s2_meteo.csv");
}

TEST_CASE("weekly join is an intersection") {
  WeeklyTranspiration t{"s", 12.0, {}};
  for (unsigned w = 20; w <= 30; ++w) t.values.push_back({{2020, w}, 0.1 * w, 7});
  std::vector<WeeklySpectra> s2;
  for (unsigned w = 18; w <= 28; w += 2) s2.push_back(spectra_week({2020, w}, w / 100.0));
  std::vector<WeeklyMeteo> meteo;
  for (unsigned w = 24; w <= 34; ++w) meteo.push_back({{2020, w}, 10.0 + w, 2.0 * w, 7});

  const auto only_s2 = join_weekly(t, s2, {}, FeatureSet::S2);
  std::set<unsigned> weeks;
  for (const auto& r : only_s2.rows) weeks.insert(r.week.week);
  CHECK(weeks == std::set<unsigned>{20, 22, 24, 26, 28});
  CHECK(only_s2.rows[0].predictors.size() == 12);
  CHECK(only_s2.rows[0].target == 0.1 * 20);
  CHECK(only_s2.rows[0].predictors[0] == 0.2);

  const auto with_meteo = join_weekly(t, s2, meteo, FeatureSet::S2Meteo);
  REQUIRE(with_meteo.rows.size() == 3);
  CHECK(with_meteo.rows[0].week == IsoWeek{2020, 24});
  CHECK(with_meteo.rows[0].predictors[12] == 34.0);
  CHECK(with_meteo.rows[0].predictors[13] == 48.0);
  CHECK(with_meteo.predictor_names == predictor_names(FeatureSet::S2Meteo));

  std::vector<WeeklySpectra> disjoint = {spectra_week({2021, 5}, 0.1)};
  try {
    join_weekly(t, disjoint, {}, FeatureSet::S2);
    FAIL("expected NoOverlap");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoOverlap);
    CHECK(std::string(e.what()).find("transpiration=11 weeks, spectra=1 weeks") != std::string::npos);
  }
  CHECK_ERROR_KIND(join_weekly(t, s2, {}, FeatureSet::S2Meteo), ErrorKind::NoOverlap);
}

TEST_CASE("design matrix round trip") {
  RandomStream rng(3);
  FeatureTable table{"s", FeatureSet::S2, predictor_names(FeatureSet::S2), {}};
  std::vector<IsoWeek> weeks;
  for (unsigned w = 1; w <= 9; ++w) {
    FeatureRow row{{2021, w}, std::vector<double>(12), rng.uniform()};
    for (auto& v : row.predictors) v = rng.uniform();
    weeks.push_back(row.week);
    table.rows.push_back(row);
  }
  const auto design = to_matrix(table);
  CHECK(design.x.rows() == 9);
  CHECK(design.x.cols() == 12);
  CHECK(design.x(4, 7) == table.rows[4].predictors[7]);
  const auto back = from_matrix(design, weeks, "s", FeatureSet::S2);
  REQUIRE(back.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < back.rows.size(); ++i) {
    CHECK(back.rows[i].predictors == table.rows[i].predictors);
    CHECK(back.rows[i].target == table.rows[i].target);
  }

  testing::TempDir dir("features");
  const auto path = dir / "f.csv";
  write_text_file(path, feature_table_csv(table));
  const auto read = read_feature_table_csv(path, "s", FeatureSet::S2);
  CHECK(read.predictor_names == table.predictor_names);
  REQUIRE(read.rows.size() == table.rows.size());
  for (std::size_t i = 0; i < read.rows.size(); ++i) {
    CHECK(read.rows[i].week == table.rows[i].week);
    CHECK(read.rows[i].predictors == table.rows[i].predictors);
    CHECK(read.rows[i].target == table.rows[i].target);
  }

  auto broken = table;
  broken.rows[2].predictors[5] = std::nan("");
  try {
    to_matrix(broken);
    FAIL("expected DataError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DataError);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    CHECK(std::string(e.what()).find("'B6'") != std::string::npos);
  }
  broken = table;
  broken.rows[0].target = std::numeric_limits<double>::infinity();
  CHECK_ERROR_KIND(to_matrix(broken), ErrorKind::DataError);
  CHECK_ERROR_KIND(to_matrix(FeatureTable{}), ErrorKind::EmptyInput);

  write_text_file(dir / "order.csv", "iso_week,B1,transpiration_mm_day\n2021-W03,1,1\n2021-W02,1,1\n");
  CHECK_ERROR_KIND(read_feature_table_csv(dir / "order.csv", "s", FeatureSet::S2), ErrorKind::RowError);
  write_text_file(dir / "hdr.csv", "week,B1,target\n");
  CHECK_ERROR_KIND(read_feature_table_csv(dir / "hdr.csv", "s", FeatureSet::S2), ErrorKind::SchemaError);
}
