#include <cmath>
#include <numeric>

#include "cart_oracle.hpp"
#include "helpers.hpp"

#include "canopyflux/forest.hpp"
#include "canopyflux/random.hpp"

using namespace canopyflux;

namespace {

Matrix to_matrix(const oracle::Rows& rows) {
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

struct Dataset {
  oracle::Rows x;
  std::vector<double> y;
};

// Small integer grids force many exact ties in x and in split quality.
Dataset random_dataset(RandomStream& rng, std::size_t n, std::size_t p, bool integer) {
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(p);
    for (auto& v : row) v = integer ? static_cast<double>(rng.below(6)) : rng.uniform(-2.0, 2.0);
    d.x.push_back(row);
    d.y.push_back(integer ? static_cast<double>(rng.below(10)) : std::sin(row[0]) + rng.normal());
  }
  return d;
}

void check_same_tree(const RegressionTree& tree, const std::vector<oracle::Node>& expected) {
  const auto& nodes = tree.nodes();
  REQUIRE(nodes.size() == expected.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CHECK(nodes[i].feature == expected[i].feature);
    CHECK(nodes[i].threshold == expected[i].threshold);
    CHECK(nodes[i].n_samples == expected[i].n);
    CHECK(nodes[i].left == expected[i].left);
    CHECK(nodes[i].right == expected[i].right);
    CHECK(nodes[i].value == expected[i].value);
    if (expected[i].feature >= 0) CHECK(testing::rel_err(nodes[i].sse_reduction, expected[i].reduction) < 1e-9);
  }
}

}  // namespace

TEST_CASE("best split on a step") {
  Matrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i + 1);
  const std::vector<double> y = {0, 0, 1, 1};
  const auto rows = iota(4);
  const std::vector<std::size_t> features = {0};
  const auto split = best_split(x, y, rows, features);
  REQUIRE(split.has_value());
  CHECK(split->feature == 0);
  CHECK(split->threshold == 2.5);
  CHECK(split->sse_reduction == 1.0);

  const std::vector<double> flat = {3, 3, 3, 3};
  CHECK_FALSE(best_split(x, flat, rows, features).has_value());

  Matrix constant_x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) constant_x(i, 0) = 7.0;
  CHECK_FALSE(best_split(constant_x, y, rows, features).has_value());

  // min_node_size 3 leaves no admissible threshold for 4 rows.
  CHECK_FALSE(best_split(x, y, rows, features, 3).has_value());
}

TEST_CASE("best split tie breaking") {
  // Two identical columns: the lower feature index wins.
  Matrix x(4, 2);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = x(i, 1) = static_cast<double>(i);
  const std::vector<double> y = {0, 0, 1, 1};
  const std::vector<std::size_t> both = {0, 1};
  CHECK(best_split(x, y, iota(4), both)->feature == 0);

  // Symmetric target: thresholds 0.5 and 1.5 tie, the lower one wins.
  Matrix line(3, 1);
  for (std::size_t i = 0; i < 3; ++i) line(i, 0) = static_cast<double>(i);
  const std::vector<double> v = {0, 1, 2};
  const std::vector<std::size_t> one = {0};
  CHECK(best_split(line, v, iota(3), one)->threshold == 0.5);
}

TEST_CASE("midpoint falls back to the lower value for adjacent doubles") {
  Matrix x(2, 1);
  x(0, 0) = 1.0;
  x(1, 0) = std::nextafter(1.0, 2.0);
  const std::vector<double> y = {0, 1};
  const std::vector<std::size_t> f = {0};
  const auto split = best_split(x, y, iota(2), f);
  REQUIRE(split.has_value());
  CHECK(split->threshold == 1.0);
}

TEST_CASE("single trees match the brute-force CART oracle") {
  RandomStream rng(1234);
  for (int instance = 0; instance < 40; ++instance) {
    CAPTURE(instance);
    const bool integer = instance % 2 == 0;
    const std::size_t p = 1 + rng.below(4);
    const auto d = random_dataset(rng, 8 + rng.below(40), p, integer);
    const std::size_t min_node = 1 + rng.below(3);
    const auto expected = oracle::fit(d.x, d.y, min_node);

    RandomStream tree_rng(static_cast<std::uint64_t>(instance));
    const auto tree = fit_tree(to_matrix(d.x), d.y, {p, min_node, false}, tree_rng);
    check_same_tree(tree, expected);
  }
}

TEST_CASE("unpruned trees memorize distinct rows") {
  RandomStream rng(77);
  for (int instance = 0; instance < 10; ++instance) {
    const auto d = random_dataset(rng, 30, 3, false);
    const auto x = to_matrix(d.x);
    RandomStream tree_rng(1);
    const auto tree = fit_tree(x, d.y, {3, 1, false}, tree_rng);
    for (std::size_t i = 0; i < d.y.size(); ++i) CHECK(tree.predict(x.row(i)) == d.y[i]);
    CHECK(tree.leaf_count() == d.y.size());
  }
}

TEST_CASE("constant target gives a single leaf") {
  Matrix x(10, 2);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
  const std::vector<double> y(10, 0.1);
  RandomStream rng(1);
  const auto tree = fit_tree(x, y, {2, 1, true}, rng);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.predict(x.row(3)) == 0.1);
}

TEST_CASE("tree parameter validation") {
  Matrix x(4, 2);
  const std::vector<double> y = {1, 2, 3, 4};
  RandomStream rng(1);
  CHECK_ERROR_KIND(fit_tree(x, y, {0, 1, true}, rng), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(fit_tree(x, y, {3, 1, true}, rng), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(fit_tree(Matrix(0, 2), std::vector<double>{}, {1, 1, true}, rng), ErrorKind::EmptyTrainingSet);
  CHECK_ERROR_KIND(fit_tree(x, std::vector<double>{1, 2}, {1, 1, true}, rng), ErrorKind::ShapeError);
  CHECK_ERROR_KIND(fit_forest(x, y, ForestConfig{0}), ErrorKind::ConfigError);
  CHECK_ERROR_KIND(fit_forest(x, y, ForestConfig{}, {"only_one"}), ErrorKind::ShapeError);
}

TEST_CASE("forest determinism") {
  RandomStream rng(5);
  const auto d = random_dataset(rng, 60, 5, false);
  const auto x = to_matrix(d.x);
  ForestConfig config{50, 2, 3, true, 99};
  const auto a = fit_forest(x, d.y, config, {}, 1);
  const auto b = fit_forest(x, d.y, config, {}, 1);
  const auto c = fit_forest(x, d.y, config, {}, 4);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.feature_names() == std::vector<std::string>{"x0", "x1", "x2", "x3", "x4"});

  config.seed = 100;
  const auto other = fit_forest(x, d.y, config, {}, 1);
  CHECK_FALSE(a == other);

  // Tree t depends only on (seed, t): a smaller forest is a prefix.
  ForestConfig small = config;
  small.n_trees = 10;
  const auto prefix = fit_forest(x, d.y, small, {}, 2);
  for (std::size_t t = 0; t < 10; ++t) CHECK(prefix.trees()[t] == other.trees()[t]);
}

TEST_CASE("forest prediction is the mean over trees") {
  RandomStream rng(6);
  const auto d = random_dataset(rng, 40, 3, false);
  const auto x = to_matrix(d.x);
  const auto forest = fit_forest(x, d.y, ForestConfig{25, 1, 2, true, 3});
  const std::vector<double> probe = {0.1, -0.4, 1.2};
  double sum = 0.0;
  for (const auto& tree : forest.trees()) sum += tree.predict(probe);
  CHECK(testing::rel_err(forest.predict(probe), sum / 25.0) < 1e-14);
  CHECK_ERROR_KIND(forest.predict(std::vector<double>{0.1, 0.2}), ErrorKind::ShapeError);
  CHECK(forest.predict(x).size() == 40);

  // Without bootstrap and with mtry = p every tree is the same, so the
  // ensemble reproduces the training targets exactly.
  const auto memo = fit_forest(x, d.y, ForestConfig{10, 3, 1, false, 3});
  for (std::size_t i = 0; i < d.y.size(); ++i) CHECK(memo.predict(x.row(i)) == d.y[i]);
}

TEST_CASE("importance favours the informative feature") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream rng(seed);
    Matrix x(60, 2);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
      x(i, 0) = rng.uniform();
      x(i, 1) = rng.uniform();
      y[i] = 3.0 * x(i, 0) + 0.3 * rng.normal();
    }
    const auto forest = fit_forest(x, y, ForestConfig{100, 1, 5, true, seed});
    const auto imp = raw_importance(forest);
    REQUIRE(imp.size() == 2);
    wins += imp[0] > imp[1] ? 1 : 0;
  }
  CHECK(wins == 20);
}

TEST_CASE("forest json persistence") {
  RandomStream rng(8);
  const auto d = random_dataset(rng, 30, 3, false);
  const auto forest = fit_forest(to_matrix(d.x), d.y, ForestConfig{5, 2, 2, true, 1}, {"B4", "B8", "B11"});
  testing::TempDir dir("forest");
  save_forest(forest, dir / "f.json");
  const auto back = load_forest(dir / "f.json");
  CHECK(back == forest);
  const std::vector<double> probe = {0.3, 0.2, -1.0};
  CHECK(back.predict(probe) == forest.predict(probe));

  auto doc = forest_to_json(forest);
  doc["schema"] = "forest-v2";
  CHECK_ERROR_KIND(forest_from_json(doc), ErrorKind::DataError);

  doc = forest_to_json(forest);
  doc.erase("trees");
  CHECK_ERROR_KIND(forest_from_json(doc), ErrorKind::DataError);

  // A child pointing backwards would make a cycle.
  doc = forest_to_json(forest);
  const auto first_split = std::find_if(forest.trees()[0].nodes().begin(), forest.trees()[0].nodes().end(),
                                        [](const auto& n) { return !n.is_leaf(); });
  REQUIRE(first_split != forest.trees()[0].nodes().end());
  nlohmann::json tampered = doc;
  const auto split_index = first_split - forest.trees()[0].nodes().begin();
  tampered["trees"][0]["left"][split_index] = split_index;
  CHECK_ERROR_KIND(forest_from_json(tampered), ErrorKind::DataError);
}
