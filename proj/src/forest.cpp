#include "canopyflux/forest.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "canopyflux/csv.hpp"
#include "canopyflux/errors.hpp"
#include "canopyflux/parallel.hpp"

namespace canopyflux {

namespace {

constexpr std::uint64_t kTreeStreamTag = 0x7472656573ULL;  // "trees"

bool is_constant(std::span<const double> y, std::span<const std::size_t> rows) {
  for (std::size_t r : rows) {
    if (y[r] != y[rows.front()]) return false;
  }
  return true;
}

// Sums in ascending value order so the mean does not depend on row order;
// exact for constant targets.
double node_mean(std::span<const double> y, std::span<const std::size_t> rows) {
  if (is_constant(y, rows)) return y[rows.front()];
  std::vector<double> values;
  values.reserve(rows.size());
  for (std::size_t r : rows) values.push_back(y[r]);
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(rows.size());
}

double node_sse(std::span<const double> y, std::span<const std::size_t> rows) {
  const double mean = node_mean(y, rows);
  double sse = 0.0;
  for (std::size_t r : rows) sse += (y[r] - mean) * (y[r] - mean);
  return sse;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const TreeParams& params, RandomStream& rng)
      : x_(x), y_(y), params_(params), rng_(rng), all_features_(x.cols()) {
    std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
  }

  std::vector<RegressionTree::Node> build(std::vector<std::size_t> rows) {
    grow(rows);
    return std::move(nodes_);
  }

 private:
  std::size_t grow(std::vector<std::size_t>& rows) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({});
    nodes_[id].n_samples = rows.size();
    nodes_[id].value = node_mean(y_, rows);

    if (rows.size() < 2 * params_.min_node_size || is_constant(y_, rows)) return id;

    const auto features = sample_features();
    const auto split = best_split(x_, y_, rows, features, params_.min_node_size);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (std::size_t r : rows) {
      (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = static_cast<std::int64_t>(split->feature);
    nodes_[id].threshold = split->threshold;
    nodes_[id].sse_reduction = split->sse_reduction;
    const std::size_t l = grow(left);
    nodes_[id].left = static_cast<std::int64_t>(l);
    const std::size_t r = grow(right);
    nodes_[id].right = static_cast<std::int64_t>(r);
    return id;
  }

  // Fresh uniform draw of mtry features without replacement, returned sorted.
  std::vector<std::size_t> sample_features() {
    auto pool = all_features_;
    const std::size_t p = pool.size();
    for (std::size_t i = 0; i < params_.mtry; ++i) {
      std::swap(pool[i], pool[i + rng_.below(p - i)]);
    }
    pool.resize(params_.mtry);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const TreeParams& params_;
  RandomStream& rng_;
  std::vector<std::size_t> all_features_;
  std::vector<RegressionTree::Node> nodes_;
};

void validate_training_data(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0 || y.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training rows");
  if (x.rows() != y.size()) {
    throw Error(ErrorKind::ShapeError, fmt::format("X has {} rows but y has {} values", x.rows(), y.size()));
  }
  if (x.cols() == 0) throw Error(ErrorKind::ShapeError, "X has no feature columns");
}

}  // namespace

std::optional<SplitCandidate> best_split(const Matrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features, std::size_t min_node_size) {
  const std::size_t n = rows.size();
  if (n < 2 || features.empty() || is_constant(y, rows)) return std::nullopt;
  min_node_size = std::max<std::size_t>(min_node_size, 1);

  const double parent_sse = node_sse(y, rows);
  double total = 0.0;
  for (std::size_t r : rows) total += y[r];

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, double>> order(n);  // (x, y)
  for (std::size_t feature : features) {
    for (std::size_t i = 0; i < n; ++i) order[i] = {x(rows[i], feature), y[rows[i]]};
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double left_sum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      left_sum += order[i].second;
      const std::size_t n_left = i + 1;
      const std::size_t n_right = n - n_left;
      if (order[i].first == order[i + 1].first) continue;
      if (n_left < min_node_size || n_right < min_node_size) continue;

      const double mean_left = left_sum / static_cast<double>(n_left);
      const double mean_right = (total - left_sum) / static_cast<double>(n_right);
      const double diff = mean_left - mean_right;
      const double reduction =
          static_cast<double>(n_left) * static_cast<double>(n_right) / static_cast<double>(n) * diff * diff;
      if (!(reduction > kSplitTieTolerance * parent_sse)) continue;
      if (best && !(reduction > best->sse_reduction * (1.0 + kSplitTieTolerance))) continue;

      double threshold = 0.5 * (order[i].first + order[i + 1].first);
      if (!(threshold < order[i + 1].first)) threshold = order[i].first;
      best = SplitCandidate{feature, threshold, reduction};
    }
  }
  return best;
}

double RegressionTree::predict(std::span<const double> row) const {
  std::size_t id = 0;
  while (!nodes_[id].is_leaf()) {
    const auto& node = nodes_[id];
    id = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                               : node.right);
  }
  return nodes_[id].value;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params, RandomStream& rng) {
  validate_training_data(x, y);
  if (params.mtry < 1 || params.mtry > x.cols()) {
    throw Error(ErrorKind::ConfigError, fmt::format("mtry must be in [1, {}], got {}", x.cols(), params.mtry));
  }
  if (params.min_node_size < 1) throw Error(ErrorKind::ConfigError, "min_node_size must be >= 1");

  const std::size_t n = x.rows();
  std::vector<std::size_t> rows(n);
  if (params.bootstrap) {
    for (auto& r : rows) r = rng.below(n);
    std::sort(rows.begin(), rows.end());
  } else {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  TreeBuilder builder(x, y, params, rng);
  return RegressionTree(builder.build(std::move(rows)));
}

Forest::Forest(ForestConfig config, std::vector<std::string> feature_names, std::vector<RegressionTree> trees)
    : config_(config), feature_names_(std::move(feature_names)), trees_(std::move(trees)) {}

double Forest::predict(std::span<const double> row) const {
  if (row.size() != n_features()) {
    throw Error(ErrorKind::ShapeError,
                fmt::format("prediction row has {} features, forest expects {}", row.size(), n_features()));
  }
  if (trees_.empty()) throw Error(ErrorKind::ShapeError, "forest has no trees");
  const double first = trees_.front().predict(row);
  double sum = 0.0;
  bool unanimous = true;
  for (const auto& tree : trees_) {
    const double v = tree.predict(row);
    unanimous = unanimous && v == first;
    sum += v;
  }
  // A unanimous ensemble returns the shared value exactly.
  return unanimous ? first : sum / static_cast<double>(trees_.size());
}

std::vector<double> Forest::predict(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(x.row(i));
  return out;
}

RandomStream tree_stream(std::uint64_t seed, std::size_t tree_index) {
  return RandomStream::derive(seed, {kTreeStreamTag, static_cast<std::uint64_t>(tree_index)});
}

Forest fit_forest(const Matrix& x, std::span<const double> y, ForestConfig config,
                  std::vector<std::string> feature_names, unsigned threads) {
  validate_training_data(x, y);
  if (config.n_trees < 1) throw Error(ErrorKind::ConfigError, "n_trees must be >= 1");
  if (config.mtry == 0) config.mtry = std::max<std::size_t>(1, x.cols() / 3);
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x.cols(); ++j) feature_names.push_back(fmt::format("x{}", j));
  }
  if (feature_names.size() != x.cols()) {
    throw Error(ErrorKind::ShapeError,
                fmt::format("{} feature names for {} columns", feature_names.size(), x.cols()));
  }

  const TreeParams params{config.mtry, config.min_node_size, config.bootstrap};
  std::vector<RegressionTree> trees(config.n_trees);
  parallel_for(config.n_trees, threads, [&](std::size_t t) {
    auto rng = tree_stream(config.seed, t);
    trees[t] = fit_tree(x, y, params, rng);
  });
  return Forest(config, std::move(feature_names), std::move(trees));
}

std::vector<double> raw_importance(const Forest& forest) {
  std::vector<double> importance(forest.n_features(), 0.0);
  for (const auto& tree : forest.trees()) {
    for (const auto& node : tree.nodes()) {
      if (!node.is_leaf()) importance[static_cast<std::size_t>(node.feature)] += node.sse_reduction;
    }
  }
  return importance;
}

nlohmann::json forest_to_json(const Forest& forest) {
  const auto& c = forest.config();
  nlohmann::json doc;
  doc["schema"] = "forest-v1";
  doc["config"] = {{"n_trees", c.n_trees},
                   {"mtry", c.mtry},
                   {"min_node_size", c.min_node_size},
                   {"bootstrap", c.bootstrap},
                   {"seed", c.seed}};
  doc["feature_names"] = forest.feature_names();
  auto trees = nlohmann::json::array();
  for (const auto& tree : forest.trees()) {
    nlohmann::json t;
    std::vector<std::int64_t> feature, left, right;
    std::vector<double> threshold, value, reduction;
    std::vector<std::size_t> n_samples;
    for (const auto& node : tree.nodes()) {
      feature.push_back(node.feature);
      threshold.push_back(node.threshold);
      value.push_back(node.value);
      left.push_back(node.left);
      right.push_back(node.right);
      n_samples.push_back(node.n_samples);
      reduction.push_back(node.sse_reduction);
    }
    t["feature"] = feature;
    t["threshold"] = threshold;
    t["value"] = value;
    t["left"] = left;
    t["right"] = right;
    t["n_samples"] = n_samples;
    t["sse_reduction"] = reduction;
    trees.push_back(std::move(t));
  }
  doc["trees"] = std::move(trees);
  return doc;
}

Forest forest_from_json(const nlohmann::json& doc) {
  try {
    const auto schema = doc.at("schema").get<std::string>();
    if (schema != "forest-v1") throw Error(ErrorKind::DataError, fmt::format("unsupported forest schema '{}'", schema));
    const auto& c = doc.at("config");
    ForestConfig config{c.at("n_trees").get<std::size_t>(), c.at("mtry").get<std::size_t>(),
                        c.at("min_node_size").get<std::size_t>(), c.at("bootstrap").get<bool>(),
                        c.at("seed").get<std::uint64_t>()};
    auto names = doc.at("feature_names").get<std::vector<std::string>>();
    std::vector<RegressionTree> trees;
    for (const auto& t : doc.at("trees")) {
      const auto feature = t.at("feature").get<std::vector<std::int64_t>>();
      const auto threshold = t.at("threshold").get<std::vector<double>>();
      const auto value = t.at("value").get<std::vector<double>>();
      const auto left = t.at("left").get<std::vector<std::int64_t>>();
      const auto right = t.at("right").get<std::vector<std::int64_t>>();
      const auto n_samples = t.at("n_samples").get<std::vector<std::size_t>>();
      const auto reduction = t.at("sse_reduction").get<std::vector<double>>();
      const std::size_t m = feature.size();
      if (m == 0 || threshold.size() != m || value.size() != m || left.size() != m || right.size() != m ||
          n_samples.size() != m || reduction.size() != m) {
        throw Error(ErrorKind::DataError, "forest-v1 node arrays have inconsistent lengths");
      }
      std::vector<RegressionTree::Node> nodes(m);
      for (std::size_t i = 0; i < m; ++i) {
        nodes[i] = {feature[i], threshold[i], value[i], left[i], right[i], n_samples[i], reduction[i]};
        // Children always follow their parent, which rules out cycles.
        const auto in_range = [m, i](std::int64_t v) {
          return v > static_cast<std::int64_t>(i) && static_cast<std::size_t>(v) < m;
        };
        if (feature[i] >= static_cast<std::int64_t>(names.size()) ||
            (feature[i] >= 0 && (!in_range(left[i]) || !in_range(right[i])))) {
          throw Error(ErrorKind::DataError, fmt::format("forest-v1 node {} is malformed", i));
        }
      }
      trees.emplace_back(std::move(nodes));
    }
    return Forest(config, std::move(names), std::move(trees));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataError, fmt::format("malformed forest document: {}", e.what()));
  }
}

void save_forest(const Forest& forest, const std::filesystem::path& path) {
  write_text_file(path, forest_to_json(forest).dump() + "\n");
}

Forest load_forest(const std::filesystem::path& path) {
  try {
    return forest_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::DataError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

}  // namespace canopyflux
