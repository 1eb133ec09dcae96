#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "canopyflux/matrix.hpp"
#include "canopyflux/random.hpp"

namespace canopyflux {

// Regression random forest: CART trees grown on bootstrap samples with a
// fresh random feature subset (mtry) at every node.

struct SplitCandidate {
  std::size_t feature = 0;
  double threshold = 0.0;      // x <= threshold goes left
  double sse_reduction = 0.0;  // SSE(parent) - SSE(left) - SSE(right)
};

/// Reductions within this relative distance of the current best count as
/// ties; ties go to the lower feature index, then the lower threshold.
inline constexpr double kSplitTieTolerance = 1e-12;

/// Exhaustive search over `features` and the midpoints between consecutive
/// distinct sorted values of `rows`. Returns nullopt when the target is
/// constant, when no threshold leaves `min_node_size` samples on both sides,
/// or when no split reduces SSE.
std::optional<SplitCandidate> best_split(const Matrix& x, std::span<const double> y,
                                         std::span<const std::size_t> rows,
                                         std::span<const std::size_t> features, std::size_t min_node_size = 1);

struct TreeParams {
  std::size_t mtry = 1;
  std::size_t min_node_size = 5;  // minimum samples in each child
  bool bootstrap = true;
};

class RegressionTree {
 public:
  struct Node {
    std::int64_t feature = -1;  // -1 for leaves
    double threshold = 0.0;
    double value = 0.0;  // mean training target of the node
    std::int64_t left = -1;
    std::int64_t right = -1;
    std::size_t n_samples = 0;
    double sse_reduction = 0.0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const;
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t leaf_count() const;

  friend bool operator==(const RegressionTree&, const RegressionTree&) = default;

 private:
  std::vector<Node> nodes_;  // nodes_[0] is the root
};

/// Grows one tree. Throws EmptyTrainingSet when there are no rows.
RegressionTree fit_tree(const Matrix& x, std::span<const double> y, const TreeParams& params, RandomStream& rng);

struct ForestConfig {
  std::size_t n_trees = 500;
  std::size_t mtry = 0;  // 0 selects max(1, p / 3)
  std::size_t min_node_size = 5;
  bool bootstrap = true;
  std::uint64_t seed = 1;

  friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

class Forest {
 public:
  Forest(ForestConfig config, std::vector<std::string> feature_names, std::vector<RegressionTree> trees);

  /// Mean of the per-tree predictions. Throws ShapeError on a row of the
  /// wrong width.
  double predict(std::span<const double> row) const;
  std::vector<double> predict(const Matrix& x) const;

  const ForestConfig& config() const { return config_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t n_features() const { return feature_names_.size(); }

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  ForestConfig config_;
  std::vector<std::string> feature_names_;
  std::vector<RegressionTree> trees_;
};

/// Random stream of tree `tree_index` in a forest seeded with `seed`.
RandomStream tree_stream(std::uint64_t seed, std::size_t tree_index);

/// Each tree draws from its own `tree_stream`, so the result is identical for
/// every `threads` value.
Forest fit_forest(const Matrix& x, std::span<const double> y, ForestConfig config,
                  std::vector<std::string> feature_names = {}, unsigned threads = 1);

/// Per-feature sum of sse_reduction over all splits of all trees.
std::vector<double> raw_importance(const Forest& forest);

/// Versioned persistence (schema "forest-v1").
nlohmann::json forest_to_json(const Forest& forest);
Forest forest_from_json(const nlohmann::json& doc);  // DataError on unknown schema
void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace canopyflux
