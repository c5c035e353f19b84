#pragma once

#include "iotddos/features.hpp"
#include "iotddos/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace iotddos {

// 1 - sum p_c^2. Throws EmptyNode when every count is zero.
double gini_impurity(std::span<const double> counts);
double gini_impurity(double normal, double attack);

struct TreeNode {
  std::int32_t feature = -1; // -1: leaf
  double threshold = 0.0;    // x[feature] <= threshold goes left
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  double weight = 0.0; // (bootstrap-weighted) training samples reaching the node
  double impurity = 0.0;
  double attack_fraction = 0.0;

  bool is_leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeParams {
  std::size_t max_features = 0; // candidate features per split; 0 = all
  double min_samples_split = 2.0;
};

// Per-feature row orders, sorted by (value, row). Shared across the trees of
// a forest so each tree only filters instead of re-sorting.
struct Presort {
  std::vector<std::vector<std::uint32_t>> order;
  static Presort build(const Matrix& X);
};

// CART on Gini impurity, grown until pure (or unsplittable). Candidate
// thresholds are midpoints between consecutive distinct values; equal-gain
// splits go to the lowest feature index, then the smallest threshold.
class DecisionTree {
public:
  DecisionTree() = default;

  // `counts` holds per-row multiplicities (bootstrap); empty means 1 each.
  // `rng` is only consulted when params.max_features < X.cols().
  static DecisionTree fit(const Matrix& X, std::span<const ClassLabel> y, const TreeParams& params,
                          Rng* rng = nullptr, std::span<const std::uint32_t> counts = {},
                          const Presort* presort = nullptr);
  static DecisionTree from_nodes(std::vector<TreeNode> nodes, std::size_t arity);

  double predict_score(std::span<const double> row) const;
  std::size_t leaf_index(std::span<const double> row) const;

  // Unnormalized weighted impurity decrease per feature.
  std::vector<double> impurity_decrease() const;

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t arity() const noexcept { return arity_; }
  std::size_t depth() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
  std::vector<TreeNode> nodes_;
  std::size_t arity_ = 0;
};

struct ForestParams {
  std::size_t trees = 10;
  std::size_t max_features = 0; // 0: floor(sqrt(arity))
  bool bootstrap = true;
};

class RandomForest {
public:
  RandomForest() = default;
  static RandomForest fit(const Matrix& X, std::span<const ClassLabel> y, const ForestParams& params,
                          std::uint64_t seed);
  static RandomForest from_trees(std::vector<DecisionTree> trees);

  // Mean of the trees' leaf attack fractions.
  double predict_score(std::span<const double> row) const;
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

private:
  std::vector<DecisionTree> trees_;
};

// Normalized mean impurity decrease; sums to 1 unless no tree ever split.
std::vector<double> tree_feature_importance(std::span<const DecisionTree> trees);

} // namespace iotddos
