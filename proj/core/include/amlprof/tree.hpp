#pragma once

#include <optional>
#include <span>
#include <vector>

#include "amlprof/rules.hpp"

namespace amlprof {

struct TreeNode {
  bool leaf = true;
  int label = 0;
  /// Training class distribution at this node.
  std::vector<double> counts;
  std::size_t attribute = 0;
  /// Numeric splits send v <= threshold to children[0] and the rest to children[1].
  /// Nominal splits have one child per level.
  double threshold = 0.0;
  bool nominal = false;
  std::vector<TreeNode> children;

  double coverage() const;
  std::size_t child_index(std::span<const double> row) const {
    return nominal ? static_cast<std::size_t>(row[attribute]) : (row[attribute] <= threshold ? 0 : 1);
  }
};

struct DecisionTree {
  AttributeSchema schema;
  int num_classes = 0;
  InductionParams params;
  TreeNode root;

  const TreeNode& leaf_for(std::span<const double> row) const;
  int predict(std::span<const double> row) const { return leaf_for(row).label; }
  std::size_t leaf_count() const;
  std::size_t depth() const;
};

struct SplitScore {
  double info_gain = 0.0;
  double gain_ratio = 0.0;
};

/// Information gain and gain ratio of splitting `rows` on `attribute`. Nominal
/// attributes split by level. Numeric attributes split at `threshold` when given,
/// otherwise at the midpoint with the highest gain (0 if the attribute is constant).
SplitScore split_score(const Instances& data, std::span<const std::size_t> rows, std::size_t attribute,
                       std::optional<double> threshold = std::nullopt);

namespace detail {

struct SplitChoice {
  std::size_t attribute = 0;
  bool nominal = false;
  double threshold = 0.0;
  double info_gain = 0.0;
  double gain_ratio = 0.0;
};

/// Best admissible split: gain ratio is maximised among candidates whose gain is at
/// least the average positive gain. Numeric splits need both sides >= min_instances.
/// Nominal splits need every level >= min_instances, or, with allow_empty, at least two
/// non-empty levels each >= min_instances.
std::optional<SplitChoice> best_split(const Instances& data, std::span<const std::size_t> rows, int min_instances,
                                      bool allow_empty);

std::vector<std::vector<std::size_t>> partition(const Instances& data, std::span<const std::size_t> rows,
                                                const TreeNode& node);

/// Collapses subtrees whose pessimistic leaf error does not exceed the subtree's
/// estimate plus `margin`. Returns the estimated errors of the result.
double prune_pessimistic(TreeNode& node, double confidence, double margin);
/// Collapses subtrees that are no more accurate on `rows` than a leaf. Returns the
/// errors of the result on `rows`.
std::size_t prune_reduced_error(TreeNode& node, const Instances& data, std::span<const std::size_t> rows);

}  // namespace detail

/// Grows a C4.5 tree and prunes it, pessimistically by default or against a held-out
/// stratified fold when reduced_error_pruning is set. Throws DataError on empty input.
DecisionTree build_tree(const Instances& data, const InductionParams& params);
/// Grows without pruning.
DecisionTree grow_tree(const Instances& data, std::span<const std::size_t> rows, const InductionParams& params);

/// One rule per leaf ordered by descending leaf coverage; the default is the root
/// majority. Predictions match the tree on every row.
RuleSet tree_to_rules(const DecisionTree& tree);

/// build_tree followed by tree_to_rules, with rule statistics taken on `data`.
RuleSet j48_induce(const Instances& data, const InductionParams& params);

}  // namespace amlprof
