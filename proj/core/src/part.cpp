#include "amlprof/part.hpp"

#include <algorithm>
#include <numeric>

#include "amlprof/tree.hpp"

namespace amlprof {

namespace {

struct PartialNode {
  bool expanded = false;
  int label = 0;
  std::vector<double> counts;
  // Holds the split test; split.leaf is true while this node is a leaf.
  TreeNode split;
  std::vector<PartialNode> children;

  bool leaf() const { return split.leaf; }
  double coverage() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }
};

struct Builder {
  const Instances& data;
  const InductionParams& params;

  double estimate(const PartialNode& n) const {
    const double cov = n.coverage();
    const double e = cov - (cov > 0.0 ? n.counts[static_cast<std::size_t>(n.label)] : 0.0);
    return e + detail::pessimistic_extra_errors(cov, e, params.pruning_confidence);
  }

  std::size_t errors(std::span<const std::size_t> rows, int label) const {
    std::size_t e = 0;
    for (std::size_t r : rows) e += data.y[r] != label ? 1 : 0;
    return e;
  }

  PartialNode build(std::span<const std::size_t> rows, std::span<const std::size_t> prune_rows, int parent_label) const {
    PartialNode node;
    node.expanded = true;
    node.counts = detail::class_counts(data, rows);
    node.label = rows.empty() ? parent_label : detail::majority(node.counts);
    const double n = static_cast<double>(rows.size());
    if (rows.empty() || node.counts[static_cast<std::size_t>(node.label)] == n ||
        n < 2.0 * params.min_instances) {
      return node;
    }
    const auto choice = detail::best_split(data, rows, params.min_instances, true);
    if (!choice) return node;
    node.split.leaf = false;
    node.split.attribute = choice->attribute;
    node.split.nominal = choice->nominal;
    node.split.threshold = choice->threshold;

    const auto parts = detail::partition(data, rows, node.split);
    const auto prune_parts = detail::partition(data, prune_rows, node.split);
    std::vector<double> child_entropy(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) child_entropy[i] = detail::entropy(detail::class_counts(data, parts[i]));
    std::vector<std::size_t> order(parts.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return child_entropy[a] < child_entropy[b]; });

    node.children.resize(parts.size());
    for (std::size_t ci : order) {
      node.children[ci] = build(parts[ci], prune_parts[ci], node.label);
      if (!node.children[ci].leaf()) break;
    }
    const bool all_leaves = std::all_of(node.children.begin(), node.children.end(),
                                        [](const PartialNode& c) { return c.expanded && c.leaf(); });
    if (!all_leaves) return node;

    bool collapse = false;
    if (params.reduced_error_pruning) {
      std::size_t subtree = 0;
      for (std::size_t i = 0; i < parts.size(); ++i) subtree += errors(prune_parts[i], node.children[i].label);
      collapse = errors(prune_rows, node.label) <= subtree;
    } else {
      double subtree = 0.0;
      for (const auto& c : node.children) subtree += estimate(c);
      collapse = estimate(node) <= subtree;
    }
    if (collapse) {
      node.split.leaf = true;
      node.children.clear();
    }
    return node;
  }
};

struct BestLeaf {
  const PartialNode* node = nullptr;
  std::vector<Condition> path;
};

void find_best_leaf(const PartialNode& node, std::vector<Condition>& path, BestLeaf& best) {
  if (!node.expanded) return;
  if (node.leaf()) {
    if (node.coverage() > 0.0 && (!best.node || node.coverage() > best.node->coverage())) {
      best.node = &node;
      best.path = path;
    }
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (node.split.nominal) {
      path.push_back({node.split.attribute, Op::eq, static_cast<double>(i)});
    } else {
      path.push_back({node.split.attribute, i == 0 ? Op::le : Op::gt, node.split.threshold});
    }
    find_best_leaf(node.children[i], path, best);
    path.pop_back();
  }
}

}  // namespace

RuleSet part_induce(const Instances& data, const InductionParams& params) {
  params.validate();
  data.validate();
  if (data.size() == 0) throw DataError("cannot induce rules from no instances");

  RuleSet rs;
  rs.schema = data.schema;
  rs.num_classes = data.num_classes;
  rs.algorithm = "part";
  rs.params = params;

  std::vector<std::size_t> remaining(data.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  const std::vector<std::size_t> none;
  std::mt19937_64 rng(params.seed);
  const Builder builder{data, params};

  while (!remaining.empty()) {
    std::vector<std::size_t> grow_rows, prune_rows;
    if (params.reduced_error_pruning) {
      std::tie(grow_rows, prune_rows) = detail::stratified_holdout(data, remaining, params.folds_for_rep, rng);
      if (grow_rows.empty()) std::swap(grow_rows, prune_rows);
    } else {
      grow_rows = remaining;
    }
    const PartialNode root = builder.build(grow_rows, prune_rows, 0);
    std::vector<Condition> path;
    BestLeaf best;
    find_best_leaf(root, path, best);
    if (best.node == &root && root.coverage() < params.min_instances) break;

    Rule rule;
    rule.conditions = normalize_conditions(best.path);
    rule.predicted_class = best.node->label;
    std::vector<std::size_t> rest;
    rest.reserve(remaining.size());
    for (std::size_t r : remaining) {
      if (!rule.matches(data.x.row(r))) rest.push_back(r);
    }
    remaining.swap(rest);
    rs.rules.push_back(std::move(rule));
  }

  const auto leftover = detail::class_counts(data, remaining);
  if (!remaining.empty()) {
    rs.default_class = detail::majority(leftover);
  } else {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    rs.default_class = detail::majority(detail::class_counts(data, all));
  }
  rs.recount(data);
  return rs;
}

}  // namespace amlprof
