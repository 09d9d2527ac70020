#include "amlprof/tree.hpp"

#include <algorithm>
#include <numeric>

namespace amlprof {

namespace {

constexpr double kMinGain = 1e-10;

double weighted_child_entropy(const std::vector<std::vector<double>>& children, double n) {
  double h = 0.0;
  for (const auto& c : children) {
    const double size = std::accumulate(c.begin(), c.end(), 0.0);
    if (size > 0.0) h += size / n * detail::entropy(c);
  }
  return h;
}

double split_info(const std::vector<std::vector<double>>& children) {
  std::vector<double> sizes;
  sizes.reserve(children.size());
  for (const auto& c : children) sizes.push_back(std::accumulate(c.begin(), c.end(), 0.0));
  return detail::entropy(sizes);
}

SplitScore score_of(double parent_entropy, const std::vector<std::vector<double>>& children, double n) {
  SplitScore s;
  s.info_gain = parent_entropy - weighted_child_entropy(children, n);
  if (s.info_gain < 0.0) s.info_gain = 0.0;
  const double si = split_info(children);
  s.gain_ratio = si > 0.0 ? s.info_gain / si : 0.0;
  return s;
}

std::vector<std::vector<double>> level_counts(const Instances& data, std::span<const std::size_t> rows,
                                              std::size_t attribute) {
  std::vector<std::vector<double>> out(data.schema.level_count(attribute),
                                       std::vector<double>(static_cast<std::size_t>(data.num_classes), 0.0));
  for (std::size_t r : rows) {
    out[static_cast<std::size_t>(data.x(r, attribute))][static_cast<std::size_t>(data.y[r])] += 1.0;
  }
  return out;
}

struct NumericBest {
  bool found = false;
  double threshold = 0.0;
  SplitScore score;
};

// Scans the midpoints between consecutive distinct values; both sides need at least
// `min_side` rows. Keeps the highest gain, lowest threshold on ties.
NumericBest best_numeric(const Instances& data, std::span<const std::size_t> rows, std::size_t attribute,
                         double parent_entropy, std::size_t min_side) {
  const std::size_t n = rows.size();
  const auto k = static_cast<std::size_t>(data.num_classes);
  std::vector<std::pair<double, int>> vals;
  vals.reserve(n);
  for (std::size_t r : rows) vals.emplace_back(data.x(r, attribute), data.y[r]);
  std::sort(vals.begin(), vals.end());
  std::vector<std::vector<double>> sides(2, std::vector<double>(k, 0.0));
  for (const auto& v : vals) sides[1][static_cast<std::size_t>(v.second)] += 1.0;
  NumericBest best;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto c = static_cast<std::size_t>(vals[i].second);
    sides[0][c] += 1.0;
    sides[1][c] -= 1.0;
    if (vals[i].first == vals[i + 1].first) continue;
    if (i + 1 < min_side || n - i - 1 < min_side) continue;
    const SplitScore s = score_of(parent_entropy, sides, static_cast<double>(n));
    if (!best.found || s.info_gain > best.score.info_gain) {
      best.found = true;
      best.score = s;
      best.threshold = detail::split_point(vals[i].first, vals[i + 1].first);
    }
  }
  return best;
}

TreeNode grow(const Instances& data, std::span<const std::size_t> rows, int min_instances) {
  TreeNode node;
  node.counts = detail::class_counts(data, rows);
  node.label = detail::majority(node.counts);
  const double n = static_cast<double>(rows.size());
  if (node.counts[static_cast<std::size_t>(node.label)] == n) return node;
  if (n < 2.0 * min_instances) return node;
  const auto split = detail::best_split(data, rows, min_instances, false);
  if (!split) return node;
  node.leaf = false;
  node.attribute = split->attribute;
  node.nominal = split->nominal;
  node.threshold = split->threshold;
  auto parts = detail::partition(data, rows, node);
  node.children.reserve(parts.size());
  for (const auto& p : parts) node.children.push_back(grow(data, p, min_instances));
  return node;
}

void collect_rules(const TreeNode& node, std::vector<Condition>& path, std::vector<Rule>& out) {
  if (node.leaf) {
    Rule r;
    r.conditions = normalize_conditions(path);
    r.predicted_class = node.label;
    r.class_counts = node.counts;
    const double total = node.coverage();
    r.coverage = static_cast<std::size_t>(total);
    r.confidence = total > 0.0 ? node.counts[static_cast<std::size_t>(node.label)] / total : 0.0;
    out.push_back(std::move(r));
    return;
  }
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    if (node.nominal) {
      path.push_back({node.attribute, Op::eq, static_cast<double>(i)});
    } else {
      path.push_back({node.attribute, i == 0 ? Op::le : Op::gt, node.threshold});
    }
    collect_rules(node.children[i], path, out);
    path.pop_back();
  }
}

std::size_t count_leaves(const TreeNode& n) {
  if (n.leaf) return 1;
  std::size_t s = 0;
  for (const auto& c : n.children) s += count_leaves(c);
  return s;
}

std::size_t node_depth(const TreeNode& n) {
  std::size_t d = 0;
  for (const auto& c : n.children) d = std::max(d, 1 + node_depth(c));
  return d;
}

void sort_by_coverage(std::vector<Rule>& rules) {
  std::stable_sort(rules.begin(), rules.end(), [](const Rule& a, const Rule& b) { return a.coverage > b.coverage; });
}

}  // namespace

double TreeNode::coverage() const { return std::accumulate(counts.begin(), counts.end(), 0.0); }

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
  const TreeNode* n = &root;
  while (!n->leaf) n = &n->children[n->child_index(row)];
  return *n;
}

std::size_t DecisionTree::leaf_count() const { return count_leaves(root); }
std::size_t DecisionTree::depth() const { return node_depth(root); }

SplitScore split_score(const Instances& data, std::span<const std::size_t> rows, std::size_t attribute,
                       std::optional<double> threshold) {
  const auto counts = detail::class_counts(data, rows);
  const double h = detail::entropy(counts);
  const double n = static_cast<double>(rows.size());
  if (rows.empty()) return {};
  if (data.schema.is_nominal(attribute)) return score_of(h, level_counts(data, rows, attribute), n);
  if (threshold) {
    std::vector<std::vector<double>> sides(2, std::vector<double>(static_cast<std::size_t>(data.num_classes), 0.0));
    for (std::size_t r : rows) {
      sides[data.x(r, attribute) <= *threshold ? 0 : 1][static_cast<std::size_t>(data.y[r])] += 1.0;
    }
    return score_of(h, sides, n);
  }
  return best_numeric(data, rows, attribute, h, 1).score;
}

namespace detail {

std::optional<SplitChoice> best_split(const Instances& data, std::span<const std::size_t> rows, int min_instances,
                                      bool allow_empty) {
  const auto min_side = static_cast<std::size_t>(min_instances);
  const double n = static_cast<double>(rows.size());
  const double h = entropy(class_counts(data, rows));
  std::vector<SplitChoice> candidates;
  for (std::size_t j = 0; j < data.schema.size(); ++j) {
    if (data.schema.is_nominal(j)) {
      const auto children = level_counts(data, rows, j);
      std::size_t nonempty = 0;
      bool ok = true;
      for (const auto& c : children) {
        const double size = std::accumulate(c.begin(), c.end(), 0.0);
        if (size > 0.0) ++nonempty;
        if (size < static_cast<double>(min_side) && (size > 0.0 || !allow_empty)) ok = false;
      }
      if (!ok || nonempty < 2) continue;
      const SplitScore s = score_of(h, children, n);
      if (s.info_gain > kMinGain) candidates.push_back({j, true, 0.0, s.info_gain, s.gain_ratio});
    } else {
      const auto best = best_numeric(data, rows, j, h, min_side);
      if (best.found && best.score.info_gain > kMinGain) {
        candidates.push_back({j, false, best.threshold, best.score.info_gain, best.score.gain_ratio});
      }
    }
  }
  if (candidates.empty()) return std::nullopt;
  double avg = 0.0;
  for (const auto& c : candidates) avg += c.info_gain;
  avg /= static_cast<double>(candidates.size());
  const SplitChoice* best = nullptr;
  for (const auto& c : candidates) {
    if (c.info_gain < avg - 1e-12) continue;
    if (!best || c.gain_ratio > best->gain_ratio) best = &c;
  }
  return *best;
}

std::vector<std::vector<std::size_t>> partition(const Instances& data, std::span<const std::size_t> rows,
                                                const TreeNode& node) {
  const std::size_t ways = node.nominal ? data.schema.level_count(node.attribute) : 2;
  std::vector<std::vector<std::size_t>> parts(ways);
  for (std::size_t r : rows) parts[node.child_index(data.x.row(r))].push_back(r);
  return parts;
}

double prune_pessimistic(TreeNode& node, double confidence, double margin) {
  const double n = node.coverage();
  const double e = n - node.counts[static_cast<std::size_t>(node.label)];
  const double leaf_estimate = e + pessimistic_extra_errors(n, e, confidence);
  if (node.leaf) return leaf_estimate;
  double subtree = 0.0;
  for (auto& c : node.children) subtree += prune_pessimistic(c, confidence, margin);
  if (leaf_estimate <= subtree + margin) {
    node.leaf = true;
    node.children.clear();
    return leaf_estimate;
  }
  return subtree;
}

std::size_t prune_reduced_error(TreeNode& node, const Instances& data, std::span<const std::size_t> rows) {
  std::size_t leaf_errors = 0;
  for (std::size_t r : rows) leaf_errors += data.y[r] != node.label ? 1 : 0;
  if (node.leaf) return leaf_errors;
  const auto parts = partition(data, rows, node);
  std::size_t subtree = 0;
  for (std::size_t i = 0; i < node.children.size(); ++i) subtree += prune_reduced_error(node.children[i], data, parts[i]);
  if (leaf_errors <= subtree) {
    node.leaf = true;
    node.children.clear();
    return leaf_errors;
  }
  return subtree;
}

}  // namespace detail

DecisionTree grow_tree(const Instances& data, std::span<const std::size_t> rows, const InductionParams& params) {
  params.validate();
  data.validate();
  if (rows.empty()) throw DataError("cannot build a tree from no instances");
  DecisionTree t;
  t.schema = data.schema;
  t.num_classes = data.num_classes;
  t.params = params;
  t.root = grow(data, rows, params.min_instances);
  return t;
}

DecisionTree build_tree(const Instances& data, const InductionParams& params) {
  if (data.size() == 0) throw DataError("cannot build a tree from no instances");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  if (!params.reduced_error_pruning) {
    DecisionTree t = grow_tree(data, all, params);
    detail::prune_pessimistic(t.root, params.pruning_confidence, 0.1);
    return t;
  }
  std::mt19937_64 rng(params.seed);
  const auto [grow_rows, prune_rows] = detail::stratified_holdout(data, all, params.folds_for_rep, rng);
  DecisionTree t = grow_tree(data, grow_rows.empty() ? all : grow_rows, params);
  detail::prune_reduced_error(t.root, data, prune_rows);
  return t;
}

RuleSet tree_to_rules(const DecisionTree& tree) {
  RuleSet rs;
  rs.schema = tree.schema;
  rs.num_classes = tree.num_classes;
  rs.algorithm = "j48";
  rs.params = tree.params;
  std::vector<Condition> path;
  collect_rules(tree.root, path, rs.rules);
  sort_by_coverage(rs.rules);
  rs.default_class = detail::majority(tree.root.counts);
  rs.default_counts.assign(static_cast<std::size_t>(tree.num_classes), 0.0);
  return rs;
}

RuleSet j48_induce(const Instances& data, const InductionParams& params) {
  RuleSet rs = tree_to_rules(build_tree(data, params));
  rs.recount(data);
  sort_by_coverage(rs.rules);
  return rs;
}

}  // namespace amlprof
