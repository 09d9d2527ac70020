#include "amlprof/ripper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace amlprof {

namespace detail {

double foil_gain(double p0, double n0, double p1, double n1) {
  if (p1 <= 0.0 || p0 <= 0.0) return 0.0;
  return p1 * (std::log2(p1 / (p1 + n1)) - std::log2(p0 / (p0 + n0)));
}

double subset_dl(double t, double k, double p) {
  p = std::clamp(p, 0.0, 1.0);
  double bits = 0.0;
  if (k > 0.0) bits -= k * std::log2(p);
  if (t - k > 0.0) bits -= (t - k) * std::log2(1.0 - p);
  return bits;
}

double rule_theory_dl(double k, double possible) {
  if (k <= 0.0) return 0.0;
  double k_bits = std::log2(k);
  if (k > 1.0) k_bits += 2.0 * std::log2(k_bits);
  const double p = possible > 0.0 ? k / possible : 1.0;
  return 0.5 * (k_bits + subset_dl(possible, k, p));
}

double data_dl(double expected_fp_rate, double cover, double uncover, double fp, double fn) {
  const double total_bits = std::log2(cover + uncover + 1.0);
  double cover_bits = 0.0, uncover_bits = 0.0;
  if (cover > uncover) {
    const double expected = expected_fp_rate * (fp + fn);
    cover_bits = subset_dl(cover, fp, expected / cover);
    uncover_bits = uncover > 0.0 ? subset_dl(uncover, fn, fn / uncover) : 0.0;
  } else {
    const double expected = (1.0 - expected_fp_rate) * (fp + fn);
    cover_bits = cover > 0.0 ? subset_dl(cover, fp, fp / cover) : 0.0;
    uncover_bits = subset_dl(uncover, fn, expected / uncover);
  }
  return total_bits + cover_bits + uncover_bits;
}

}  // namespace detail

namespace {

using Conditions = std::vector<Condition>;

bool matches(const Conditions& cs, std::span<const double> row) {
  for (const auto& c : cs) {
    if (!c.matches(row)) return false;
  }
  return true;
}

struct ClassRule {
  Conditions conditions;
  // Coverage over the class's starting rows, by position.
  std::vector<char> mask;
};

class ClassLearner {
 public:
  ClassLearner(const Instances& data, const InductionParams& params, int cls, std::vector<std::size_t> rows,
               std::mt19937_64& rng)
      : data_(data), params_(params), cls_(cls), rows_(std::move(rows)), rng_(rng) {
    double positives = 0.0;
    for (std::size_t r : rows_) positives += data_.y[r] == cls_ ? 1.0 : 0.0;
    expected_fp_rate_ = positives / static_cast<double>(rows_.size());
    for (std::size_t j = 0; j < data_.schema.size(); ++j) {
      if (data_.schema.is_nominal(j)) {
        possible_ += static_cast<double>(data_.schema.level_count(j));
      } else {
        std::set<double> distinct;
        for (std::size_t r : rows_) distinct.insert(data_.x(r, j));
        possible_ += 2.0 * static_cast<double>(distinct.size());
      }
    }
  }

  std::vector<Conditions> learn() {
    std::vector<ClassRule> rules = cover({});
    for (int pass = 0; pass < params_.optimization_passes; ++pass) rules = optimize(std::move(rules));
    std::vector<Conditions> out;
    for (auto& r : rules) out.push_back(std::move(r.conditions));
    return out;
  }

 private:
  ClassRule make_rule(Conditions cs) const {
    ClassRule r;
    r.mask.resize(rows_.size());
    for (std::size_t p = 0; p < rows_.size(); ++p) r.mask[p] = matches(cs, data_.x.row(rows_[p])) ? 1 : 0;
    r.conditions = std::move(cs);
    return r;
  }

  double description_length(const std::vector<const ClassRule*>& rules) const {
    double theory = 0.0;
    for (const auto* r : rules) theory += detail::rule_theory_dl(static_cast<double>(r->conditions.size()), possible_);
    double cover = 0.0, fp = 0.0, fn = 0.0;
    for (std::size_t p = 0; p < rows_.size(); ++p) {
      bool hit = false;
      for (const auto* r : rules) {
        if (r->mask[p]) {
          hit = true;
          break;
        }
      }
      const bool positive = data_.y[rows_[p]] == cls_;
      if (hit) {
        cover += 1.0;
        fp += positive ? 0.0 : 1.0;
      } else {
        fn += positive ? 1.0 : 0.0;
      }
    }
    const double uncover = static_cast<double>(rows_.size()) - cover;
    return theory + detail::data_dl(expected_fp_rate_, cover, uncover, fp, fn);
  }

  double description_length(const std::vector<ClassRule>& rules) const {
    std::vector<const ClassRule*> ptrs;
    for (const auto& r : rules) ptrs.push_back(&r);
    return description_length(ptrs);
  }

  std::vector<std::size_t> uncovered(const std::vector<ClassRule>& rules) const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < rows_.size(); ++p) {
      bool hit = false;
      for (const auto& r : rules) hit = hit || r.mask[p];
      if (!hit) out.push_back(rows_[p]);
    }
    return out;
  }

  bool has_positive(std::span<const std::size_t> rows) const {
    return std::any_of(rows.begin(), rows.end(), [&](std::size_t r) { return data_.y[r] == cls_; });
  }

  Conditions grow(std::span<const std::size_t> rows, Conditions cs) const {
    std::vector<std::size_t> covered;
    for (std::size_t r : rows) {
      if (matches(cs, data_.x.row(r))) covered.push_back(r);
    }
    std::vector<bool> used(data_.schema.size(), false);
    for (const auto& c : cs) {
      if (c.op == Op::eq) used[c.attribute] = true;
    }
    const auto min_cover = static_cast<double>(params_.min_instances);
    for (;;) {
      double p0 = 0.0;
      for (std::size_t r : covered) p0 += data_.y[r] == cls_ ? 1.0 : 0.0;
      const double n0 = static_cast<double>(covered.size()) - p0;
      if (p0 == 0.0 || n0 == 0.0) break;

      double best_gain = 1e-12;
      std::optional<Condition> best;
      auto consider = [&](Condition c, double p1, double n1) {
        if (p1 <= 0.0 || p1 + n1 < min_cover) return;
        const double g = detail::foil_gain(p0, n0, p1, n1);
        if (g > best_gain) {
          best_gain = g;
          best = c;
        }
      };
      for (std::size_t j = 0; j < data_.schema.size(); ++j) {
        if (data_.schema.is_nominal(j)) {
          if (used[j]) continue;
          const std::size_t levels = data_.schema.level_count(j);
          std::vector<double> pos(levels, 0.0), neg(levels, 0.0);
          for (std::size_t r : covered) {
            (data_.y[r] == cls_ ? pos : neg)[static_cast<std::size_t>(data_.x(r, j))] += 1.0;
          }
          for (std::size_t v = 0; v < levels; ++v) consider({j, Op::eq, static_cast<double>(v)}, pos[v], neg[v]);
        } else {
          std::vector<std::pair<double, bool>> vals;
          vals.reserve(covered.size());
          for (std::size_t r : covered) vals.emplace_back(data_.x(r, j), data_.y[r] == cls_);
          std::sort(vals.begin(), vals.end());
          double pl = 0.0, nl = 0.0;
          for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            (vals[i].second ? pl : nl) += 1.0;
            if (vals[i].first == vals[i + 1].first) continue;
            const double t = detail::split_point(vals[i].first, vals[i + 1].first);
            consider({j, Op::le, t}, pl, nl);
            consider({j, Op::gt, t}, p0 - pl, n0 - nl);
          }
        }
      }
      if (!best) break;
      cs.push_back(*best);
      if (best->op == Op::eq) used[best->attribute] = true;
      std::erase_if(covered, [&](std::size_t r) { return !best->matches(data_.x.row(r)); });
    }
    return cs;
  }

  // Keeps the prefix maximising (p - n) / (p + n) on `rows`, shortest on ties.
  Conditions prune(Conditions cs, std::span<const std::size_t> rows) const {
    if (cs.size() < 2 || rows.empty()) return cs;
    std::vector<std::size_t> covered(rows.begin(), rows.end());
    std::size_t best_len = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t len = 1; len <= cs.size(); ++len) {
      std::erase_if(covered, [&](std::size_t r) { return !cs[len - 1].matches(data_.x.row(r)); });
      if (covered.empty()) break;
      double p = 0.0;
      for (std::size_t r : covered) p += data_.y[r] == cls_ ? 1.0 : 0.0;
      const double n = static_cast<double>(covered.size()) - p;
      const double value = (p - n) / (p + n);
      if (value > best_value) {
        best_value = value;
        best_len = len;
      }
    }
    if (best_len > 0) cs.resize(best_len);
    return cs;
  }

  double error_rate(const Conditions& cs, std::span<const std::size_t> rows) const {
    double p = 0.0, n = 0.0;
    for (std::size_t r : rows) {
      if (!matches(cs, data_.x.row(r))) continue;
      (data_.y[r] == cls_ ? p : n) += 1.0;
    }
    return p + n > 0.0 ? n / (p + n) : -1.0;
  }

  std::vector<ClassRule> reduce(std::vector<ClassRule> rules) const {
    for (std::size_t i = rules.size(); i-- > 0;) {
      std::vector<const ClassRule*> with, without;
      for (std::size_t q = 0; q < rules.size(); ++q) {
        with.push_back(&rules[q]);
        if (q != i) without.push_back(&rules[q]);
      }
      if (description_length(without) < description_length(with)) rules.erase(rules.begin() + static_cast<std::ptrdiff_t>(i));
    }
    return rules;
  }

  std::vector<ClassRule> cover(std::vector<ClassRule> rules) {
    auto remaining = uncovered(rules);
    double best_dl = description_length(rules);
    while (has_positive(remaining)) {
      auto [grow_rows, prune_rows] = detail::stratified_holdout(data_, remaining, params_.folds_for_rep, rng_);
      Conditions cs = grow(grow_rows, {});
      if (cs.empty()) break;
      cs = prune(std::move(cs), prune_rows);
      double err = error_rate(cs, prune_rows);
      if (err < 0.0) err = error_rate(cs, remaining);
      if (err >= 0.5) break;
      rules.push_back(make_rule(std::move(cs)));
      const double dl = description_length(rules);
      if (dl > best_dl + params_.mdl_slack_bits) {
        rules.pop_back();
        break;
      }
      best_dl = std::min(best_dl, dl);
      const auto& added = rules.back().conditions;
      std::erase_if(remaining, [&](std::size_t r) { return matches(added, data_.x.row(r)); });
    }
    return reduce(std::move(rules));
  }

  std::vector<ClassRule> optimize(std::vector<ClassRule> rules) {
    std::vector<ClassRule> done;
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto remaining = uncovered(done);
      auto [grow_rows, prune_rows] = detail::stratified_holdout(data_, remaining, params_.folds_for_rep, rng_);
      std::vector<ClassRule> candidates;
      candidates.push_back(rules[i]);
      Conditions replacement = grow(grow_rows, {});
      if (!replacement.empty()) candidates.push_back(make_rule(prune(std::move(replacement), prune_rows)));
      Conditions revision = prune(grow(grow_rows, rules[i].conditions), prune_rows);
      if (revision != rules[i].conditions) candidates.push_back(make_rule(std::move(revision)));

      std::size_t pick = 0;
      double pick_dl = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        std::vector<const ClassRule*> list;
        for (const auto& d : done) list.push_back(&d);
        list.push_back(&candidates[c]);
        for (std::size_t q = i + 1; q < rules.size(); ++q) list.push_back(&rules[q]);
        const double dl = description_length(list);
        if (dl < pick_dl) {
          pick_dl = dl;
          pick = c;
        }
      }
      done.push_back(std::move(candidates[pick]));
    }
    return cover(std::move(done));
  }

  const Instances& data_;
  const InductionParams& params_;
  int cls_;
  std::vector<std::size_t> rows_;
  std::mt19937_64& rng_;
  double expected_fp_rate_ = 0.0;
  double possible_ = 0.0;
};

}  // namespace

RuleSet ripper_induce(const Instances& data, const InductionParams& params) {
  params.validate();
  data.validate();
  if (data.size() == 0) throw DataError("cannot induce rules from no instances");

  RuleSet rs;
  rs.schema = data.schema;
  rs.num_classes = data.num_classes;
  rs.algorithm = "jrip";
  rs.params = params;

  std::vector<std::size_t> remaining(data.size());
  std::iota(remaining.begin(), remaining.end(), 0);
  const auto totals = detail::class_counts(data, remaining);
  std::vector<int> order;
  for (int c = 0; c < data.num_classes; ++c) {
    if (totals[static_cast<std::size_t>(c)] > 0.0) order.push_back(c);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return totals[static_cast<std::size_t>(a)] < totals[static_cast<std::size_t>(b)];
  });
  rs.default_class = order.back();

  std::mt19937_64 rng(params.seed);
  for (std::size_t oi = 0; oi + 1 < order.size(); ++oi) {
    const int cls = order[oi];
    if (std::none_of(remaining.begin(), remaining.end(), [&](std::size_t r) { return data.y[r] == cls; })) continue;
    ClassLearner learner(data, params, cls, remaining, rng);
    for (auto& cs : learner.learn()) {
      std::erase_if(remaining, [&](std::size_t r) { return matches(cs, data.x.row(r)); });
      Rule rule;
      rule.conditions = normalize_conditions(cs);
      rule.predicted_class = cls;
      rs.rules.push_back(std::move(rule));
    }
  }

  rs.recount(data);
  std::erase_if(rs.rules, [](const Rule& r) { return r.coverage == 0; });
  rs.recount(data);
  return rs;
}

}  // namespace amlprof
