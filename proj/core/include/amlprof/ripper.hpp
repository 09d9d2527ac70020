#pragma once

#include "amlprof/rules.hpp"

namespace amlprof {

/// Sequential covering in the style of RIPPER. Classes are learned from rarest to most
/// frequent; the most frequent becomes the default. Rules grow by FOIL gain on a
/// stratified two-thirds of the data and are pruned on the remaining third; rule
/// addition stops on a pruning error of at least 1/2 or when the description length
/// exceeds the best seen by mdl_slack_bits. Each class ruleset then goes through
/// optimization_passes rounds of replacement/revision.
RuleSet ripper_induce(const Instances& data, const InductionParams& params);

namespace detail {

/// p1 * (log2(p1 / (p1 + n1)) - log2(p0 / (p0 + n0))).
double foil_gain(double p0, double n0, double p1, double n1);
/// Bits to name k elements out of t when each is picked with probability p.
double subset_dl(double t, double k, double p);
/// Theory bits of a rule with k conditions drawn from `possible` candidate conditions.
double rule_theory_dl(double k, double possible);
/// Bits for the exceptions of a ruleset covering `cover` rows (fp false positives) and
/// leaving `uncover` rows (fn false negatives).
double data_dl(double expected_fp_rate, double cover, double uncover, double fp, double fn);

}  // namespace detail

}  // namespace amlprof
