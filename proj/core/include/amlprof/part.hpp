#pragma once

#include "amlprof/rules.hpp"

namespace amlprof {

/// Separate-and-conquer over partial pruned C4.5 trees. Each round grows only the
/// subtrees needed (lowest-entropy child first), turns the leaf with the greatest
/// coverage into a rule and removes the rows it covers. Rounds stop when nothing is
/// left, or when the remainder cannot be split and holds fewer than min_instances
/// rows; the default is then the majority of that remainder.
RuleSet part_induce(const Instances& data, const InductionParams& params);

}  // namespace amlprof
