#pragma once

// Greedy representation-constrained re-ranking. At every prefix length k
// each group's cumulative count c_i is kept within
//
//     floor(p*_i * k) <= c_i <= ceil(p*_i * k)
//
// whenever the pool allows it. Scores only order candidates within their
// own group and break ties between groups.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rankaudit/data_model.hpp"

namespace rankaudit {

struct ScoredCandidate {
  std::string candidate_id;
  std::string label;
  double score = 0.0;
};

struct Violation {
  std::size_t k = 0;
  std::string label;
  long long count = 0;
  long long lower = 0;
  long long upper = 0;

  bool operator==(const Violation&) const = default;
};

enum class SelectionRule {
  // Once no floor is violated, place the head of the group with the largest
  // shortfall p*_i * k - c_i among groups still below their ceiling.
  MostUnderrepresented,
  // Once no floor is violated, place the best-scoring head among groups
  // still below their ceiling.
  HighestScore,
};

struct RerankResult {
  std::vector<std::string> order;   // candidate ids, rank 1 first
  std::vector<std::string> labels;  // label of each ranked candidate
  std::vector<Violation> violations;

  bool feasible() const noexcept { return violations.empty(); }
};

// Throws Error(EmptyPool), Error(LabelWithoutProportion) for a candidate
// label outside the proportions' scheme, or Error(InvalidArgument) for a
// non-finite score. Within a group, equal scores are ordered by id.
RerankResult detgreedy_rerank(std::span<const ScoredCandidate> pool,
                              const GroupProportions& proportions,
                              SelectionRule rule = SelectionRule::MostUnderrepresented);

// Every (k, label) at which the cumulative count leaves its bounds.
std::vector<Violation> check_feasibility(std::span<const std::string> ranked_labels,
                                         const GroupProportions& proportions);

}  // namespace rankaudit
