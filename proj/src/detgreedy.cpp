#include "rankaudit/detgreedy.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <tuple>

#include "rankaudit/errors.hpp"
#include "rankaudit/exposure_metrics.hpp"

namespace rankaudit {

namespace {

struct GroupQueue {
  std::vector<const ScoredCandidate*> members;  // score desc, id asc
  std::size_t next = 0;
  long long placed = 0;

  bool empty() const { return next == members.size(); }
  double head_score() const { return members[next]->score; }
};

// Larger key wins; the trailing negated index prefers earlier labels.
using Key = std::tuple<double, double, long long>;

std::optional<std::size_t> pick(const std::vector<GroupQueue>& groups,
                                auto&& eligible, auto&& primary) {
  std::optional<std::size_t> best;
  Key best_key{};
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].empty() || !eligible(i)) continue;
    const Key key{primary(i), groups[i].head_score(), -static_cast<long long>(i)};
    if (!best || key > best_key) {
      best = i;
      best_key = key;
    }
  }
  return best;
}

}  // namespace

RerankResult detgreedy_rerank(std::span<const ScoredCandidate> pool,
                              const GroupProportions& proportions, SelectionRule rule) {
  if (pool.empty()) throw Error(ErrorKind::EmptyPool, "cannot re-rank an empty pool");
  const auto& scheme = proportions.scheme();

  std::vector<GroupQueue> groups(scheme.size());
  for (const auto& candidate : pool) {
    if (!std::isfinite(candidate.score)) {
      throw Error(ErrorKind::InvalidArgument,
                  "non-finite score for candidate '" + candidate.candidate_id + "'");
    }
    auto index = scheme.index_of(candidate.label);
    if (!index) {
      throw Error(ErrorKind::LabelWithoutProportion,
                  "candidate '" + candidate.candidate_id + "' has label '" + candidate.label +
                      "' without a target share");
    }
    groups[*index].members.push_back(&candidate);
  }
  for (auto& group : groups) {
    std::sort(group.members.begin(), group.members.end(), [](const auto* a, const auto* b) {
      if (a->score != b->score) return a->score > b->score;
      return a->candidate_id < b->candidate_id;
    });
  }

  RerankResult result;
  result.order.reserve(pool.size());
  result.labels.reserve(pool.size());
  std::vector<long long> lower(groups.size());
  std::vector<long long> upper(groups.size());

  for (std::size_t k = 1; k <= pool.size(); ++k) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      std::tie(lower[i], upper[i]) = bracket_counts(proportions.share(i), k);
    }
    auto chosen = pick(
        groups, [&](std::size_t i) { return groups[i].placed < lower[i]; },
        [&](std::size_t i) { return static_cast<double>(lower[i] - groups[i].placed); });
    if (!chosen) {
      const auto below_ceiling = [&](std::size_t i) { return groups[i].placed < upper[i]; };
      if (rule == SelectionRule::MostUnderrepresented) {
        chosen = pick(groups, below_ceiling, [&](std::size_t i) {
          return proportions.share(i) * static_cast<double>(k) -
                 static_cast<double>(groups[i].placed);
        });
      } else {
        chosen = pick(groups, below_ceiling, [](std::size_t) { return 0.0; });
      }
    }
    if (!chosen) {
      // Every non-exhausted group is at its ceiling; the check below records it.
      chosen = pick(groups, [](std::size_t) { return true; }, [](std::size_t) { return 0.0; });
    }
    auto& group = groups[*chosen];
    result.order.push_back(group.members[group.next]->candidate_id);
    result.labels.push_back(scheme.label(*chosen));
    ++group.next;
    ++group.placed;
  }

  result.violations = check_feasibility(result.labels, proportions);
  return result;
}

std::vector<Violation> check_feasibility(std::span<const std::string> ranked_labels,
                                         const GroupProportions& proportions) {
  const auto& scheme = proportions.scheme();
  std::vector<long long> counts(scheme.size(), 0);
  std::vector<Violation> violations;
  for (std::size_t k = 1; k <= ranked_labels.size(); ++k) {
    auto index = scheme.index_of(ranked_labels[k - 1]);
    if (!index) {
      throw Error(ErrorKind::LabelWithoutProportion,
                  "label '" + ranked_labels[k - 1] + "' has no target share");
    }
    ++counts[*index];
    for (std::size_t i = 0; i < counts.size(); ++i) {
      const auto [lo, hi] = bracket_counts(proportions.share(i), k);
      if (counts[i] < lo || counts[i] > hi) {
        violations.push_back({k, scheme.label(i), counts[i], lo, hi});
      }
    }
  }
  return violations;
}

}  // namespace rankaudit
