#pragma once

// Hypothesis-testing protocols over audit metrics:
//
//   * MinSkew@k vs. a reference value: intercept-only random-intercept model
//     per cutoff, Wald z-test of the intercept.
//   * Churn vs. group and day: churn ~ 1 + group indicators + end day with a
//     random intercept per query, Wald z-test of each group coefficient.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankaudit/data_model.hpp"
#include "rankaudit/exposure_metrics.hpp"
#include "rankaudit/mixed_model.hpp"
#include "rankaudit/temporal_metrics.hpp"

namespace rankaudit {

// MinSkew@100 reported for the deployed re-ranker; the protocol's default null.
inline constexpr double kReferenceMinSkew = -0.011;

struct MinSkewObservation {
  std::string query_id;
  int day = 0;
  std::size_t k = 0;
  MetricCell value = MetricCell::undefined();
};

// Target shares for a snapshot; observed pool shares when not supplied.
using ProportionsFor = std::function<GroupProportions(const RankingSnapshot&)>;

// MinSkew@k for every snapshot of every series and every k in `cutoffs`.
// Snapshots whose targets cannot be formed (no labeled entries, a zero
// target share) yield undefined cells.
std::vector<MinSkewObservation> min_skew_observations(std::span<const QuerySeries> series,
                                                      const GroupScheme& scheme,
                                                      const std::vector<std::size_t>& cutoffs,
                                                      const ProportionsFor& targets = {});

struct MinSkewRow {
  std::size_t k = 0;
  WaldTest test;
  MixedModelFit fit;
  std::size_t used = 0;
  std::size_t excluded_neg_infinite = 0;
  std::size_t excluded_undefined = 0;
};

// One fit and test per distinct k, ascending. Non-finite cells are excluded
// and counted. Errors from the fitter propagate.
std::vector<MinSkewRow> minskew_protocol(std::span<const MinSkewObservation> observations,
                                         double null_value = kReferenceMinSkew,
                                         const FitOptions& options = {});

inline constexpr const char* kDayCoefficient = "day";
std::string group_coefficient(const std::string& label);

struct ChurnRow {
  std::size_t k = 0;
  std::vector<WaldTest> group_tests;  // one per non-reference label, vs. 0
  std::optional<WaldTest> day_test;   // absent when only one end day exists
  MixedModelFit fit;
  std::size_t queries_used = 0;
  std::size_t queries_dropped = 0;
  std::vector<std::string> warnings;
};

// The first scheme label is the reference group. A query enters the fit at
// cutoff k only if every one of its cells at k is defined.
std::vector<ChurnRow> churn_protocol(std::span<const ChurnCell> cells, const GroupScheme& scheme,
                                     const FitOptions& options = {});

}  // namespace rankaudit
