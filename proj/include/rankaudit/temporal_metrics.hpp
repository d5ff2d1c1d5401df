#pragma once

// Day-over-day churn: the fraction of a group's top-k members on a start day
// that are no longer in the top-k on an end day.
//
// Top-k here is positional over all entries (anonymized entries hold slots)
// and then filtered to the group; candidates are matched by candidate_id.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankaudit/data_model.hpp"

namespace rankaudit {

struct ChurnCell {
  std::string query_id;
  std::string attribute;
  std::string label;
  std::size_t k = 0;
  int start_day = 0;
  int end_day = 0;
  std::optional<double> churn;  // empty when base_count == 0 or k out of range
  std::size_t base_count = 0;
  std::size_t departed = 0;
};

using DayPair = std::pair<int, int>;

// Throws Error(DayMissing), Error(CutoffOutOfRange) or Error(InvalidDayPair).
ChurnCell churn_rate(const QuerySeries& series, const GroupScheme& scheme, const std::string& label,
                     std::size_t k, int start_day, int end_day);

// One cell per (label, day pair, k), ordered label-major, then day pair,
// then k. Cutoffs longer than either list give undefined cells rather than
// errors; a missing day still throws.
std::vector<ChurnCell> churn_grid(const QuerySeries& series, const GroupScheme& scheme,
                                  const std::vector<std::size_t>& k_grid,
                                  const std::vector<DayPair>& day_pairs);

// (first, d) for every later observed day d.
std::vector<DayPair> pairs_from_first(const QuerySeries& series);
// (d_i, d_j) for every observed pair with d_j - d_i == distance.
std::vector<DayPair> pairs_at_distance(const QuerySeries& series, int distance);

struct ChurnSummary {
  std::string label;
  int distance = 0;
  std::size_t k = 0;
  double mean = 0.0;
  std::size_t cells = 0;  // defined cells averaged
};

// Mean churn per (label, end_day - start_day, k) over defined cells only.
std::vector<ChurnSummary> mean_churn_by_distance(const std::vector<ChurnCell>& cells);

}  // namespace rankaudit
