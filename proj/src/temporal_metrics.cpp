#include "rankaudit/temporal_metrics.hpp"

#include <string_view>
#include <tuple>
#include <unordered_set>

#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {

std::unordered_set<std::string_view> top_ids(const RankingSnapshot& snapshot, std::size_t k) {
  std::unordered_set<std::string_view> ids;
  ids.reserve(k);
  const auto entries = snapshot.entries();
  for (std::size_t i = 0; i < k; ++i) ids.insert(entries[i].candidate_id);
  return ids;
}

ChurnCell blank_cell(const QuerySeries& series, const GroupScheme& scheme, const std::string& label,
                     std::size_t k, int start_day, int end_day) {
  ChurnCell cell;
  cell.query_id = series.query_id();
  cell.attribute = scheme.attribute();
  cell.label = label;
  cell.k = k;
  cell.start_day = start_day;
  cell.end_day = end_day;
  return cell;
}

void fill(ChurnCell& cell, const RankingSnapshot& start, const std::unordered_set<std::string_view>& end_top,
          const GroupScheme& scheme, std::size_t label_index) {
  const auto entries = start.entries();
  for (std::size_t i = 0; i < cell.k; ++i) {
    const auto index = entries[i].group_index(scheme);
    if (!index || *index != label_index) continue;
    ++cell.base_count;
    if (!end_top.contains(entries[i].candidate_id)) ++cell.departed;
  }
  if (cell.base_count > 0) {
    cell.churn = static_cast<double>(cell.departed) / static_cast<double>(cell.base_count);
  }
}

std::size_t require_label(const GroupScheme& scheme, const std::string& label) {
  auto index = scheme.index_of(label);
  if (!index) {
    throw Error(ErrorKind::UnknownLabel,
                "label '" + label + "' is not in scheme '" + scheme.attribute() + "'");
  }
  return *index;
}

void require_pair(int start_day, int end_day) {
  if (start_day >= end_day) {
    throw Error(ErrorKind::InvalidDayPair, "churn needs start day < end day, got " +
                                               std::to_string(start_day) + " -> " +
                                               std::to_string(end_day));
  }
}

}  // namespace

ChurnCell churn_rate(const QuerySeries& series, const GroupScheme& scheme, const std::string& label,
                     std::size_t k, int start_day, int end_day) {
  require_pair(start_day, end_day);
  const auto label_index = require_label(scheme, label);
  const auto& start = series.at(start_day);
  const auto& end = series.at(end_day);
  if (k < 1 || k > start.size() || k > end.size()) {
    throw Error(ErrorKind::CutoffOutOfRange,
                "cutoff " + std::to_string(k) + " exceeds a snapshot of query '" +
                    series.query_id() + "'");
  }
  auto cell = blank_cell(series, scheme, label, k, start_day, end_day);
  fill(cell, start, top_ids(end, k), scheme, label_index);
  return cell;
}

std::vector<ChurnCell> churn_grid(const QuerySeries& series, const GroupScheme& scheme,
                                  const std::vector<std::size_t>& k_grid,
                                  const std::vector<DayPair>& day_pairs) {
  for (const auto& [s, e] : day_pairs) {
    require_pair(s, e);
    series.at(s);
    series.at(e);
  }
  std::vector<ChurnCell> cells;
  cells.reserve(scheme.size() * day_pairs.size() * k_grid.size());
  for (std::size_t label_index = 0; label_index < scheme.size(); ++label_index) {
    for (const auto& [s, e] : day_pairs) {
      const auto& start = series.at(s);
      const auto& end = series.at(e);
      for (auto k : k_grid) {
        auto cell = blank_cell(series, scheme, scheme.label(label_index), k, s, e);
        if (k >= 1 && k <= start.size() && k <= end.size()) {
          fill(cell, start, top_ids(end, k), scheme, label_index);
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::vector<DayPair> pairs_from_first(const QuerySeries& series) {
  const auto days = series.days();
  std::vector<DayPair> pairs;
  for (std::size_t i = 1; i < days.size(); ++i) pairs.emplace_back(days.front(), days[i]);
  return pairs;
}

std::vector<DayPair> pairs_at_distance(const QuerySeries& series, int distance) {
  std::vector<DayPair> pairs;
  for (int day : series.days()) {
    if (series.has_day(day + distance)) pairs.emplace_back(day, day + distance);
  }
  return pairs;
}

std::vector<ChurnSummary> mean_churn_by_distance(const std::vector<ChurnCell>& cells) {
  std::map<std::tuple<std::string, int, std::size_t>, std::pair<double, std::size_t>> sums;
  for (const auto& cell : cells) {
    if (!cell.churn) continue;
    auto& [sum, n] = sums[{cell.label, cell.end_day - cell.start_day, cell.k}];
    sum += *cell.churn;
    ++n;
  }
  std::vector<ChurnSummary> out;
  out.reserve(sums.size());
  for (const auto& [key, acc] : sums) {
    const auto& [label, distance, k] = key;
    out.push_back({label, distance, k, acc.first / static_cast<double>(acc.second), acc.second});
  }
  return out;
}

}  // namespace rankaudit
