#include "rankaudit/protocols.hpp"

#include <map>
#include <set>

#include "rankaudit/errors.hpp"

namespace rankaudit {

std::vector<MinSkewObservation> min_skew_observations(std::span<const QuerySeries> series,
                                                      const GroupScheme& scheme,
                                                      const std::vector<std::size_t>& cutoffs,
                                                      const ProportionsFor& targets) {
  std::vector<MinSkewObservation> out;
  for (const auto& s : series) {
    for (const auto& [day, snapshot] : s.snapshots()) {
      std::optional<MetricCurve> curve;
      try {
        const auto proportions = targets ? targets(snapshot) : observed_proportions(snapshot, scheme);
        curve = min_skew_curve(snapshot, scheme, proportions, cutoffs);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyLabeledPool && e.kind() != ErrorKind::ZeroTargetProportion) {
          throw;
        }
      }
      for (auto k : cutoffs) {
        out.push_back({s.query_id(), day, k, curve ? curve->values.at(k) : MetricCell::undefined()});
      }
    }
  }
  return out;
}

std::vector<MinSkewRow> minskew_protocol(std::span<const MinSkewObservation> observations,
                                         double null_value, const FitOptions& options) {
  std::map<std::size_t, MinSkewRow> rows;
  std::map<std::size_t, std::vector<LongObservation>> data;
  for (const auto& obs : observations) {
    auto& row = rows[obs.k];
    row.k = obs.k;
    if (obs.value.is_neg_infinite()) {
      ++row.excluded_neg_infinite;
    } else if (obs.value.is_undefined()) {
      ++row.excluded_undefined;
    } else {
      data[obs.k].push_back({obs.query_id, obs.value.get(), {}});
    }
  }
  std::vector<MinSkewRow> out;
  for (auto& [k, row] : rows) {
    const auto& cells = data[k];
    row.used = cells.size();
    row.fit = fit_random_intercept(cells, {kIntercept}, options);
    row.test = wald_test(row.fit, kIntercept, null_value);
    out.push_back(std::move(row));
  }
  return out;
}

std::string group_coefficient(const std::string& label) { return "group_" + label; }

std::vector<ChurnRow> churn_protocol(std::span<const ChurnCell> cells, const GroupScheme& scheme,
                                     const FitOptions& options) {
  // k -> query -> cells
  std::map<std::size_t, std::map<std::string, std::vector<const ChurnCell*>>> by_k;
  for (const auto& cell : cells) {
    if (cell.attribute != scheme.attribute()) continue;
    by_k[cell.k][cell.query_id].push_back(&cell);
  }

  std::vector<ChurnRow> out;
  for (const auto& [k, queries] : by_k) {
    ChurnRow row;
    row.k = k;
    std::vector<LongObservation> data;
    std::set<int> end_days;
    for (const auto& [query, members] : queries) {
      std::set<std::string> labels_seen;
      bool complete = true;
      for (const auto* cell : members) {
        complete = complete && cell->churn.has_value() && scheme.index_of(cell->label).has_value();
        labels_seen.insert(cell->label);
      }
      if (!complete || labels_seen.size() != scheme.size()) {
        ++row.queries_dropped;
        continue;
      }
      ++row.queries_used;
      for (const auto* cell : members) {
        LongObservation obs{query, *cell->churn, {}};
        for (std::size_t i = 1; i < scheme.size(); ++i) {
          obs.covariates[group_coefficient(scheme.label(i))] = cell->label == scheme.label(i) ? 1.0 : 0.0;
        }
        obs.covariates[kDayCoefficient] = static_cast<double>(cell->end_day);
        end_days.insert(cell->end_day);
        data.push_back(std::move(obs));
      }
    }
    if (row.queries_dropped > 0) {
      row.warnings.push_back(std::to_string(row.queries_dropped) +
                             " queries dropped for undefined churn cells at k=" + std::to_string(k));
    }

    std::vector<std::string> design{kIntercept};
    for (std::size_t i = 1; i < scheme.size(); ++i) design.push_back(group_coefficient(scheme.label(i)));
    const bool with_day = end_days.size() > 1;
    if (with_day) {
      design.push_back(kDayCoefficient);
    } else {
      row.warnings.push_back("single end day at k=" + std::to_string(k) + "; day term omitted");
    }

    row.fit = fit_random_intercept(data, design, options);
    for (const auto& w : row.fit.warnings) row.warnings.push_back(w);
    for (std::size_t i = 1; i < scheme.size(); ++i) {
      row.group_tests.push_back(wald_test(row.fit, group_coefficient(scheme.label(i)), 0.0));
    }
    if (with_day) row.day_test = wald_test(row.fit, kDayCoefficient, 0.0);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace rankaudit
