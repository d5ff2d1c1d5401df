#include "rankaudit/exposure_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {

constexpr double kIntegralSnap = 1e-9;

void require_same_scheme(const GroupScheme& scheme, const GroupProportions& proportions) {
  if (!(proportions.scheme() == scheme)) {
    throw Error(ErrorKind::InvalidArgument,
                "proportions were built for a different scheme than '" + scheme.attribute() + "'");
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

void require_cutoff(std::size_t k, std::size_t length) {
  if (k < 1 || k > length) {
    throw Error(ErrorKind::CutoffOutOfRange,
                "cutoff " + std::to_string(k) + " outside 1.." + std::to_string(length));
  }
}

MetricCurve make_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                       std::optional<std::string> label, std::string metric) {
  MetricCurve curve;
  curve.query_id = snapshot.query_id();
  curve.day = snapshot.day();
  curve.attribute = scheme.attribute();
  curve.label = std::move(label);
  curve.metric = std::move(metric);
  return curve;
}

MetricCell min_skew_from(const TopKCounts& counts, const GroupProportions& proportions) {
  MetricCell result = MetricCell::undefined();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < counts.counts.size(); ++i) {
    const auto cell = skew_from_counts(counts.counts[i], counts.labeled_total, proportions.share(i));
    if (cell.is_undefined()) return cell;
    if (cell.is_neg_infinite()) return cell;
    if (cell.get() < best) {
      best = cell.get();
      result = cell;
    }
  }
  return result;
}

void require_positive_targets(const GroupProportions& proportions) {
  for (std::size_t i = 0; i < proportions.shares().size(); ++i) {
    if (proportions.share(i) <= 0.0) {
      throw Error(ErrorKind::ZeroTargetProportion,
                  "target share of '" + proportions.scheme().label(i) + "' is zero");
    }
  }
}

}  // namespace

double MetricCell::get() const {
  if (kind_ != Kind::Value) {
    throw Error(ErrorKind::InvalidArgument, "metric cell holds no finite value");
  }
  return value_;
}

// ---------------------------------------------------------------------------
// Counting
// ---------------------------------------------------------------------------

PrefixCounts::PrefixCounts(const RankingSnapshot& snapshot, const GroupScheme& scheme)
    : groups_(scheme.size()) {
  const auto entries = snapshot.entries();
  cumulative_.assign(entries.size() * groups_, 0);
  labeled_.assign(entries.size(), 0);
  std::vector<std::size_t> running(groups_, 0);
  std::size_t labeled = 0;
  for (std::size_t pos = 0; pos < entries.size(); ++pos) {
    if (auto index = entries[pos].group_index(scheme)) {
      ++running[*index];
      ++labeled;
    }
    std::copy(running.begin(), running.end(), cumulative_.begin() + pos * groups_);
    labeled_[pos] = labeled;
  }
}

TopKCounts PrefixCounts::at(std::size_t k) const {
  require_cutoff(k, size());
  TopKCounts out;
  out.k = k;
  const auto row = cumulative_.begin() + (k - 1) * groups_;
  out.counts.assign(row, row + groups_);
  out.labeled_total = labeled_[k - 1];
  return out;
}

TopKCounts topk_counts(const RankingSnapshot& snapshot, const GroupScheme& scheme, std::size_t k) {
  require_cutoff(k, snapshot.size());
  TopKCounts out;
  out.k = k;
  out.counts.assign(scheme.size(), 0);
  const auto entries = snapshot.entries();
  for (std::size_t pos = 0; pos < k; ++pos) {
    if (auto index = entries[pos].group_index(scheme)) {
      ++out.counts[*index];
      ++out.labeled_total;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

MetricCell skew_from_counts(std::size_t count, std::size_t labeled_total, double target) {
  if (!(target > 0.0)) {
    throw Error(ErrorKind::ZeroTargetProportion, "skew needs a positive target share");
  }
  if (labeled_total == 0) return MetricCell::undefined();
  if (count == 0) return MetricCell::neg_infinite();
  const double share = static_cast<double>(count) / static_cast<double>(labeled_total);
  if (share == target) return MetricCell::value(0.0);
  return MetricCell::value(std::log(share / target));
}

std::pair<long long, long long> bracket_counts(double p, std::size_t k) {
  const double target = p * static_cast<double>(k);
  const double nearest = std::round(target);
  if (std::abs(target - nearest) < kIntegralSnap) {
    const auto n = static_cast<long long>(nearest);
    return {n, n};
  }
  return {static_cast<long long>(std::floor(target)), static_cast<long long>(std::ceil(target))};
}

double best_attainable_skew(double p, std::size_t k) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::DegenerateProportion,
                "integrality bound needs 0 < p < 1, got " + std::to_string(p));
  }
  if (k < 1) {
    throw Error(ErrorKind::CutoffOutOfRange, "integrality bound needs k >= 1");
  }
  const auto [lo, hi] = bracket_counts(p, k);
  const double kd = static_cast<double>(k);
  const double upper = std::abs(std::log((static_cast<double>(hi) / kd) / p));
  if (lo == hi) return 0.0;
  if (lo == 0) return upper;
  const double lower = std::abs(std::log((static_cast<double>(lo) / kd) / p));
  return std::min(lower, upper);
}

MetricCell corrected_skew(const MetricCell& observed, double p, std::size_t k) {
  const double floor_skew = best_attainable_skew(p, k);
  if (!observed.is_value()) return observed;
  const double s = observed.get();
  if (s == 0.0) return MetricCell::value(0.0);
  // |s| >= floor_skew up to rounding whenever s comes from a count over k.
  const double magnitude = std::max(0.0, std::abs(s) - floor_skew);
  return MetricCell::value(s > 0 ? magnitude : -magnitude);
}

// ---------------------------------------------------------------------------
// Snapshot metrics
// ---------------------------------------------------------------------------

MetricCurve deviation_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                            const GroupProportions& proportions, const std::string& label,
                            const std::vector<std::size_t>& k_grid) {
  require_same_scheme(scheme, proportions);
  const auto index = require_label(scheme, label);
  const double target = proportions.share(index);
  const PrefixCounts prefix(snapshot, scheme);
  auto curve = make_curve(snapshot, scheme, label, "deviation");
  for (auto k : k_grid) {
    if (k < 1) require_cutoff(k, snapshot.size());
    if (k > prefix.size()) {
      curve.values.emplace(k, MetricCell::undefined());
      continue;
    }
    const auto counts = prefix.at(k);
    if (counts.labeled_total == 0) {
      curve.values.emplace(k, MetricCell::undefined());
      continue;
    }
    const double share =
        static_cast<double>(counts.count(index)) / static_cast<double>(counts.labeled_total);
    curve.values.emplace(k, MetricCell::value(target - share));
  }
  return curve;
}

MetricCell skew_at_k(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                     const GroupProportions& proportions, const std::string& label, std::size_t k) {
  require_same_scheme(scheme, proportions);
  const auto index = require_label(scheme, label);
  const auto counts = topk_counts(snapshot, scheme, k);
  return skew_from_counts(counts.count(index), counts.labeled_total, proportions.share(index));
}

MetricCell min_skew_at_k(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                         const GroupProportions& proportions, std::size_t k) {
  require_same_scheme(scheme, proportions);
  require_positive_targets(proportions);
  return min_skew_from(topk_counts(snapshot, scheme, k), proportions);
}

MetricCurve skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                       const GroupProportions& proportions, const std::string& label,
                       const std::vector<std::size_t>& k_grid) {
  require_same_scheme(scheme, proportions);
  const auto index = require_label(scheme, label);
  const double target = proportions.share(index);
  if (!(target > 0.0)) {
    throw Error(ErrorKind::ZeroTargetProportion, "target share of '" + label + "' is zero");
  }
  const PrefixCounts prefix(snapshot, scheme);
  auto curve = make_curve(snapshot, scheme, label, "skew");
  for (auto k : k_grid) {
    if (k < 1) require_cutoff(k, snapshot.size());
    if (k > prefix.size()) {
      curve.values.emplace(k, MetricCell::undefined());
      continue;
    }
    const auto counts = prefix.at(k);
    curve.values.emplace(k, skew_from_counts(counts.count(index), counts.labeled_total, target));
  }
  return curve;
}

MetricCurve min_skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                           const GroupProportions& proportions,
                           const std::vector<std::size_t>& k_grid) {
  require_same_scheme(scheme, proportions);
  require_positive_targets(proportions);
  const PrefixCounts prefix(snapshot, scheme);
  auto curve = make_curve(snapshot, scheme, std::nullopt, "min_skew");
  for (auto k : k_grid) {
    if (k < 1) require_cutoff(k, snapshot.size());
    if (k > prefix.size()) {
      curve.values.emplace(k, MetricCell::undefined());
      continue;
    }
    curve.values.emplace(k, min_skew_from(prefix.at(k), proportions));
  }
  return curve;
}

MetricCurve corrected_skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                                 const GroupProportions& proportions, const std::string& label,
                                 const std::vector<std::size_t>& k_grid) {
  require_same_scheme(scheme, proportions);
  const auto index = require_label(scheme, label);
  const double target = proportions.share(index);
  if (!(target > 0.0)) {
    throw Error(ErrorKind::ZeroTargetProportion, "target share of '" + label + "' is zero");
  }
  const PrefixCounts prefix(snapshot, scheme);
  auto curve = make_curve(snapshot, scheme, label, "corrected_skew");
  for (auto k : k_grid) {
    if (k < 1) require_cutoff(k, snapshot.size());
    if (k > prefix.size()) {
      curve.values.emplace(k, MetricCell::undefined());
      continue;
    }
    const auto counts = prefix.at(k);
    const auto observed = skew_from_counts(counts.count(index), counts.labeled_total, target);
    if (counts.labeled_total == 0 || target >= 1.0) {
      // Single-group pools have nothing to correct.
      curve.values.emplace(k, observed);
      continue;
    }
    curve.values.emplace(k, corrected_skew(observed, target, counts.labeled_total));
  }
  return curve;
}

std::vector<std::size_t> full_grid(std::size_t max_k) {
  std::vector<std::size_t> grid(max_k);
  for (std::size_t k = 1; k <= max_k; ++k) grid[k - 1] = k;
  return grid;
}

std::vector<std::size_t> page_grid(std::size_t max_k, std::size_t page) {
  if (page == 0) throw Error(ErrorKind::InvalidArgument, "page size must be positive");
  std::vector<std::size_t> grid;
  for (std::size_t k = page; k <= max_k; k += page) grid.push_back(k);
  return grid;
}

}  // namespace rankaudit
