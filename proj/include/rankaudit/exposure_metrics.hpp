#pragma once

// Top-k representation metrics: deviation from target share, log-ratio
// skew, its minimum over groups, and the integrality-corrected skew.
//
// Shares at cutoff k are taken over the labeled, non-missing entries among
// the first k positions (labeled_total), not over k itself.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rankaudit/data_model.hpp"

namespace rankaudit {

class MetricCell {
 public:
  enum class Kind { Value, Undefined, NegInfinite };

  static MetricCell value(double v) { return MetricCell(Kind::Value, v); }
  static MetricCell undefined() { return MetricCell(Kind::Undefined, 0.0); }
  static MetricCell neg_infinite() { return MetricCell(Kind::NegInfinite, 0.0); }

  Kind kind() const noexcept { return kind_; }
  bool is_value() const noexcept { return kind_ == Kind::Value; }
  bool is_undefined() const noexcept { return kind_ == Kind::Undefined; }
  bool is_neg_infinite() const noexcept { return kind_ == Kind::NegInfinite; }
  // Throws Error(InvalidArgument) unless is_value().
  double get() const;

  bool operator==(const MetricCell&) const = default;

 private:
  MetricCell(Kind kind, double v) : kind_(kind), value_(v) {}
  Kind kind_;
  double value_;
};

struct MetricCurve {
  std::string query_id;
  int day = 0;
  std::string attribute;
  std::optional<std::string> label;  // empty for min_skew
  std::string metric;
  std::map<std::size_t, MetricCell> values;
};

struct TopKCounts {
  std::size_t k = 0;
  std::vector<std::size_t> counts;  // indexed like scheme.labels()
  std::size_t labeled_total = 0;

  std::size_t count(std::size_t label_index) const { return counts.at(label_index); }
};

// Throws Error(CutoffOutOfRange) unless 1 <= k <= snapshot.size().
TopKCounts topk_counts(const RankingSnapshot& snapshot, const GroupScheme& scheme, std::size_t k);

// Cumulative counts for every prefix, computed in one pass.
class PrefixCounts {
 public:
  PrefixCounts(const RankingSnapshot& snapshot, const GroupScheme& scheme);

  std::size_t size() const noexcept { return labeled_.size(); }
  // Throws Error(CutoffOutOfRange).
  TopKCounts at(std::size_t k) const;

 private:
  std::size_t groups_;
  std::vector<std::size_t> cumulative_;  // row-major, size() x groups_
  std::vector<std::size_t> labeled_;
};

// ---------------------------------------------------------------------------
// Formulas on raw counts
// ---------------------------------------------------------------------------

// ln((count / labeled_total) / target). neg_infinite when count is zero,
// undefined when labeled_total is zero. Throws Error(ZeroTargetProportion).
MetricCell skew_from_counts(std::size_t count, std::size_t labeled_total, double target);

// Integral counts bracketing k * p; snaps to the nearest integer when k * p
// is within 1e-9 of it so that, e.g., 0.3 * 10 is treated as exactly 3.
std::pair<long long, long long> bracket_counts(double p, std::size_t k);

// Smallest |skew| reachable with a whole number of group members among k.
// Throws Error(DegenerateProportion) unless 0 < p < 1.
double best_attainable_skew(double p, std::size_t k);

// sign(S) * (|S| - best_attainable_skew(p, k)). `k` is the share
// denominator used to compute `observed`. Non-value cells pass through.
MetricCell corrected_skew(const MetricCell& observed, double p, std::size_t k);

// ---------------------------------------------------------------------------
// Per-snapshot metrics
// ---------------------------------------------------------------------------

MetricCurve deviation_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                            const GroupProportions& proportions, const std::string& label,
                            const std::vector<std::size_t>& k_grid);

MetricCell skew_at_k(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                     const GroupProportions& proportions, const std::string& label, std::size_t k);

MetricCell min_skew_at_k(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                         const GroupProportions& proportions, std::size_t k);

// Curve variants. Cutoffs beyond the list length are undefined cells.
MetricCurve skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                       const GroupProportions& proportions, const std::string& label,
                       const std::vector<std::size_t>& k_grid);

MetricCurve min_skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                           const GroupProportions& proportions,
                           const std::vector<std::size_t>& k_grid);

MetricCurve corrected_skew_curve(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                                 const GroupProportions& proportions, const std::string& label,
                                 const std::vector<std::size_t>& k_grid);

// 1..max_k
std::vector<std::size_t> full_grid(std::size_t max_k);
// page, 2*page, ... up to max_k
std::vector<std::size_t> page_grid(std::size_t max_k, std::size_t page = 25);

}  // namespace rankaudit
