#pragma once

// Core domain types: group schemes, observed candidates, ranked snapshots
// grouped into per-query series, and target group proportions.
//
// Everything here is immutable after construction. Ranks are implicit:
// entry i of a snapshot sits at rank i + 1.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rankaudit {

// A categorical attribute (e.g. "gender") partitioned into disjoint labels.
class GroupScheme {
 public:
  GroupScheme(std::string attribute, std::vector<std::string> labels,
              std::string unknown_label = "unknown");

  const std::string& attribute() const noexcept { return attribute_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& unknown_label() const noexcept { return unknown_label_; }
  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }

  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const GroupScheme&) const = default;

 private:
  std::string attribute_;
  std::vector<std::string> labels_;
  std::string unknown_label_;
};

struct CandidateRecord {
  std::string candidate_id;
  std::optional<std::string> first_name;
  std::optional<std::string> last_name;
  // attribute name -> label; absent attributes count as unknown.
  std::map<std::string, std::string> group_labels;
  bool missing = false;

  // An anonymized result: occupies a rank but carries no identity or labels.
  static CandidateRecord anonymized(std::string candidate_id);

  // Index of this candidate's label under `scheme`, or nullopt when the
  // candidate is missing, unlabeled, or carries a label outside the scheme.
  std::optional<std::size_t> group_index(const GroupScheme& scheme) const;

  bool operator==(const CandidateRecord&) const = default;
};

class RankingSnapshot {
 public:
  // Throws Error(IntegrityError) on duplicate ids, a missing entry that
  // still carries names or labels, or pool_size < entries.size().
  RankingSnapshot(std::string query_id, int day, std::vector<CandidateRecord> entries,
                  std::optional<std::size_t> pool_size = std::nullopt);

  const std::string& query_id() const noexcept { return query_id_; }
  int day() const noexcept { return day_; }
  std::span<const CandidateRecord> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::optional<std::size_t> pool_size() const noexcept { return pool_size_; }
  std::size_t missing_count() const noexcept { return missing_count_; }

  // Missing entries over all entries; 0 for an empty snapshot.
  double missing_rate() const noexcept;

  // pool_size when known, otherwise the number of observed entries.
  std::size_t total_candidates() const noexcept { return pool_size_.value_or(entries_.size()); }

  bool operator==(const RankingSnapshot&) const = default;

 private:
  std::string query_id_;
  int day_;
  std::vector<CandidateRecord> entries_;
  std::optional<std::size_t> pool_size_;
  std::size_t missing_count_ = 0;
};

class QuerySeries {
 public:
  // All snapshots must share `query_id` and have distinct days.
  QuerySeries(std::string query_id, std::vector<RankingSnapshot> snapshots);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::map<int, RankingSnapshot>& snapshots() const noexcept { return snapshots_; }
  std::vector<int> days() const;

  bool has_day(int day) const { return snapshots_.contains(day); }
  // Throws Error(DayMissing).
  const RankingSnapshot& at(int day) const;
  // Earliest observed day.
  const RankingSnapshot& first() const;

  bool operator==(const QuerySeries&) const = default;

 private:
  std::string query_id_;
  std::map<int, RankingSnapshot> snapshots_;
};

enum class ProportionSource { ObservedPool, ExternalBaseline };

std::string_view to_string(ProportionSource source);

// Target shares p*_i, one per scheme label, summing to one.
class GroupProportions {
 public:
  GroupProportions(GroupScheme scheme, std::vector<double> shares, ProportionSource source,
                   std::size_t denominator);

  // Every scheme label must be present in `shares`; extra keys are rejected.
  static GroupProportions from_map(GroupScheme scheme, const std::map<std::string, double>& shares,
                                   ProportionSource source, std::size_t denominator = 0);

  const GroupScheme& scheme() const noexcept { return scheme_; }
  std::span<const double> shares() const noexcept { return shares_; }
  double share(std::size_t index) const { return shares_.at(index); }
  // Throws Error(LabelWithoutProportion) for labels outside the scheme.
  double share(std::string_view label) const;
  ProportionSource source() const noexcept { return source_; }
  std::size_t denominator() const noexcept { return denominator_; }

 private:
  GroupScheme scheme_;
  std::vector<double> shares_;
  ProportionSource source_;
  std::size_t denominator_;
};

// Shares of each label among labeled, non-missing entries at ranks
// 1..max_rank (whole list when max_rank is empty).
// Throws Error(EmptyLabeledPool) when no such entry exists.
GroupProportions observed_proportions(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                                      std::optional<std::size_t> max_rank = std::nullopt);

}  // namespace rankaudit
