#include "rankaudit/data_model.hpp"

#include <cmath>
#include <numeric>
#include <unordered_set>

#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {

constexpr double kShareSumTolerance = 1e-9;

}  // namespace

// ---------------------------------------------------------------------------
// GroupScheme
// ---------------------------------------------------------------------------

GroupScheme::GroupScheme(std::string attribute, std::vector<std::string> labels,
                         std::string unknown_label)
    : attribute_(std::move(attribute)),
      labels_(std::move(labels)),
      unknown_label_(std::move(unknown_label)) {
  if (attribute_.empty()) {
    throw Error(ErrorKind::InvalidArgument, "group scheme needs an attribute name");
  }
  if (labels_.size() < 2) {
    throw Error(ErrorKind::InvalidArgument,
                "group scheme '" + attribute_ + "' needs at least two labels");
  }
  std::unordered_set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) {
      throw Error(ErrorKind::InvalidArgument, "empty label in scheme '" + attribute_ + "'");
    }
    if (!seen.insert(label).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate label '" + label + "'");
    }
  }
  if (seen.contains(unknown_label_)) {
    throw Error(ErrorKind::InvalidArgument,
                "unknown label '" + unknown_label_ + "' collides with a group label");
  }
}

std::optional<std::size_t> GroupScheme::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// CandidateRecord
// ---------------------------------------------------------------------------

CandidateRecord CandidateRecord::anonymized(std::string candidate_id) {
  CandidateRecord record;
  record.candidate_id = std::move(candidate_id);
  record.missing = true;
  return record;
}

std::optional<std::size_t> CandidateRecord::group_index(const GroupScheme& scheme) const {
  if (missing) return std::nullopt;
  auto it = group_labels.find(scheme.attribute());
  if (it == group_labels.end()) return std::nullopt;
  return scheme.index_of(it->second);
}

// ---------------------------------------------------------------------------
// RankingSnapshot / QuerySeries
// ---------------------------------------------------------------------------

RankingSnapshot::RankingSnapshot(std::string query_id, int day,
                                 std::vector<CandidateRecord> entries,
                                 std::optional<std::size_t> pool_size)
    : query_id_(std::move(query_id)),
      day_(day),
      entries_(std::move(entries)),
      pool_size_(pool_size) {
  if (day_ < 1) {
    throw Error(ErrorKind::IntegrityError, "day must be >= 1, got " + std::to_string(day_));
  }
  std::unordered_set<std::string_view> ids;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& entry = entries_[i];
    if (!ids.insert(entry.candidate_id).second) {
      throw Error(ErrorKind::IntegrityError, "duplicate candidate_id '" + entry.candidate_id +
                                                 "' in " + query_id_ + " day " +
                                                 std::to_string(day_));
    }
    if (entry.missing) {
      if (entry.first_name || entry.last_name || !entry.group_labels.empty()) {
        throw Error(ErrorKind::IntegrityError,
                    "missing entry at rank " + std::to_string(i + 1) + " carries identity fields");
      }
      ++missing_count_;
    }
  }
  if (pool_size_ && *pool_size_ < entries_.size()) {
    throw Error(ErrorKind::IntegrityError, "pool_size smaller than number of ranked entries");
  }
}

double RankingSnapshot::missing_rate() const noexcept {
  if (entries_.empty()) return 0.0;
  return static_cast<double>(missing_count_) / static_cast<double>(entries_.size());
}

QuerySeries::QuerySeries(std::string query_id, std::vector<RankingSnapshot> snapshots)
    : query_id_(std::move(query_id)) {
  for (auto& snapshot : snapshots) {
    if (snapshot.query_id() != query_id_) {
      throw Error(ErrorKind::IntegrityError, "snapshot for query '" + snapshot.query_id() +
                                                 "' added to series '" + query_id_ + "'");
    }
    const int day = snapshot.day();
    if (!snapshots_.emplace(day, std::move(snapshot)).second) {
      throw Error(ErrorKind::IntegrityError,
                  "duplicate day " + std::to_string(day) + " in series '" + query_id_ + "'");
    }
  }
}

std::vector<int> QuerySeries::days() const {
  std::vector<int> out;
  out.reserve(snapshots_.size());
  for (const auto& [day, _] : snapshots_) out.push_back(day);
  return out;
}

const RankingSnapshot& QuerySeries::at(int day) const {
  auto it = snapshots_.find(day);
  if (it == snapshots_.end()) {
    throw Error(ErrorKind::DayMissing,
                "query '" + query_id_ + "' has no snapshot for day " + std::to_string(day));
  }
  return it->second;
}

const RankingSnapshot& QuerySeries::first() const {
  if (snapshots_.empty()) {
    throw Error(ErrorKind::DayMissing, "query '" + query_id_ + "' has no snapshots");
  }
  return snapshots_.begin()->second;
}

// ---------------------------------------------------------------------------
// GroupProportions
// ---------------------------------------------------------------------------

std::string_view to_string(ProportionSource source) {
  return source == ProportionSource::ObservedPool ? "observed_pool" : "external_baseline";
}

GroupProportions::GroupProportions(GroupScheme scheme, std::vector<double> shares,
                                   ProportionSource source, std::size_t denominator)
    : scheme_(std::move(scheme)),
      shares_(std::move(shares)),
      source_(source),
      denominator_(denominator) {
  if (shares_.size() != scheme_.size()) {
    throw Error(ErrorKind::LabelWithoutProportion, "expected one share per label of '" +
                                                       scheme_.attribute() + "'");
  }
  for (double s : shares_) {
    if (!(s >= 0.0 && s <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "share outside [0,1]: " + std::to_string(s));
    }
  }
  const double total = std::accumulate(shares_.begin(), shares_.end(), 0.0);
  if (std::abs(total - 1.0) > kShareSumTolerance) {
    throw Error(ErrorKind::InvalidArgument, "shares sum to " + std::to_string(total));
  }
}

GroupProportions GroupProportions::from_map(GroupScheme scheme,
                                            const std::map<std::string, double>& shares,
                                            ProportionSource source, std::size_t denominator) {
  std::vector<double> ordered(scheme.size(), 0.0);
  for (const auto& [label, share] : shares) {
    auto index = scheme.index_of(label);
    if (!index) {
      throw Error(ErrorKind::UnknownLabel, "label '" + label + "' is not in scheme '" +
                                               scheme.attribute() + "'");
    }
    ordered[*index] = share;
  }
  for (const auto& label : scheme.labels()) {
    if (!shares.contains(label)) {
      throw Error(ErrorKind::LabelWithoutProportion, "no share for label '" + label + "'");
    }
  }
  return GroupProportions(std::move(scheme), std::move(ordered), source, denominator);
}

double GroupProportions::share(std::string_view label) const {
  auto index = scheme_.index_of(label);
  if (!index) {
    throw Error(ErrorKind::LabelWithoutProportion, "no share for label '" + std::string(label) + "'");
  }
  return shares_[*index];
}

GroupProportions observed_proportions(const RankingSnapshot& snapshot, const GroupScheme& scheme,
                                      std::optional<std::size_t> max_rank) {
  const std::size_t limit = std::min(max_rank.value_or(snapshot.size()), snapshot.size());
  std::vector<std::size_t> counts(scheme.size(), 0);
  std::size_t labeled = 0;
  const auto entries = snapshot.entries();
  for (std::size_t i = 0; i < limit; ++i) {
    if (auto index = entries[i].group_index(scheme)) {
      ++counts[*index];
      ++labeled;
    }
  }
  if (labeled == 0) {
    throw Error(ErrorKind::EmptyLabeledPool, "no labeled entries for '" + scheme.attribute() +
                                                 "' in " + snapshot.query_id() + " day " +
                                                 std::to_string(snapshot.day()));
  }
  std::vector<double> shares(scheme.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    shares[i] = static_cast<double>(counts[i]) / static_cast<double>(labeled);
  }
  return GroupProportions(scheme, std::move(shares), ProportionSource::ObservedPool, labeled);
}

}  // namespace rankaudit
