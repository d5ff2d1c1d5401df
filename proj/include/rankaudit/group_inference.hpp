#pragma once

// Offline, table-driven group labeling from names. A chain of frequency
// tables is consulted in order; the first table that knows a name decides.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rankaudit/data_model.hpp"

namespace rankaudit {

// Trims surrounding whitespace and lower-cases with Unicode simple case
// mapping. No transliteration.
std::string fold_name(std::string_view name);

class NameFrequencyTable {
 public:
  using LabelCounts = std::map<std::string, std::uint64_t>;

  explicit NameFrequencyTable(GroupScheme scheme) : scheme_(std::move(scheme)) {}

  // Counts for the same (name, label) accumulate. Throws Error(UnknownLabel).
  void add(std::string_view name, std::string_view label, std::uint64_t count);

  // Looks up an already-folded or raw name; nullptr when absent or when
  // every stored count for it is zero.
  const LabelCounts* find(std::string_view name) const;

  const GroupScheme& scheme() const noexcept { return scheme_; }
  const std::map<std::string, LabelCounts>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  GroupScheme scheme_;
  std::map<std::string, LabelCounts> entries_;
};

// CSV with header `name,label,count`. Throws Error(MalformedRow) citing the
// line number, or Error(UnknownLabel).
NameFrequencyTable load_name_table(std::istream& in, const GroupScheme& scheme);
NameFrequencyTable load_name_table(const std::filesystem::path& path, const GroupScheme& scheme);

struct InferenceResult {
  std::string label;
  // winning count / total count; 0 when unresolved.
  double confidence = 0.0;
  // Chain position of the table that held the name, if any did.
  std::optional<std::size_t> provider_index;

  bool resolved(const GroupScheme& scheme) const { return label != scheme.unknown_label(); }
};

// Majority label from the first table containing the name. A tie for the
// top count yields the scheme's unknown label with confidence 0.
InferenceResult infer_label(std::string_view name, std::span<const NameFrequencyTable> chain,
                            const GroupScheme& scheme);

enum class NameKey { FirstName, FullName };

struct CoverageReport {
  std::size_t non_missing = 0;
  std::size_t resolved = 0;
  // resolved / non_missing; 0 when there are no non-missing candidates.
  double coverage() const {
    return non_missing ? static_cast<double>(resolved) / static_cast<double>(non_missing) : 0.0;
  }
};

template <typename T>
struct Labeled {
  std::vector<T> items;
  CoverageReport coverage;
};

// Writes the inferred label (or the unknown label) for `scheme.attribute()`
// on every non-missing candidate. FullName keys use "first last".
Labeled<RankingSnapshot> label_dataset(std::span<const RankingSnapshot> snapshots,
                                       const GroupScheme& scheme,
                                       std::span<const NameFrequencyTable> chain,
                                       NameKey key = NameKey::FirstName);

Labeled<QuerySeries> label_dataset(std::span<const QuerySeries> series, const GroupScheme& scheme,
                                   std::span<const NameFrequencyTable> chain,
                                   NameKey key = NameKey::FirstName);

}  // namespace rankaudit
