#pragma once

// Snapshot JSONL interchange, dataset validation, query filtering and
// external baseline proportions.
//
// Snapshot file: one JSON object per ranked entry with keys query_id, day,
// rank, candidate_id, first_name, last_name, groups, missing, and an
// optional pool_size. Ranks of one (query_id, day) must be 1..n.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankaudit/data_model.hpp"

namespace rankaudit {

enum class Severity { Warning, Error };

struct ValidationIssue {
  Severity severity = Severity::Error;
  std::size_t line = 0;  // 0 when not tied to a line
  std::string query_id;
  int day = 0;
  std::string message;
};

struct SnapshotStats {
  std::string query_id;
  int day = 0;
  std::size_t entries = 0;
  std::size_t missing = 0;
  double missing_rate = 0.0;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<std::pair<std::string, int>> quarantined;  // (query_id, day)
  std::vector<SnapshotStats> snapshots;                  // accepted snapshots
  std::size_t lines_read = 0;

  std::size_t error_count() const;
  std::size_t warning_count() const;
  // No errors and nothing quarantined.
  bool clean() const { return error_count() == 0 && quarantined.empty(); }
};

struct Dataset {
  std::vector<QuerySeries> series;  // sorted by query_id
  ValidationReport report;
};

// Never throws on content problems: malformed lines and inconsistent
// snapshots are reported, and affected snapshots are quarantined.
Dataset load_dataset(std::istream& in);
// Throws Error(ParseError) when the file cannot be opened.
Dataset load_dataset(const std::filesystem::path& path);

// Writes series in (query_id, day, rank) order; LF-terminated lines.
void write_dataset(std::ostream& out, std::span<const QuerySeries> series);

struct ManifestEntry {
  std::string query_id;
  bool kept = false;
  double missing_rate = 0.0;
  std::size_t total_candidates = 0;
  std::string reason;  // empty when kept
};

struct FilterResult {
  std::vector<QuerySeries> kept;
  std::vector<ManifestEntry> manifest;
};

// Keeps a series when its first observed snapshot has
// missing_rate <= max_missing_rate and total_candidates >= min_pool.
FilterResult filter_queries(std::span<const QuerySeries> series, double max_missing_rate,
                            std::size_t min_pool);

// Baseline file: CSV `query_id,attribute,label,share`; query_id "*" supplies
// a default for queries without their own rows.
class BaselineTable {
 public:
  // Throws Error(ParseError) naming the line, or Error(IntegrityError) when
  // shares for a (query_id, attribute) do not sum to 1 within 1e-6.
  static BaselineTable load(std::istream& in);
  static BaselineTable load(const std::filesystem::path& path);

  // External-baseline proportions rescaled to sum exactly to one. Throws
  // Error(LabelWithoutProportion) if the query (and "*") has no complete
  // entry for the scheme.
  GroupProportions proportions_for(const std::string& query_id, const GroupScheme& scheme) const;

  bool contains(const std::string& query_id, const std::string& attribute) const;

 private:
  std::map<std::pair<std::string, std::string>, std::map<std::string, double>> shares_;
};

}  // namespace rankaudit
