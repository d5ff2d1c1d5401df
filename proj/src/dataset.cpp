#include "rankaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "rankaudit/csv.hpp"
#include "rankaudit/errors.hpp"
#include "rankaudit/number_format.hpp"

namespace rankaudit {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Row {
  std::size_t line = 0;
  long long rank = 0;
  std::optional<std::size_t> pool_size;
  CandidateRecord record;
};

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

const json& required(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing key '") + key + "'");
  return *it;
}

Row parse_row(const json& obj, std::size_t line) {
  if (!obj.is_object()) throw std::invalid_argument("line is not a JSON object");
  Row row;
  row.line = line;
  const auto& rank = required(obj, "rank");
  if (!rank.is_number_integer()) throw std::invalid_argument("rank must be an integer");
  row.rank = rank.get<long long>();
  const auto& id = required(obj, "candidate_id");
  if (!id.is_string()) throw std::invalid_argument("candidate_id must be a string");
  row.record.candidate_id = id.get<std::string>();
  row.record.first_name = optional_string(obj, "first_name");
  row.record.last_name = optional_string(obj, "last_name");
  const auto& missing = required(obj, "missing");
  if (!missing.is_boolean()) throw std::invalid_argument("missing must be a boolean");
  row.record.missing = missing.get<bool>();
  if (auto it = obj.find("groups"); it != obj.end() && !it->is_null()) {
    if (!it->is_object()) throw std::invalid_argument("groups must be an object or null");
    for (const auto& [attribute, label] : it->items()) {
      if (label.is_null()) continue;
      if (!label.is_string()) throw std::invalid_argument("group labels must be strings");
      row.record.group_labels[attribute] = label.get<std::string>();
    }
  }
  if (auto it = obj.find("pool_size"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw std::invalid_argument("pool_size must be a non-negative integer");
    row.pool_size = it->get<std::size_t>();
  }
  return row;
}

void add_issue(ValidationReport& report, Severity severity, std::size_t line,
               const std::string& query_id, int day, std::string message) {
  report.issues.push_back({severity, line, query_id, day, std::move(message)});
}

}  // namespace

std::size_t ValidationReport::error_count() const {
  return static_cast<std::size_t>(std::count_if(issues.begin(), issues.end(), [](const auto& i) {
    return i.severity == Severity::Error;
  }));
}

std::size_t ValidationReport::warning_count() const { return issues.size() - error_count(); }

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

Dataset load_dataset(std::istream& in) {
  Dataset dataset;
  auto& report = dataset.report;
  std::map<std::pair<std::string, int>, std::vector<Row>> snapshots;
  std::set<std::pair<std::string, int>> poisoned;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    ++report.lines_read;

    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      add_issue(report, Severity::Error, line, "", 0, std::string("ParseError: ") + e.what());
      continue;
    }
    // Key the row to its snapshot first so a bad row can quarantine it.
    std::string query_id;
    int day = 0;
    try {
      const auto& q = required(obj, "query_id");
      const auto& d = required(obj, "day");
      if (!q.is_string()) throw std::invalid_argument("query_id must be a string");
      if (!d.is_number_integer() || d.get<long long>() < 1) {
        throw std::invalid_argument("day must be an integer >= 1");
      }
      query_id = q.get<std::string>();
      day = d.get<int>();
    } catch (const std::exception& e) {
      add_issue(report, Severity::Error, line, "", 0, std::string("ParseError: ") + e.what());
      continue;
    }
    try {
      snapshots[{query_id, day}].push_back(parse_row(obj, line));
    } catch (const std::exception& e) {
      add_issue(report, Severity::Error, line, query_id, day, std::string("ParseError: ") + e.what());
      poisoned.insert({query_id, day});
      snapshots[{query_id, day}];
    }
  }

  std::map<std::string, std::vector<RankingSnapshot>> by_query;
  for (auto& [key, rows] : snapshots) {
    const auto& [query_id, day] = key;
    auto quarantine = [&, &query_id = query_id, &day = day](std::size_t at, std::string message) {
      add_issue(report, Severity::Error, at, query_id, day, "IntegrityError: " + std::move(message));
      report.quarantined.emplace_back(query_id, day);
    };
    if (poisoned.contains(key)) {
      report.quarantined.emplace_back(query_id, day);
      continue;
    }
    if (!std::is_sorted(rows.begin(), rows.end(),
                        [](const Row& a, const Row& b) { return a.rank < b.rank; })) {
      add_issue(report, Severity::Warning, rows.front().line, query_id, day,
                "ranks not in ascending file order");
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });

    bool ok = true;
    for (std::size_t i = 0; i < rows.size() && ok; ++i) {
      const auto expected = static_cast<long long>(i + 1);
      if (rows[i].rank != expected) {
        quarantine(rows[i].line, rows[i].rank < expected
                                     ? "duplicate rank " + std::to_string(rows[i].rank)
                                     : "rank gap: expected " + std::to_string(expected) + ", found " +
                                           std::to_string(rows[i].rank));
        ok = false;
      }
    }
    std::optional<std::size_t> pool_size;
    for (std::size_t i = 0; i < rows.size() && ok; ++i) {
      if (rows[i].pool_size && pool_size && *rows[i].pool_size != *pool_size) {
        quarantine(rows[i].line, "inconsistent pool_size within snapshot");
        ok = false;
      }
      if (rows[i].pool_size) pool_size = rows[i].pool_size;
    }
    if (!ok) continue;

    std::map<std::string, std::size_t> first_line;
    for (const auto& row : rows) {
      auto [it, inserted] = first_line.emplace(row.record.candidate_id, row.line);
      if (!inserted) {
        quarantine(row.line, "duplicate candidate_id '" + row.record.candidate_id +
                                 "' (first seen on line " + std::to_string(it->second) + ")");
        ok = false;
        break;
      }
      if (row.record.missing &&
          (row.record.first_name || row.record.last_name || !row.record.group_labels.empty())) {
        quarantine(row.line, "missing entry carries names or groups");
        ok = false;
        break;
      }
    }
    if (!ok) continue;

    std::vector<CandidateRecord> entries;
    entries.reserve(rows.size());
    for (auto& row : rows) entries.push_back(std::move(row.record));
    try {
      RankingSnapshot snapshot(query_id, day, std::move(entries), pool_size);
      report.snapshots.push_back({query_id, day, snapshot.size(), snapshot.missing_count(),
                                  snapshot.missing_rate()});
      by_query[query_id].push_back(std::move(snapshot));
    } catch (const Error& e) {
      quarantine(rows.front().line, e.what());
    }
  }

  for (auto& [query_id, list] : by_query) {
    dataset.series.emplace_back(query_id, std::move(list));
  }
  return dataset;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open snapshot file " + path.string());
  return load_dataset(in);
}

void write_dataset(std::ostream& out, std::span<const QuerySeries> series) {
  std::vector<const QuerySeries*> ordered;
  for (const auto& s : series) ordered.push_back(&s);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->query_id() < b->query_id(); });
  for (const auto* s : ordered) {
    for (const auto& [day, snapshot] : s->snapshots()) {
      const auto entries = snapshot.entries();
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        ordered_json row;
        row["query_id"] = snapshot.query_id();
        row["day"] = day;
        row["rank"] = i + 1;
        row["candidate_id"] = e.candidate_id;
        row["first_name"] = e.first_name ? ordered_json(*e.first_name) : ordered_json(nullptr);
        row["last_name"] = e.last_name ? ordered_json(*e.last_name) : ordered_json(nullptr);
        if (e.missing) {
          row["groups"] = nullptr;
        } else {
          ordered_json groups = ordered_json::object();
          for (const auto& [attribute, label] : e.group_labels) groups[attribute] = label;
          row["groups"] = std::move(groups);
        }
        row["missing"] = e.missing;
        if (snapshot.pool_size()) row["pool_size"] = *snapshot.pool_size();
        out << row.dump() << '\n';
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Filtering
// ---------------------------------------------------------------------------

FilterResult filter_queries(std::span<const QuerySeries> series, double max_missing_rate,
                            std::size_t min_pool) {
  if (!(max_missing_rate >= 0.0 && max_missing_rate <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "max_missing_rate must lie in [0,1]");
  }
  FilterResult result;
  for (const auto& s : series) {
    ManifestEntry entry;
    entry.query_id = s.query_id();
    if (s.snapshots().empty()) {
      entry.reason = "no snapshots";
      result.manifest.push_back(std::move(entry));
      continue;
    }
    const auto& first = s.first();
    entry.missing_rate = first.missing_rate();
    entry.total_candidates = first.total_candidates();
    if (entry.missing_rate > max_missing_rate) {
      entry.reason = "missing rate " + format_real(entry.missing_rate) + " > " +
                     format_real(max_missing_rate);
    } else if (entry.total_candidates < min_pool) {
      entry.reason = "pool " + std::to_string(entry.total_candidates) + " < " +
                     std::to_string(min_pool);
    } else {
      entry.kept = true;
      result.kept.push_back(s);
    }
    result.manifest.push_back(std::move(entry));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

BaselineTable BaselineTable::load(std::istream& in) {
  BaselineTable table;
  csv::Reader reader(in);
  std::vector<std::string> row;
  bool header_seen = false;
  std::map<std::pair<std::string, std::string>, std::size_t> first_line;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    const auto where = "line " + std::to_string(reader.line()) + ": ";
    if (!header_seen) {
      header_seen = true;
      if (row == std::vector<std::string>{"query_id", "attribute", "label", "share"}) continue;
      throw Error(ErrorKind::ParseError, where + "expected header query_id,attribute,label,share");
    }
    if (row.size() != 4) throw Error(ErrorKind::ParseError, where + "expected 4 fields");
    const auto cell = parse_cell(row[3]);
    if (!cell.is_value() || cell.get() < 0.0 || cell.get() > 1.0) {
      throw Error(ErrorKind::ParseError, where + "share must be a number in [0,1]");
    }
    const std::pair key{row[0], row[1]};
    first_line.emplace(key, reader.line());
    auto& shares = table.shares_[key];
    if (!shares.emplace(row[2], cell.get()).second) {
      throw Error(ErrorKind::ParseError, where + "duplicate label '" + row[2] + "'");
    }
  }
  for (const auto& [key, shares] : table.shares_) {
    double total = 0.0;
    for (const auto& [_, s] : shares) total += s;
    if (std::abs(total - 1.0) > 1e-6) {
      throw Error(ErrorKind::IntegrityError,
                  "baseline shares for (" + key.first + ", " + key.second + ") starting line " +
                      std::to_string(first_line[key]) + " sum to " + format_real(total));
    }
  }
  return table;
}

BaselineTable BaselineTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open baseline file " + path.string());
  return load(in);
}

bool BaselineTable::contains(const std::string& query_id, const std::string& attribute) const {
  return shares_.contains({query_id, attribute}) || shares_.contains({"*", attribute});
}

GroupProportions BaselineTable::proportions_for(const std::string& query_id,
                                                const GroupScheme& scheme) const {
  auto it = shares_.find({query_id, scheme.attribute()});
  if (it == shares_.end()) it = shares_.find({"*", scheme.attribute()});
  if (it == shares_.end()) {
    throw Error(ErrorKind::LabelWithoutProportion, "no baseline for query '" + query_id +
                                                       "' attribute '" + scheme.attribute() + "'");
  }
  double total = 0.0;
  for (const auto& [_, s] : it->second) total += s;
  std::map<std::string, double> normalized;
  for (const auto& [label, s] : it->second) normalized[label] = s / total;
  return GroupProportions::from_map(scheme, normalized, ProportionSource::ExternalBaseline, 0);
}

}  // namespace rankaudit
