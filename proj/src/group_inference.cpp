#include "rankaudit/group_inference.hpp"

#include <charconv>
#include <fstream>
#include <locale>

#include "rankaudit/csv.hpp"
#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {

// ---------------------------------------------------------------------------
// UTF-8 helpers
// ---------------------------------------------------------------------------

// Decodes one code point; malformed bytes are passed through as-is (returned
// as their byte value) so folding never fails.
char32_t decode(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  int extra = 0;
  char32_t cp = 0;
  if (lead < 0x80) {
    ++pos;
    return lead;
  } else if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return lead;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return lead;
  }
  for (int i = 1; i <= extra; ++i) {
    if ((byte(pos + i) & 0xC0) != 0x80) {
      ++pos;
      return lead;
    }
    cp = (cp << 6) | (byte(pos + i) & 0x3F);
  }
  pos += extra + 1;
  return cp;
}

void encode(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

const std::ctype<wchar_t>* unicode_ctype() {
  static const std::ctype<wchar_t>* facet = []() -> const std::ctype<wchar_t>* {
    for (const char* name : {"C.UTF-8", "C.utf8", "en_US.UTF-8"}) {
      try {
        static const std::locale loc(name);
        return &std::use_facet<std::ctype<wchar_t>>(loc);
      } catch (const std::runtime_error&) {
      }
    }
    return nullptr;
  }();
  return facet;
}

char32_t to_lower(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'A' && cp <= 'Z') ? cp + ('a' - 'A') : cp;
  }
  if (const auto* facet = unicode_ctype()) {
    return static_cast<char32_t>(facet->tolower(static_cast<wchar_t>(cp)));
  }
  return cp;
}

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

std::uint64_t parse_count(std::string_view text, std::size_t line) {
  std::uint64_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line) +
                                             ": count is not a non-negative integer: '" +
                                             std::string(text) + "'");
  }
  return value;
}

std::string name_key(const CandidateRecord& record, NameKey key) {
  if (!record.first_name) return {};
  if (key == NameKey::FirstName) return *record.first_name;
  if (!record.last_name) return {};
  return *record.first_name + " " + *record.last_name;
}

CandidateRecord label_candidate(const CandidateRecord& record, const GroupScheme& scheme,
                                std::span<const NameFrequencyTable> chain, NameKey key,
                                CoverageReport& coverage) {
  CandidateRecord out = record;
  if (record.missing) return out;
  ++coverage.non_missing;
  const auto name = name_key(record, key);
  InferenceResult result = name.empty() ? InferenceResult{scheme.unknown_label(), 0.0, {}}
                                        : infer_label(name, chain, scheme);
  if (result.resolved(scheme)) ++coverage.resolved;
  out.group_labels[scheme.attribute()] = std::move(result.label);
  return out;
}

}  // namespace

std::string fold_name(std::string_view name) {
  std::size_t begin = 0;
  std::size_t end = name.size();
  while (begin < end && is_space(name[begin])) ++begin;
  while (end > begin && is_space(name[end - 1])) --end;
  const auto trimmed = name.substr(begin, end - begin);

  std::string out;
  out.reserve(trimmed.size());
  std::size_t pos = 0;
  while (pos < trimmed.size()) {
    const std::size_t start = pos;
    const char32_t cp = decode(trimmed, pos);
    // Pass malformed sequences through untouched.
    if (pos == start + 1 && static_cast<unsigned char>(trimmed[start]) >= 0x80) {
      out.push_back(trimmed[start]);
      continue;
    }
    encode(to_lower(cp), out);
  }
  return out;
}

// ---------------------------------------------------------------------------
// NameFrequencyTable
// ---------------------------------------------------------------------------

void NameFrequencyTable::add(std::string_view name, std::string_view label, std::uint64_t count) {
  if (!scheme_.index_of(label)) {
    throw Error(ErrorKind::UnknownLabel, "label '" + std::string(label) + "' is not in scheme '" +
                                             scheme_.attribute() + "'");
  }
  entries_[fold_name(name)][std::string(label)] += count;
}

const NameFrequencyTable::LabelCounts* NameFrequencyTable::find(std::string_view name) const {
  auto it = entries_.find(fold_name(name));
  if (it == entries_.end()) return nullptr;
  for (const auto& [_, count] : it->second) {
    if (count > 0) return &it->second;
  }
  return nullptr;
}

NameFrequencyTable load_name_table(std::istream& in, const GroupScheme& scheme) {
  NameFrequencyTable table(scheme);
  csv::Reader reader(in);
  std::vector<std::string> row;
  bool header_seen = false;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (row.size() == 3 && row[0] == "name" && row[1] == "label" && row[2] == "count") continue;
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(reader.line()) +
                                               ": expected header name,label,count");
    }
    if (row.size() != 3) {
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(reader.line()) +
                                               ": expected 3 fields, got " +
                                               std::to_string(row.size()));
    }
    if (fold_name(row[0]).empty()) {
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(reader.line()) + ": empty name");
    }
    const auto count = parse_count(row[2], reader.line());
    if (!scheme.index_of(row[1])) {
      throw Error(ErrorKind::UnknownLabel, "line " + std::to_string(reader.line()) + ": label '" +
                                               row[1] + "' is not in scheme '" +
                                               scheme.attribute() + "'");
    }
    table.add(row[0], row[1], count);
  }
  return table;
}

NameFrequencyTable load_name_table(const std::filesystem::path& path, const GroupScheme& scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::ParseError, "cannot open name table " + path.string());
  }
  return load_name_table(in, scheme);
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

InferenceResult infer_label(std::string_view name, std::span<const NameFrequencyTable> chain,
                            const GroupScheme& scheme) {
  if (chain.empty()) {
    throw Error(ErrorKind::InvalidArgument, "inference chain is empty");
  }
  const auto folded = fold_name(name);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const auto* counts = chain[i].find(folded);
    if (!counts) continue;
    std::uint64_t total = 0;
    std::uint64_t best = 0;
    const std::string* winner = nullptr;
    bool tied = false;
    for (const auto& [label, count] : *counts) {
      total += count;
      if (count > best) {
        best = count;
        winner = &label;
        tied = false;
      } else if (count == best) {
        tied = true;
      }
    }
    if (tied || !winner) return {scheme.unknown_label(), 0.0, i};
    return {*winner, static_cast<double>(best) / static_cast<double>(total), i};
  }
  return {scheme.unknown_label(), 0.0, std::nullopt};
}

Labeled<RankingSnapshot> label_dataset(std::span<const RankingSnapshot> snapshots,
                                       const GroupScheme& scheme,
                                       std::span<const NameFrequencyTable> chain, NameKey key) {
  Labeled<RankingSnapshot> out;
  out.items.reserve(snapshots.size());
  for (const auto& snapshot : snapshots) {
    std::vector<CandidateRecord> entries;
    entries.reserve(snapshot.size());
    for (const auto& record : snapshot.entries()) {
      entries.push_back(label_candidate(record, scheme, chain, key, out.coverage));
    }
    out.items.emplace_back(snapshot.query_id(), snapshot.day(), std::move(entries),
                           snapshot.pool_size());
  }
  return out;
}

Labeled<QuerySeries> label_dataset(std::span<const QuerySeries> series, const GroupScheme& scheme,
                                   std::span<const NameFrequencyTable> chain, NameKey key) {
  Labeled<QuerySeries> out;
  out.items.reserve(series.size());
  for (const auto& s : series) {
    std::vector<RankingSnapshot> snapshots;
    for (const auto& [_, snapshot] : s.snapshots()) snapshots.push_back(snapshot);
    auto labeled = label_dataset(snapshots, scheme, chain, key);
    out.coverage.non_missing += labeled.coverage.non_missing;
    out.coverage.resolved += labeled.coverage.resolved;
    out.items.emplace_back(s.query_id(), std::move(labeled.items));
  }
  return out;
}

}  // namespace rankaudit
