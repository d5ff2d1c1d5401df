#include "rankaudit/exports.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <tuple>

#include "json.hpp"
#include "rankaudit/csv.hpp"
#include "rankaudit/errors.hpp"
#include "rankaudit/number_format.hpp"
#include "rankaudit/parallel.hpp"

namespace rankaudit {

namespace {

using nlohmann::ordered_json;

const std::vector<std::string> kCurveHeader{"query_id", "day", "attribute", "label",
                                            "k",        "metric", "value"};

template <typename T>
T parse_integer(const std::string& text, const std::string& where) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::ParseError, where + "expected an integer, got '" + text + "'");
  }
  return v;
}

ordered_json cell_json(const MetricCell& cell) {
  if (cell.is_value()) return cell.get();
  if (cell.is_neg_infinite()) return "-inf";
  return nullptr;
}

}  // namespace

std::vector<LongRow> to_long_rows(std::span<const MetricCurve> curves) {
  std::vector<LongRow> rows;
  for (const auto& c : curves) {
    for (const auto& [k, cell] : c.values) {
      rows.push_back({c.query_id, c.day, c.attribute, c.label.value_or(""), k, c.metric, cell, {}, {}});
    }
  }
  return rows;
}

std::vector<LongRow> to_long_rows(std::span<const ChurnCell> cells) {
  std::vector<LongRow> rows;
  rows.reserve(cells.size());
  for (const auto& c : cells) {
    rows.push_back({c.query_id, c.end_day, c.attribute, c.label, c.k, "churn",
                    c.churn ? MetricCell::value(*c.churn) : MetricCell::undefined(), c.start_day,
                    c.end_day});
  }
  return rows;
}

void sort_long_rows(std::vector<LongRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const LongRow& a, const LongRow& b) {
    return std::tie(a.query_id, a.day, a.attribute, a.label, a.metric, a.start_day, a.k) <
           std::tie(b.query_id, b.day, b.attribute, b.label, b.metric, b.start_day, b.k);
  });
}

void write_long(std::ostream& out, std::vector<LongRow> rows, OutputFormat format) {
  sort_long_rows(rows);
  const bool churn = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.start_day.has_value(); });

  if (format == OutputFormat::Json) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rows) {
      ordered_json o;
      o["query_id"] = r.query_id;
      o["day"] = r.day;
      o["attribute"] = r.attribute;
      o["label"] = r.label.empty() ? ordered_json(nullptr) : ordered_json(r.label);
      o["k"] = r.k;
      o["metric"] = r.metric;
      // Keep the same decimal text as the CSV so both formats agree exactly.
      o["value"] = r.value.is_value() ? ordered_json(round_to_format(r.value.get())) : cell_json(r.value);
      if (churn) {
        o["start_day"] = r.start_day ? ordered_json(*r.start_day) : ordered_json(nullptr);
        o["end_day"] = r.end_day ? ordered_json(*r.end_day) : ordered_json(nullptr);
      }
      arr.push_back(std::move(o));
    }
    out << arr.dump(2) << '\n';
    return;
  }

  auto header = kCurveHeader;
  if (churn) {
    header.push_back("start_day");
    header.push_back("end_day");
  }
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (const auto& r : rows) {
    fields = {r.query_id, std::to_string(r.day), r.attribute, r.label, std::to_string(r.k), r.metric,
              format_cell(r.value)};
    if (churn) {
      fields.push_back(r.start_day ? std::to_string(*r.start_day) : "");
      fields.push_back(r.end_day ? std::to_string(*r.end_day) : "");
    }
    csv::write_row(out, fields);
  }
}

std::vector<LongRow> read_long_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row)) return {};
  bool churn = false;
  if (row == kCurveHeader) {
  } else if (row.size() == 9 && std::equal(kCurveHeader.begin(), kCurveHeader.end(), row.begin()) &&
             row[7] == "start_day" && row[8] == "end_day") {
    churn = true;
  } else {
    throw Error(ErrorKind::ParseError, "line 1: unexpected header");
  }
  const std::size_t width = churn ? 9 : 7;

  std::vector<LongRow> rows;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    const auto where = "line " + std::to_string(reader.line()) + ": ";
    if (row.size() != width) {
      throw Error(ErrorKind::ParseError, where + "expected " + std::to_string(width) + " fields");
    }
    LongRow r;
    r.query_id = row[0];
    r.day = parse_integer<int>(row[1], where);
    r.attribute = row[2];
    r.label = row[3];
    r.k = parse_integer<std::size_t>(row[4], where);
    r.metric = row[5];
    try {
      r.value = parse_cell(row[6]);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, where + e.what());
    }
    if (churn) {
      if (!row[7].empty()) r.start_day = parse_integer<int>(row[7], where);
      if (!row[8].empty()) r.end_day = parse_integer<int>(row[8], where);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<LongRow> audit_rows(std::span<const QuerySeries> series, const GroupScheme& scheme,
                                const std::vector<std::size_t>& k_grid, const ProportionsFor& targets) {
  std::vector<std::vector<LongRow>> per_query(series.size());
  parallel_for(series.size(), [&](std::size_t q) {
    std::vector<MetricCurve> curves;
    for (const auto& [day, snapshot] : series[q].snapshots()) {
      auto blank = [&](std::optional<std::string> label, std::string metric) {
        MetricCurve c{snapshot.query_id(), day, scheme.attribute(), std::move(label), std::move(metric), {}};
        for (auto k : k_grid) c.values.emplace(k, MetricCell::undefined());
        return c;
      };
      auto guarded = [&](auto&& compute, std::optional<std::string> label, const char* metric) {
        try {
          curves.push_back(compute());
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroTargetProportion && e.kind() != ErrorKind::DegenerateProportion) throw;
          curves.push_back(blank(std::move(label), metric));
        }
      };

      std::optional<GroupProportions> p;
      try {
        p = targets ? targets(snapshot) : observed_proportions(snapshot, scheme);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EmptyLabeledPool) throw;
      }
      for (const auto& label : scheme.labels()) {
        if (!p) {
          for (const char* m : {"deviation", "skew", "corrected_skew"}) curves.push_back(blank(label, m));
          continue;
        }
        guarded([&] { return deviation_curve(snapshot, scheme, *p, label, k_grid); }, label, "deviation");
        guarded([&] { return skew_curve(snapshot, scheme, *p, label, k_grid); }, label, "skew");
        guarded([&] { return corrected_skew_curve(snapshot, scheme, *p, label, k_grid); }, label,
                "corrected_skew");
      }
      if (p) {
        guarded([&] { return min_skew_curve(snapshot, scheme, *p, k_grid); }, std::nullopt, "min_skew");
      } else {
        curves.push_back(blank(std::nullopt, "min_skew"));
      }
    }
    per_query[q] = to_long_rows(curves);
  });
  std::vector<LongRow> rows;
  for (auto& part : per_query) std::move(part.begin(), part.end(), std::back_inserter(rows));
  sort_long_rows(rows);
  return rows;
}

HeatmapMatrix curve_heatmap(std::span<const MetricCurve> curves) {
  HeatmapMatrix m;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const auto& c = curves[i];
    std::vector<std::size_t> ks;
    for (const auto& [k, _] : c.values) ks.push_back(k);
    if (i == 0) {
      m.columns = ks;
    } else if (ks != m.columns) {
      throw Error(ErrorKind::InconsistentGrid,
                  "curve " + c.query_id + "@" + std::to_string(c.day) + " has a different k grid");
    }
    m.row_labels.push_back(c.query_id + "@" + std::to_string(c.day));
    std::vector<MetricCell> cells;
    for (const auto& [_, cell] : c.values) cells.push_back(cell);
    m.cells.push_back(std::move(cells));
  }
  return m;
}

HeatmapMatrix churn_heatmap(std::span<const ChurnCell> cells, const std::string& label) {
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::map<DayPair, std::map<std::size_t, Acc>> grid;
  for (const auto& c : cells) {
    if (c.label != label) continue;
    auto& acc = grid[{c.start_day, c.end_day}][c.k];
    if (c.churn) {
      acc.sum += *c.churn;
      ++acc.n;
    }
  }
  HeatmapMatrix m;
  bool first = true;
  for (const auto& [pair, by_k] : grid) {
    std::vector<std::size_t> ks;
    for (const auto& [k, _] : by_k) ks.push_back(k);
    if (first) {
      m.columns = ks;
      first = false;
    } else if (ks != m.columns) {
      throw Error(ErrorKind::InconsistentGrid, "day pair " + std::to_string(pair.first) + "->" +
                                                   std::to_string(pair.second) + " has a different k grid");
    }
    m.row_labels.push_back(std::to_string(pair.first) + "->" + std::to_string(pair.second));
    std::vector<MetricCell> row;
    for (const auto& [_, acc] : by_k) {
      row.push_back(acc.n ? MetricCell::value(acc.sum / static_cast<double>(acc.n)) : MetricCell::undefined());
    }
    m.cells.push_back(std::move(row));
  }
  return m;
}

void write_heatmap(std::ostream& out, const HeatmapMatrix& matrix, OutputFormat format) {
  if (format == OutputFormat::Json) {
    ordered_json o;
    o["rows"] = matrix.row_labels;
    o["columns"] = matrix.columns;
    ordered_json cells = ordered_json::array();
    for (const auto& row : matrix.cells) {
      ordered_json r = ordered_json::array();
      for (const auto& c : row) r.push_back(c.is_value() ? ordered_json(round_to_format(c.get())) : cell_json(c));
      cells.push_back(std::move(r));
    }
    o["cells"] = std::move(cells);
    out << o.dump(2) << '\n';
    return;
  }
  std::vector<std::string> fields{"row"};
  for (auto k : matrix.columns) fields.push_back(std::to_string(k));
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < matrix.row_labels.size(); ++i) {
    fields = {matrix.row_labels[i]};
    for (const auto& c : matrix.cells[i]) fields.push_back(c.is_undefined() ? "" : format_cell(c));
    csv::write_row(out, fields);
  }
}

}  // namespace rankaudit
