#pragma once

// Tidy long-format tables and heatmap matrices.
//
// Curve rows:  query_id,day,attribute,label,k,metric,value
// Churn rows:  query_id,day,attribute,label,k,metric,value,start_day,end_day
//              (day repeats end_day, metric is "churn")
// value is a 10-significant-digit literal, "undefined" or "-inf".

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rankaudit/exposure_metrics.hpp"
#include "rankaudit/protocols.hpp"
#include "rankaudit/temporal_metrics.hpp"

namespace rankaudit {

enum class OutputFormat { Csv, Json };

struct LongRow {
  std::string query_id;
  int day = 0;
  std::string attribute;
  std::string label;  // empty for min_skew
  std::size_t k = 0;
  std::string metric;
  MetricCell value = MetricCell::undefined();
  std::optional<int> start_day;
  std::optional<int> end_day;

  bool operator==(const LongRow&) const = default;
};

std::vector<LongRow> to_long_rows(std::span<const MetricCurve> curves);
std::vector<LongRow> to_long_rows(std::span<const ChurnCell> cells);

// Sorts by (query_id, day, attribute, label, metric, start_day, k) before writing.
void sort_long_rows(std::vector<LongRow>& rows);

// Churn columns are included when any row carries a day pair.
void write_long(std::ostream& out, std::vector<LongRow> rows, OutputFormat format);

// Reads the CSV written by write_long. Throws Error(ParseError) naming the line.
std::vector<LongRow> read_long_csv(std::istream& in);

// deviation, skew and corrected_skew for every label plus min_skew, for
// every snapshot and every k in k_grid; queries are processed in parallel.
// A snapshot whose targets cannot be formed, or a metric needing a
// non-zero target that is zero, yields undefined cells.
std::vector<LongRow> audit_rows(std::span<const QuerySeries> series, const GroupScheme& scheme,
                                const std::vector<std::size_t>& k_grid,
                                const ProportionsFor& targets = {});

struct HeatmapMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::size_t> columns;  // k values
  std::vector<std::vector<MetricCell>> cells;
};

// One row per curve labelled "query_id@day"; columns are the curves' k grid.
// Throws Error(InconsistentGrid) when the curves' grids differ.
HeatmapMatrix curve_heatmap(std::span<const MetricCurve> curves);

// Rows "start->end" for one label, each cell the mean over queries of the
// defined churn values (undefined when no query defines it). Throws
// Error(InconsistentGrid) when day pairs do not share a k grid.
HeatmapMatrix churn_heatmap(std::span<const ChurnCell> cells, const std::string& label);

// CSV: header "row,<k>...", undefined as empty, negative infinity as "-inf".
// JSON: {"rows": [...], "columns": [...], "cells": [[...]]} with null / "-inf".
void write_heatmap(std::ostream& out, const HeatmapMatrix& matrix, OutputFormat format);

}  // namespace rankaudit
