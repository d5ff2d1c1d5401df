// rankaudit: command-line front end for the ranking audit library.
//
// Exit status: 0 when every input loaded cleanly, 1 when the input had
// errors or quarantined snapshots (the analysis still runs on what loaded),
// 2 when the command itself failed.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rankaudit/csv.hpp"
#include "rankaudit/dataset.hpp"
#include "rankaudit/detgreedy.hpp"
#include "rankaudit/errors.hpp"
#include "rankaudit/exports.hpp"
#include "rankaudit/group_inference.hpp"
#include "rankaudit/number_format.hpp"
#include "rankaudit/protocols.hpp"
#include "rankaudit/random.hpp"
#include "rankaudit/simulator.hpp"
#include "rankaudit/temporal_metrics.hpp"

using namespace rankaudit;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string input;
  std::string output;
  std::string format = "csv";
  std::string attribute = "gender";
  std::vector<std::string> labels{"F", "M"};
  std::string unknown = "unknown";

  GroupScheme scheme() const { return GroupScheme(attribute, labels, unknown); }
  OutputFormat output_format() const { return format == "json" ? OutputFormat::Json : OutputFormat::Csv; }
};

void add_io(CLI::App* cmd, Common& c, bool needs_input = true) {
  auto* in = cmd->add_option("-i,--input", c.input, "Input file");
  if (needs_input) in->required();
  cmd->add_option("-o,--output", c.output, "Output file (default: stdout)");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

void add_scheme(CLI::App* cmd, Common& c) {
  cmd->add_option("--attribute", c.attribute, "Group attribute");
  cmd->add_option("--labels", c.labels, "Group labels, in order")->delimiter(',');
  cmd->add_option("--unknown-label", c.unknown, "Label for unresolved candidates");
}

// Writes to the named file, or to stdout when the name is empty.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*file_) throw Error(ErrorKind::InvalidArgument, "cannot write " + path);
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int g_status = 0;

Dataset load_checked(const std::string& path) {
  auto dataset = load_dataset(std::filesystem::path(path));
  for (const auto& issue : dataset.report.issues) {
    std::cerr << (issue.severity == Severity::Error ? "error" : "warning");
    if (issue.line) std::cerr << ": line " << issue.line;
    if (!issue.query_id.empty()) std::cerr << " [" << issue.query_id << " day " << issue.day << "]";
    std::cerr << ": " << issue.message << '\n';
  }
  if (!dataset.report.clean()) g_status = 1;
  return dataset;
}

std::size_t longest_list(const std::vector<QuerySeries>& series) {
  std::size_t n = 0;
  for (const auto& s : series)
    for (const auto& [_, snap] : s.snapshots()) n = std::max(n, snap.size());
  return n;
}

std::vector<std::size_t> resolve_grid(const std::vector<std::size_t>& explicit_grid, std::size_t page,
                                      std::size_t max_k, const std::vector<QuerySeries>& series) {
  if (!explicit_grid.empty()) {
    auto grid = explicit_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.front() == 0) throw Error(ErrorKind::CutoffOutOfRange, "k must be at least 1");
    return grid;
  }
  const auto top = max_k ? max_k : longest_list(series);
  return page ? page_grid(top, page) : full_grid(top);
}

ProportionsFor baseline_targets(const std::string& path, const GroupScheme& scheme) {
  if (path.empty()) return {};
  auto table = std::make_shared<BaselineTable>(BaselineTable::load(std::filesystem::path(path)));
  return [table, scheme](const RankingSnapshot& s) { return table->proportions_for(s.query_id(), scheme); };
}

std::vector<DayPair> pairs_for(const QuerySeries& s, const std::string& mode) {
  if (mode == "first") return pairs_from_first(s);
  if (mode == "consecutive") return pairs_at_distance(s, 1);
  if (mode.rfind("distance:", 0) == 0) return pairs_at_distance(s, std::stoi(mode.substr(9)));
  throw Error(ErrorKind::InvalidArgument, "unknown pair mode '" + mode + "'");
}

std::map<std::string, double> parse_shares(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::InvalidArgument, "expected label=share, got " + item);
    const auto cell = parse_cell(item.substr(eq + 1));
    out[item.substr(0, eq)] = cell.get();
  }
  return out;
}

ordered_json wald_json(const WaldTest& t) {
  return {{"coefficient", t.coefficient}, {"null", t.null_value}, {"estimate", t.estimate},
          {"se", t.se},                   {"z", t.z},             {"p", t.p},
          {"ci_lo", t.ci_lo},             {"ci_hi", t.ci_hi}};
}

std::vector<std::string> wald_fields(const WaldTest& t) {
  return {t.coefficient, format_real(t.null_value), format_real(t.estimate), format_real(t.se),
          format_real(t.z), format_real(t.p), format_real(t.ci_lo), format_real(t.ci_hi)};
}

const std::vector<std::string> kWaldHeader{"coefficient", "null", "estimate", "se", "z", "p", "ci_lo", "ci_hi"};

// ---------------------------------------------------------------------------

struct ValidateArgs {
  Common io;
  std::optional<double> max_missing;
  std::size_t min_pool = 0;
  std::string kept_output;
};

void run_validate(const ValidateArgs& a) {
  auto dataset = load_checked(a.io.input);
  const auto& r = dataset.report;
  Sink sink(a.io.output);
  auto& out = sink.get();

  std::optional<FilterResult> filtered;
  if (a.max_missing || a.min_pool) {
    filtered = filter_queries(dataset.series, a.max_missing.value_or(1.0), a.min_pool);
    if (!a.kept_output.empty()) {
      Sink kept(a.kept_output);
      write_dataset(kept.get(), filtered->kept);
    }
  }

  if (a.io.output_format() == OutputFormat::Json) {
    ordered_json o;
    o["lines"] = r.lines_read;
    o["errors"] = r.error_count();
    o["warnings"] = r.warning_count();
    o["series"] = dataset.series.size();
    ordered_json issues = ordered_json::array();
    for (const auto& i : r.issues) {
      issues.push_back({{"severity", i.severity == Severity::Error ? "error" : "warning"},
                        {"line", i.line},
                        {"query_id", i.query_id},
                        {"day", i.day},
                        {"message", i.message}});
    }
    o["issues"] = std::move(issues);
    ordered_json quarantined = ordered_json::array();
    for (const auto& [q, d] : r.quarantined) quarantined.push_back({{"query_id", q}, {"day", d}});
    o["quarantined"] = std::move(quarantined);
    ordered_json snaps = ordered_json::array();
    for (const auto& s : r.snapshots) {
      snaps.push_back({{"query_id", s.query_id},
                       {"day", s.day},
                       {"entries", s.entries},
                       {"missing", s.missing},
                       {"missing_rate", round_to_format(s.missing_rate)}});
    }
    o["snapshots"] = std::move(snaps);
    if (filtered) {
      ordered_json manifest = ordered_json::array();
      for (const auto& m : filtered->manifest) {
        manifest.push_back({{"query_id", m.query_id},
                            {"kept", m.kept},
                            {"missing_rate", round_to_format(m.missing_rate)},
                            {"total_candidates", m.total_candidates},
                            {"reason", m.reason}});
      }
      o["manifest"] = std::move(manifest);
    }
    out << o.dump(2) << '\n';
    return;
  }

  csv::write_row(out, {"query_id", "day", "entries", "missing", "missing_rate", "status"});
  std::set<std::pair<std::string, int>> quarantined(r.quarantined.begin(), r.quarantined.end());
  std::vector<std::vector<std::string>> rows;
  for (const auto& s : r.snapshots) {
    rows.push_back({s.query_id, std::to_string(s.day), std::to_string(s.entries), std::to_string(s.missing),
                    format_real(s.missing_rate), "ok"});
  }
  for (const auto& [q, d] : quarantined) rows.push_back({q, std::to_string(d), "", "", "", "quarantined"});
  std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) {
    return std::make_pair(x[0], std::stoi(x[1])) < std::make_pair(y[0], std::stoi(y[1]));
  });
  for (const auto& row : rows) csv::write_row(out, row);
  if (filtered) {
    out << '\n';
    csv::write_row(out, {"query_id", "kept", "missing_rate", "total_candidates", "reason"});
    for (const auto& m : filtered->manifest) {
      csv::write_row(out, {m.query_id, m.kept ? "true" : "false", format_real(m.missing_rate),
                           std::to_string(m.total_candidates), m.reason});
    }
  }
  std::cerr << r.lines_read << " lines, " << dataset.series.size() << " series, " << r.error_count()
            << " errors, " << r.warning_count() << " warnings, " << r.quarantined.size() << " quarantined\n";
}

struct LabelArgs {
  Common io;
  std::vector<std::string> tables;
  std::string key = "first";
};

void run_label(const LabelArgs& a) {
  const auto scheme = a.io.scheme();
  std::vector<NameFrequencyTable> chain;
  for (const auto& path : a.tables) chain.push_back(load_name_table(std::filesystem::path(path), scheme));
  auto dataset = load_checked(a.io.input);
  auto labeled = label_dataset(dataset.series, scheme, chain, a.key == "full" ? NameKey::FullName : NameKey::FirstName);
  Sink sink(a.io.output);
  write_dataset(sink.get(), labeled.items);
  std::cerr << "coverage " << format_real(labeled.coverage.coverage()) << " (" << labeled.coverage.resolved << " of "
            << labeled.coverage.non_missing << " non-missing candidates)\n";
}

struct GridArgs {
  std::vector<std::size_t> k_grid;
  std::size_t page = 25;
  std::size_t max_k = 0;
};

void add_grid(CLI::App* cmd, GridArgs& g) {
  cmd->add_option("--k-grid", g.k_grid, "Explicit cutoffs")->delimiter(',');
  cmd->add_option("--page", g.page, "Cutoff step when no grid is given (0 = every k)");
  cmd->add_option("--max-k", g.max_k, "Largest cutoff (default: longest list)");
}

struct AuditArgs {
  Common io;
  GridArgs grid;
  std::string baseline;
  std::vector<std::string> metrics;
  std::string heatmap;
  std::string heatmap_label;
};

void run_audit(const AuditArgs& a) {
  const auto scheme = a.io.scheme();
  auto dataset = load_checked(a.io.input);
  const auto grid = resolve_grid(a.grid.k_grid, a.grid.page, a.grid.max_k, dataset.series);
  auto rows = audit_rows(dataset.series, scheme, grid, baseline_targets(a.baseline, scheme));
  if (!a.metrics.empty()) {
    std::erase_if(rows, [&](const LongRow& r) {
      return std::find(a.metrics.begin(), a.metrics.end(), r.metric) == a.metrics.end();
    });
  }
  Sink sink(a.io.output);
  if (a.heatmap.empty()) {
    write_long(sink.get(), std::move(rows), a.io.output_format());
    return;
  }
  std::map<std::pair<std::string, int>, MetricCurve> curves;
  for (const auto& r : rows) {
    if (r.metric != a.heatmap || r.label != a.heatmap_label) continue;
    auto& c = curves[{r.query_id, r.day}];
    c.query_id = r.query_id;
    c.day = r.day;
    c.metric = r.metric;
    c.values.emplace(r.k, r.value);
  }
  std::vector<MetricCurve> list;
  for (auto& [_, c] : curves) list.push_back(std::move(c));
  write_heatmap(sink.get(), curve_heatmap(list), a.io.output_format());
}

struct ChurnArgs {
  Common io;
  GridArgs grid;
  std::string pairs = "first";
  std::string heatmap_label;
};

std::vector<ChurnCell> churn_cells(const std::vector<QuerySeries>& series, const GroupScheme& scheme,
                                   const std::vector<std::size_t>& grid, const std::string& mode) {
  std::vector<ChurnCell> cells;
  for (const auto& s : series) {
    const auto pairs = pairs_for(s, mode);
    if (pairs.empty()) continue;
    auto part = churn_grid(s, scheme, grid, pairs);
    std::move(part.begin(), part.end(), std::back_inserter(cells));
  }
  return cells;
}

void run_churn(const ChurnArgs& a) {
  const auto scheme = a.io.scheme();
  auto dataset = load_checked(a.io.input);
  const auto grid = resolve_grid(a.grid.k_grid, a.grid.page, a.grid.max_k, dataset.series);
  const auto cells = churn_cells(dataset.series, scheme, grid, a.pairs);
  Sink sink(a.io.output);
  if (a.heatmap_label.empty()) {
    write_long(sink.get(), to_long_rows(cells), a.io.output_format());
  } else {
    write_heatmap(sink.get(), churn_heatmap(cells, a.heatmap_label), a.io.output_format());
  }
}

struct RerankArgs {
  Common io;
  std::vector<std::string> shares;
  std::string rule = "underrepresented";
};

void run_rerank(const RerankArgs& a) {
  const auto scheme = a.io.scheme();
  std::ifstream in(a.io.input, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + a.io.input);
  csv::Reader reader(in);
  std::vector<std::string> row;
  if (!reader.next(row) || row != std::vector<std::string>{"candidate_id", "label", "score"}) {
    throw Error(ErrorKind::ParseError, "line 1: expected header candidate_id,label,score");
  }
  std::vector<ScoredCandidate> pool;
  std::map<std::string, double> counts;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 3) throw Error(ErrorKind::ParseError, "line " + std::to_string(reader.line()) + ": expected 3 fields");
    const auto score = parse_cell(row[2]);
    if (!score.is_value()) throw Error(ErrorKind::ParseError, "line " + std::to_string(reader.line()) + ": bad score");
    pool.push_back({row[0], row[1], score.get()});
    counts[row[1]] += 1.0;
  }

  std::map<std::string, double> shares;
  ProportionSource source = ProportionSource::ExternalBaseline;
  if (a.shares.empty()) {
    source = ProportionSource::ObservedPool;
    for (const auto& label : scheme.labels()) shares[label] = counts[label] / static_cast<double>(pool.size());
  } else {
    shares = parse_shares(a.shares);
  }
  const auto proportions = GroupProportions::from_map(scheme, shares, source, pool.size());
  const auto result = detgreedy_rerank(pool, proportions,
                                       a.rule == "score" ? SelectionRule::HighestScore : SelectionRule::MostUnderrepresented);

  Sink sink(a.io.output);
  auto& out = sink.get();
  if (a.io.output_format() == OutputFormat::Json) {
    ordered_json o;
    ordered_json ranking = ordered_json::array();
    for (std::size_t i = 0; i < result.order.size(); ++i) {
      ranking.push_back({{"rank", i + 1}, {"candidate_id", result.order[i]}, {"label", result.labels[i]}});
    }
    o["ranking"] = std::move(ranking);
    ordered_json violations = ordered_json::array();
    for (const auto& v : result.violations) {
      violations.push_back({{"k", v.k}, {"label", v.label}, {"count", v.count}, {"lower", v.lower}, {"upper", v.upper}});
    }
    o["violations"] = std::move(violations);
    out << o.dump(2) << '\n';
  } else {
    csv::write_row(out, {"rank", "candidate_id", "label"});
    for (std::size_t i = 0; i < result.order.size(); ++i) {
      csv::write_row(out, {std::to_string(i + 1), result.order[i], result.labels[i]});
    }
  }
  for (const auto& v : result.violations) {
    std::cerr << "warning: k=" << v.k << " label " << v.label << " count " << v.count << " outside [" << v.lower
              << ", " << v.upper << "]\n";
  }
}

struct StatsArgs {
  Common io;
  GridArgs grid;
  std::string protocol;
  std::string baseline;
  double null_value = kReferenceMinSkew;
  std::string pairs = "first";
  double max_missing = 1.0;
  std::size_t min_pool = 0;
};

void run_stats(const StatsArgs& a) {
  const auto scheme = a.io.scheme();
  auto dataset = load_checked(a.io.input);
  auto series = filter_queries(dataset.series, a.max_missing, a.min_pool).kept;
  const auto grid = resolve_grid(a.grid.k_grid, a.grid.page, a.grid.max_k, series);
  Sink sink(a.io.output);
  auto& out = sink.get();
  const bool json = a.io.output_format() == OutputFormat::Json;

  if (a.protocol == "minskew") {
    const auto obs = min_skew_observations(series, scheme, grid, baseline_targets(a.baseline, scheme));
    const auto rows = minskew_protocol(obs, a.null_value);
    ordered_json arr = ordered_json::array();
    if (!json) {
      auto header = std::vector<std::string>{"k"};
      header.insert(header.end(), kWaldHeader.begin(), kWaldHeader.end());
      for (const char* h : {"tau2", "sigma2", "n_obs", "n_groups", "excluded_neg_inf", "excluded_undefined"}) header.push_back(h);
      csv::write_row(out, header);
    }
    for (const auto& r : rows) {
      if (json) {
        auto o = wald_json(r.test);
        o["k"] = r.k;
        o["tau2"] = r.fit.tau2;
        o["sigma2"] = r.fit.sigma2;
        o["n_obs"] = r.fit.n_obs;
        o["n_groups"] = r.fit.n_groups;
        o["excluded_neg_inf"] = r.excluded_neg_infinite;
        o["excluded_undefined"] = r.excluded_undefined;
        o["warnings"] = r.fit.warnings;
        arr.push_back(std::move(o));
        continue;
      }
      std::vector<std::string> f{std::to_string(r.k)};
      const auto w = wald_fields(r.test);
      f.insert(f.end(), w.begin(), w.end());
      f.insert(f.end(), {format_real(r.fit.tau2), format_real(r.fit.sigma2), std::to_string(r.fit.n_obs),
                         std::to_string(r.fit.n_groups), std::to_string(r.excluded_neg_infinite),
                         std::to_string(r.excluded_undefined)});
      csv::write_row(out, f);
      for (const auto& w : r.fit.warnings) std::cerr << "warning: k=" << r.k << ": " << w << '\n';
    }
    if (json) out << arr.dump(2) << '\n';
    return;
  }

  const auto cells = churn_cells(series, scheme, grid, a.pairs);
  const auto rows = churn_protocol(cells, scheme);
  ordered_json arr = ordered_json::array();
  if (!json) {
    auto header = std::vector<std::string>{"k"};
    header.insert(header.end(), kWaldHeader.begin(), kWaldHeader.end());
    header.insert(header.end(), {"queries_used", "queries_dropped"});
    csv::write_row(out, header);
  }
  for (const auto& r : rows) {
    std::vector<WaldTest> tests = r.group_tests;
    if (r.day_test) tests.push_back(*r.day_test);
    for (const auto& t : tests) {
      if (json) {
        auto o = wald_json(t);
        o["k"] = r.k;
        o["queries_used"] = r.queries_used;
        o["queries_dropped"] = r.queries_dropped;
        arr.push_back(std::move(o));
        continue;
      }
      std::vector<std::string> f{std::to_string(r.k)};
      const auto w = wald_fields(t);
      f.insert(f.end(), w.begin(), w.end());
      f.insert(f.end(), {std::to_string(r.queries_used), std::to_string(r.queries_dropped)});
      csv::write_row(out, f);
    }
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  }
  if (json) out << arr.dump(2) << '\n';
}

struct SimulateArgs {
  Common io;
  std::optional<std::uint64_t> seed;
  SimConfig config;
  std::vector<double> score_means;
  std::vector<double> score_spreads;
  std::string postprocess = "none";
  std::string rule = "underrepresented";
  std::string replacement = "same-group";
  std::string ledger;
  std::string name_table;
  std::string bias_label;
  double bias_strength = 0.0;
  std::size_t bias_region = 25;
};

void run_simulate(SimulateArgs a) {
  auto& c = a.config;
  c.seed = *a.seed;
  c.scheme = a.io.scheme();
  c.postprocess = a.postprocess == "detgreedy" ? Postprocess::DetGreedy : Postprocess::None;
  c.rule = a.rule == "score" ? SelectionRule::HighestScore : SelectionRule::MostUnderrepresented;
  c.replacement = a.replacement == "query-shares" ? Replacement::QueryShares : Replacement::SameGroup;
  if (!a.score_means.empty() || !a.score_spreads.empty()) {
    c.scores.assign(c.scheme.size(), ScoreModel{});
    for (std::size_t i = 0; i < c.scores.size(); ++i) {
      if (i < a.score_means.size()) c.scores[i].mean = a.score_means[i];
      if (i < a.score_spreads.size()) c.scores[i].spread = a.score_spreads[i];
    }
  }
  auto data = generate(c);
  if (!a.bias_label.empty()) {
    inject_topk_bias(data, c.scheme, a.bias_label, a.bias_strength, derive_key(c.seed, stable_hash("topk-bias")), a.bias_region);
  }
  Sink sink(a.io.output);
  write_dataset(sink.get(), data.series);
  if (!a.ledger.empty()) {
    Sink ledger(a.ledger);
    write_ledger(ledger.get(), data.truth);
  }
  if (!a.name_table.empty()) {
    Sink names(a.name_table);
    const auto table = synthetic_name_table(c);
    csv::write_row(names.get(), {"name", "label", "count"});
    for (const auto& [name, counts] : table.entries()) {
      for (const auto& [label, n] : counts) csv::write_row(names.get(), {name, label, std::to_string(n)});
    }
  }
}

struct ExportArgs {
  Common io;
  std::string metric;
  std::string label;
};

void run_export(const ExportArgs& a) {
  std::ifstream in(a.io.input, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + a.io.input);
  const auto rows = read_long_csv(in);
  Sink sink(a.io.output);
  const bool churn = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.start_day.has_value(); });
  if (churn) {
    std::vector<ChurnCell> cells;
    for (const auto& r : rows) {
      ChurnCell cell;
      cell.query_id = r.query_id;
      cell.attribute = r.attribute;
      cell.label = r.label;
      cell.k = r.k;
      cell.start_day = r.start_day.value_or(0);
      cell.end_day = r.end_day.value_or(r.day);
      if (r.value.is_value()) cell.churn = r.value.get();
      cells.push_back(std::move(cell));
    }
    write_heatmap(sink.get(), churn_heatmap(cells, a.label), a.io.output_format());
    return;
  }
  if (a.metric.empty()) throw Error(ErrorKind::InvalidArgument, "--metric is required for curve tables");
  std::map<std::pair<std::string, int>, MetricCurve> curves;
  for (const auto& r : rows) {
    if (r.metric != a.metric || r.label != a.label) continue;
    auto& c = curves[{r.query_id, r.day}];
    c.query_id = r.query_id;
    c.day = r.day;
    c.values.emplace(r.k, r.value);
  }
  std::vector<MetricCurve> list;
  for (auto& [_, c] : curves) list.push_back(std::move(c));
  write_heatmap(sink.get(), curve_heatmap(list), a.io.output_format());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness audit toolkit for ranked candidate lists"};
  app.set_config("--config", "", "Config file of option defaults (key = value, [subcommand] sections)");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  ValidateArgs validate;
  auto* cmd_validate = app.add_subcommand("validate", "Check a snapshot file and report per-snapshot missing rates");
  add_io(cmd_validate, validate.io);
  cmd_validate->add_option("--max-missing", validate.max_missing, "Drop queries above this day-1 missing rate");
  cmd_validate->add_option("--min-pool", validate.min_pool, "Drop queries with fewer total candidates");
  cmd_validate->add_option("--kept", validate.kept_output, "Write the kept series as JSONL");

  LabelArgs label;
  auto* cmd_label = app.add_subcommand("label", "Infer group labels from names");
  add_io(cmd_label, label.io);
  add_scheme(cmd_label, label.io);
  cmd_label->add_option("--names", label.tables, "Name frequency tables, consulted in order")->required();
  cmd_label->add_option("--key", label.key, "Name used for lookup")->check(CLI::IsMember({"first", "full"}));

  AuditArgs audit;
  auto* cmd_audit = app.add_subcommand("audit", "Deviation, skew, corrected skew and MinSkew curves");
  add_io(cmd_audit, audit.io);
  add_scheme(cmd_audit, audit.io);
  add_grid(cmd_audit, audit.grid);
  cmd_audit->add_option("--baseline", audit.baseline, "Baseline shares CSV (default: observed pool shares)");
  cmd_audit->add_option("--metric", audit.metrics, "Only emit these metrics")->delimiter(',');
  cmd_audit->add_option("--heatmap", audit.heatmap, "Emit a query x k matrix of this metric");
  cmd_audit->add_option("--heatmap-label", audit.heatmap_label, "Label for --heatmap (empty for min_skew)");

  ChurnArgs churn;
  auto* cmd_churn = app.add_subcommand("churn", "Day-over-day churn per group");
  add_io(cmd_churn, churn.io);
  add_scheme(cmd_churn, churn.io);
  add_grid(cmd_churn, churn.grid);
  cmd_churn->add_option("--pairs", churn.pairs, "first | consecutive | distance:N");
  cmd_churn->add_option("--heatmap", churn.heatmap_label, "Emit a day-pair x k matrix for this label");

  RerankArgs rerank;
  auto* cmd_rerank = app.add_subcommand("rerank", "Re-rank a scored pool (CSV candidate_id,label,score)");
  add_io(cmd_rerank, rerank.io);
  add_scheme(cmd_rerank, rerank.io);
  cmd_rerank->add_option("--shares", rerank.shares, "Target shares label=value (default: pool shares)")->delimiter(',');
  cmd_rerank->add_option("--rule", rerank.rule, "Choice among groups within bounds")
      ->check(CLI::IsMember({"underrepresented", "score"}));

  StatsArgs stats;
  auto* cmd_stats = app.add_subcommand("stats", "Random-intercept tests of MinSkew or churn");
  add_io(cmd_stats, stats.io);
  add_scheme(cmd_stats, stats.io);
  add_grid(cmd_stats, stats.grid);
  cmd_stats->add_option("protocol", stats.protocol, "minskew | churn")
      ->required()
      ->check(CLI::IsMember({"minskew", "churn"}));
  cmd_stats->add_option("--baseline", stats.baseline, "Baseline shares CSV for minskew");
  cmd_stats->add_option("--null", stats.null_value, "MinSkew null value");
  cmd_stats->add_option("--pairs", stats.pairs, "Day pairs for churn: first | consecutive | distance:N");
  cmd_stats->add_option("--max-missing", stats.max_missing, "Drop queries above this day-1 missing rate");
  cmd_stats->add_option("--min-pool", stats.min_pool, "Drop queries with fewer total candidates");

  SimulateArgs sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Write a synthetic snapshot file with ground truth");
  add_io(cmd_sim, sim.io, false);
  add_scheme(cmd_sim, sim.io);
  cmd_sim->add_option("--seed", sim.seed, "Random seed")->required();
  cmd_sim->add_option("--queries", sim.config.n_queries, "Number of queries");
  cmd_sim->add_option("--pool-min", sim.config.pool_min, "Smallest pool");
  cmd_sim->add_option("--pool-max", sim.config.pool_max, "Largest pool");
  cmd_sim->add_option("--shares", sim.config.shares, "Group shares, label order")->delimiter(',');
  cmd_sim->add_option("--share-jitter", sim.config.share_jitter, "Per-query log-normal share jitter");
  cmd_sim->add_option("--score-mean", sim.score_means, "Score mean per label")->delimiter(',');
  cmd_sim->add_option("--score-spread", sim.score_spreads, "Score spread per label")->delimiter(',');
  cmd_sim->add_option("--postprocess", sim.postprocess, "none | detgreedy")
      ->check(CLI::IsMember({"none", "detgreedy"}));
  cmd_sim->add_option("--rule", sim.rule, "DetGreedy rule")->check(CLI::IsMember({"underrepresented", "score"}));
  cmd_sim->add_option("--days", sim.config.days, "Days per query");
  cmd_sim->add_option("--departure", sim.config.departure, "Daily departure probability per label")->delimiter(',');
  cmd_sim->add_option("--replacement", sim.replacement, "same-group | query-shares")
      ->check(CLI::IsMember({"same-group", "query-shares"}));
  cmd_sim->add_option("--score-noise", sim.config.daily_score_noise, "Daily score perturbation");
  cmd_sim->add_option("--missing", sim.config.missing_probability, "Probability a candidate is anonymized");
  cmd_sim->add_option("--query-prefix", sim.config.query_prefix, "Query id prefix");
  cmd_sim->add_option("--bias-label", sim.bias_label, "Demote this group near the top");
  cmd_sim->add_option("--bias-strength", sim.bias_strength, "Demotion probability");
  cmd_sim->add_option("--bias-region", sim.bias_region, "Top positions affected");
  cmd_sim->add_option("--ledger", sim.ledger, "Ground-truth JSONL output");
  cmd_sim->add_option("--name-table", sim.name_table, "Write a name table that labels the synthetic names");

  ExportArgs exp;
  auto* cmd_export = app.add_subcommand("export", "Turn a long-format CSV into a heatmap matrix");
  add_io(cmd_export, exp.io);
  cmd_export->add_option("--metric", exp.metric, "Metric for curve tables");
  cmd_export->add_option("--label", exp.label, "Group label (empty for min_skew)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (cmd_validate->parsed()) run_validate(validate);
    else if (cmd_label->parsed()) run_label(label);
    else if (cmd_audit->parsed()) run_audit(audit);
    else if (cmd_churn->parsed()) run_churn(churn);
    else if (cmd_rerank->parsed()) run_rerank(rerank);
    else if (cmd_stats->parsed()) run_stats(stats);
    else if (cmd_sim->parsed()) run_simulate(sim);
    else if (cmd_export->parsed()) run_export(exp);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return g_status;
}
