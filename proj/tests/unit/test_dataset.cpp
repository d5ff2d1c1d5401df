#include <sstream>

#include "doctest.h"
#include "rankaudit/dataset.hpp"
#include "rankaudit/simulator.hpp"
#include "support.hpp"

using namespace rankaudit;

namespace {

std::string row(const std::string& q, int day, int rank, const std::string& id, const std::string& label,
                bool missing = false) {
  std::ostringstream s;
  s << R"({"query_id":")" << q << R"(","day":)" << day << R"(,"rank":)" << rank << R"(,"candidate_id":")" << id
    << "\",";
  if (missing) {
    s << R"("first_name":null,"last_name":null,"groups":null,"missing":true})";
  } else {
    s << R"("first_name":"N)" << id << R"(","last_name":"L","groups":{"gender":")" << label
      << R"("},"missing":false})";
  }
  return s.str() + "\n";
}

Dataset load(const std::string& text) {
  std::istringstream in(text);
  return load_dataset(in);
}

bool has_message(const ValidationReport& r, const std::string& fragment, std::size_t line) {
  for (const auto& i : r.issues) {
    if (i.line == line && i.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("a well-formed file loads cleanly") {
  const auto d = load(row("b", 1, 1, "x", "F") + row("b", 1, 2, "y", "M") + row("a", 1, 1, "z", "M") +
                      row("a", 1, 2, "w", "", true) + row("a", 2, 1, "z", "M") + "\n");
  CHECK(d.report.clean());
  CHECK(d.report.issues.empty());
  CHECK(d.report.lines_read == 5);
  REQUIRE(d.series.size() == 2);
  CHECK(d.series[0].query_id() == "a");
  CHECK(d.series[0].days() == std::vector<int>{1, 2});
  CHECK(d.series[0].at(1).missing_count() == 1);
  CHECK(d.series[1].at(1).entries()[1].group_labels.at("gender") == "M");
  CHECK(d.report.snapshots.size() == 3);
}

TEST_CASE("a rank gap quarantines only its snapshot and names the line") {
  const auto d = load(row("a", 1, 1, "x", "F") + row("a", 1, 3, "y", "M") + row("b", 1, 1, "z", "F"));
  REQUIRE(d.report.quarantined.size() == 1);
  CHECK(d.report.quarantined[0] == std::pair<std::string, int>{"a", 1});
  CHECK(has_message(d.report, "rank gap", 2));
  CHECK_FALSE(d.report.clean());
  REQUIRE(d.series.size() == 1);
  CHECK(d.series[0].query_id() == "b");
}

TEST_CASE("duplicate ranks and duplicate ids are integrity errors") {
  const auto dup_rank = load(row("a", 1, 1, "x", "F") + row("a", 1, 1, "y", "M"));
  CHECK(dup_rank.report.quarantined.size() == 1);
  CHECK(has_message(dup_rank.report, "duplicate rank", 2));

  const auto dup_id = load(row("a", 1, 1, "x", "F") + row("a", 1, 2, "x", "M"));
  CHECK(dup_id.report.quarantined.size() == 1);
  CHECK(has_message(dup_id.report, "first seen on line 1", 2));
  CHECK(dup_id.series.empty());
}

TEST_CASE("a missing entry carrying names is rejected") {
  const auto d = load(row("a", 1, 1, "x", "F") +
                      R"({"query_id":"a","day":1,"rank":2,"candidate_id":"y","first_name":"Ann","last_name":null,"groups":null,"missing":true})"
                      "\n");
  CHECK(d.report.quarantined.size() == 1);
  CHECK(has_message(d.report, "missing entry", 2));
}

TEST_CASE("malformed lines are reported and poison their snapshot") {
  const auto d = load(row("a", 1, 1, "x", "F") + "{not json\n" + R"({"query_id":"a","day":1,"rank":"two"})" + "\n" +
                      row("b", 1, 1, "z", "F"));
  CHECK(d.report.error_count() == 2);
  CHECK(has_message(d.report, "ParseError", 2));
  CHECK(has_message(d.report, "ParseError", 3));
  CHECK(d.report.quarantined == std::vector<std::pair<std::string, int>>{{"a", 1}});
  REQUIRE(d.series.size() == 1);
  CHECK(d.series[0].query_id() == "b");
}

TEST_CASE("out-of-order ranks only warn") {
  const auto d = load(row("a", 1, 2, "y", "M") + row("a", 1, 1, "x", "F"));
  CHECK(d.report.clean());
  CHECK(d.report.warning_count() == 1);
  REQUIRE(d.series.size() == 1);
  CHECK(d.series[0].at(1).entries()[0].candidate_id == "x");
}

TEST_CASE("write then load reproduces simulated series") {
  SimConfig c;
  c.seed = 21;
  c.n_queries = 6;
  c.pool_min = 20;
  c.pool_max = 60;
  c.days = 3;
  c.departure = {0.2, 0.2};
  c.missing_probability = 0.15;
  const auto sim = generate(c);
  std::ostringstream out;
  write_dataset(out, sim.series);
  const auto d = load(out.str());
  CHECK(d.report.issues.empty());
  CHECK(d.series == sim.series);

  std::ostringstream again;
  write_dataset(again, d.series);
  CHECK(again.str() == out.str());
}

TEST_CASE("filtering by missing rate and pool size") {
  std::vector<QuerySeries> series;
  const auto one = [&](const std::string& q, const std::string& pattern) {
    series.emplace_back(q, std::vector<RankingSnapshot>{testing::ranking(pattern, q, 1)});
  };
  one("clean", std::string(150, 'F'));
  one("two_pct", std::string(98, 'M') + "xx");   // 0.02 missing
  one("small", std::string(50, 'F'));
  one("masked", std::string(80, 'M') + std::string(40, 'x'));  // 1/3 missing

  const auto all = filter_queries(series, 1.0, 0);
  CHECK(all.kept == series);
  CHECK(all.manifest.size() == 4);

  const auto strict = filter_queries(series, 0.01, 0);
  CHECK(strict.kept.size() == 2);
  CHECK_FALSE(strict.manifest[1].kept);
  CHECK(strict.manifest[1].missing_rate == doctest::Approx(0.02));
  CHECK(strict.manifest[1].reason.find("missing rate") != std::string::npos);

  const auto usual = filter_queries(series, 0.15, 100);
  REQUIRE(usual.kept.size() == 2);
  CHECK(usual.kept[0].query_id() == "clean");
  CHECK(usual.kept[1].query_id() == "two_pct");
  CHECK(usual.manifest[2].reason.find("pool 50 < 100") != std::string::npos);
  CHECK(usual.manifest[3].reason.find("missing rate") != std::string::npos);

  CHECK_ERROR_KIND(filter_queries(series, 1.5, 0), ErrorKind::InvalidArgument);
}

TEST_CASE("filtering looks only at the first snapshot") {
  std::vector<RankingSnapshot> days{testing::ranking("FFMM", "q", 1), testing::ranking("xxxx", "q", 2)};
  const std::vector<QuerySeries> series{QuerySeries("q", std::move(days))};
  CHECK(filter_queries(series, 0.0, 4).kept.size() == 1);
}

TEST_CASE("baseline tables") {
  std::istringstream in(
      "query_id,attribute,label,share\n"
      "nurse,gender,F,0.8\n"
      "nurse,gender,M,0.2\n"
      "*,gender,F,0.45\n"
      "*,gender,M,0.55\n");
  const auto table = BaselineTable::load(in);
  const auto& scheme = testing::gender();
  CHECK(table.contains("nurse", "gender"));
  CHECK_FALSE(table.contains("nurse", "race"));
  const auto nurse = table.proportions_for("nurse", scheme);
  CHECK(nurse.share("F") == doctest::Approx(0.8));
  CHECK(nurse.source() == ProportionSource::ExternalBaseline);
  const auto other = table.proportions_for("welder", scheme);
  CHECK(other.share("M") == doctest::Approx(0.55));

  std::istringstream bad_sum("query_id,attribute,label,share\nq,gender,F,0.5\nq,gender,M,0.4\n");
  CHECK_ERROR_KIND(BaselineTable::load(bad_sum), ErrorKind::IntegrityError);
  std::istringstream bad_number("query_id,attribute,label,share\nq,gender,F,half\n");
  CHECK_ERROR_KIND(BaselineTable::load(bad_number), ErrorKind::ParseError);
  std::istringstream no_default("query_id,attribute,label,share\nq,gender,F,0.5\nq,gender,M,0.5\n");
  CHECK_ERROR_KIND(BaselineTable::load(no_default).proportions_for("other", scheme),
                   ErrorKind::LabelWithoutProportion);
}

}  // TEST_SUITE
