#include <algorithm>
#include <set>
#include <unordered_set>

#include "doctest.h"
#include "rankaudit/exposure_metrics.hpp"
#include "rankaudit/temporal_metrics.hpp"
#include "support.hpp"

using namespace rankaudit;
using testing::Gen;
using testing::gender;
using testing::person;

namespace {

struct Slot {
  std::string id;
  char label;  // 'F', 'M', 'u' (unlabeled) or 'x' (anonymized)
};

RankingSnapshot snapshot_of(const std::vector<Slot>& slots, int day) {
  std::vector<CandidateRecord> entries;
  for (const auto& s : slots) {
    if (s.label == 'x') entries.push_back(CandidateRecord::anonymized(s.id));
    else entries.push_back(person(s.id, s.label == 'u' ? "" : std::string(1, s.label)));
  }
  return RankingSnapshot("q", day, std::move(entries));
}

// A multi-day series where each day keeps most candidates, drops some and
// shuffles locally.
std::vector<std::vector<Slot>> random_days(Gen& gen, std::size_t n, int days) {
  std::vector<std::vector<Slot>> out;
  std::vector<Slot> current;
  std::size_t next = 0;
  const char kinds[] = {'F', 'M', 'F', 'M', 'u', 'x'};
  for (std::size_t i = 0; i < n; ++i) current.push_back({"c" + std::to_string(next++), kinds[gen.index(6)]});
  out.push_back(current);
  for (int d = 1; d < days; ++d) {
    for (auto& s : current) {
      if (gen.chance(0.2)) s = {"c" + std::to_string(next++), kinds[gen.index(6)]};
    }
    for (std::size_t i = 0; i + 1 < current.size(); ++i) {
      if (gen.chance(0.3)) std::swap(current[i], current[i + 1 + gen.index(std::min<std::size_t>(10, current.size() - i - 1))]);
    }
    out.push_back(current);
  }
  return out;
}

QuerySeries series_of(const std::vector<std::vector<Slot>>& days) {
  std::vector<RankingSnapshot> snaps;
  for (std::size_t d = 0; d < days.size(); ++d) snaps.push_back(snapshot_of(days[d], static_cast<int>(d + 1)));
  return QuerySeries("q", std::move(snaps));
}

// Hash-set oracle: departed members of `label` over members in the start top-k.
std::optional<double> oracle(const std::vector<Slot>& start, const std::vector<Slot>& end, char label, std::size_t k) {
  std::unordered_set<std::string> kept;
  for (std::size_t i = 0; i < k; ++i) kept.insert(end[i].id);
  std::size_t base = 0, gone = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (start[i].label != label) continue;
    ++base;
    gone += !kept.contains(start[i].id);
  }
  if (base == 0) return std::nullopt;
  return static_cast<double>(gone) / static_cast<double>(base);
}

}  // namespace

TEST_SUITE("temporal_metrics") {

TEST_CASE("identical days give zero churn, disjoint days give one") {
  const std::vector<Slot> day1{{"a", 'F'}, {"b", 'M'}, {"c", 'F'}, {"d", 'M'}};
  const std::vector<Slot> other{{"e", 'F'}, {"f", 'M'}, {"g", 'F'}, {"h", 'M'}};
  const auto same = series_of({day1, day1});
  const auto swapped = series_of({day1, other});
  for (std::size_t k = 1; k <= 4; ++k) {
    for (const char* label : {"F", "M"}) {
      const auto c0 = churn_rate(same, gender(), label, k, 1, 2);
      if (c0.base_count) CHECK(*c0.churn == 0.0);
      const auto c1 = churn_rate(swapped, gender(), label, k, 1, 2);
      if (c1.base_count) CHECK(*c1.churn == 1.0);
    }
  }
  CHECK_FALSE(churn_rate(same, gender(), "M", 1, 1, 2).churn.has_value());
}

TEST_CASE("argument errors") {
  const std::vector<Slot> day{{"a", 'F'}, {"b", 'M'}};
  const auto s = series_of({day, day});
  CHECK_ERROR_KIND(churn_rate(s, gender(), "F", 1, 2, 1), ErrorKind::InvalidDayPair);
  CHECK_ERROR_KIND(churn_rate(s, gender(), "F", 1, 1, 1), ErrorKind::InvalidDayPair);
  CHECK_ERROR_KIND(churn_rate(s, gender(), "F", 1, 1, 3), ErrorKind::DayMissing);
  CHECK_ERROR_KIND(churn_rate(s, gender(), "F", 3, 1, 2), ErrorKind::CutoffOutOfRange);
  CHECK_ERROR_KIND(churn_grid(s, gender(), {1}, {{1, 4}}), ErrorKind::DayMissing);
}

TEST_CASE("churn matches a hash-set oracle on random five-day series") {
  Gen gen(2);
  for (int trial = 0; trial < 30; ++trial) {
    const auto days = random_days(gen, 80, 5);
    const auto series = series_of(days);
    for (int s = 1; s <= 5; ++s) {
      for (int e = s + 1; e <= 5; ++e) {
        for (std::size_t k : {1u, 7u, 25u, 50u, 80u}) {
          for (char label : {'F', 'M'}) {
            const auto cell = churn_rate(series, gender(), std::string(1, label), k, s, e);
            const auto expected = oracle(days[s - 1], days[e - 1], label, k);
            REQUIRE(cell.churn.has_value() == expected.has_value());
            if (expected) {
              CHECK(*cell.churn == doctest::Approx(*expected));
              CHECK(*cell.churn >= 0.0);
              CHECK(*cell.churn <= 1.0);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("departures partition across groups, unlabeled and anonymized entries") {
  Gen gen(6);
  for (int trial = 0; trial < 30; ++trial) {
    const auto days = random_days(gen, 60, 2);
    const auto series = series_of(days);
    for (std::size_t k = 1; k <= 60; k += 3) {
      std::set<std::string> end_top;
      for (std::size_t i = 0; i < k; ++i) end_top.insert(days[1][i].id);
      std::size_t total = 0, other = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (end_top.contains(days[0][i].id)) continue;
        ++total;
        other += days[0][i].label == 'u' || days[0][i].label == 'x';
      }
      const auto f = churn_rate(series, gender(), "F", k, 1, 2);
      const auto m = churn_rate(series, gender(), "M", k, 1, 2);
      CHECK(f.departed + m.departed + other == total);
    }
  }
}

TEST_CASE("reordering below the cutoff does not change churn") {
  Gen gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    auto days = random_days(gen, 50, 2);
    const std::size_t k = gen.between(1, 49);
    const auto before = series_of(days);
    std::shuffle(days[0].begin() + static_cast<long>(k), days[0].end(), gen.engine());
    std::shuffle(days[1].begin() + static_cast<long>(k), days[1].end(), gen.engine());
    const auto after = series_of(days);
    for (const char* label : {"F", "M"}) {
      CHECK(churn_rate(before, gender(), label, k, 1, 2).churn == churn_rate(after, gender(), label, k, 1, 2).churn);
    }
  }
}

TEST_CASE("rotating the tail while the top-k stays fixed gives zero churn") {
  Gen gen(10);
  auto days = random_days(gen, 40, 1);
  const std::size_t k = 15;
  auto rotated = days[0];
  std::rotate(rotated.begin() + k, rotated.begin() + k + 7, rotated.end());
  const auto s = series_of({days[0], rotated});
  for (const char* label : {"F", "M"}) {
    const auto c = churn_rate(s, gender(), label, k, 1, 2);
    if (c.churn) CHECK(*c.churn == 0.0);
  }
}

TEST_CASE("grid shape, ordering and agreement with single cells") {
  Gen gen(13);
  const auto days = random_days(gen, 200, 5);
  const auto series = series_of(days);
  const auto ks = page_grid(200, 25);
  const auto pairs = pairs_from_first(series);
  CHECK(pairs == std::vector<DayPair>{{1, 2}, {1, 3}, {1, 4}, {1, 5}});

  const auto cells = churn_grid(series, gender(), ks, pairs);
  REQUIRE(cells.size() == 2 * 4 * 8);
  std::size_t i = 0;
  for (const char* label : {"F", "M"}) {
    for (const auto& [s, e] : pairs) {
      for (auto k : ks) {
        const auto& cell = cells[i++];
        CHECK(cell.label == label);
        CHECK(cell.start_day == s);
        CHECK(cell.end_day == e);
        CHECK(cell.k == k);
        CHECK(cell.churn == churn_rate(series, gender(), label, k, s, e).churn);
      }
    }
  }

  // Cutoffs past the list become undefined cells instead of errors.
  const auto wide = churn_grid(series, gender(), {100, 500}, {{1, 2}});
  CHECK(wide[1].k == 500);
  CHECK_FALSE(wide[1].churn.has_value());
}

TEST_CASE("averaging by day distance") {
  Gen gen(14);
  const auto days = random_days(gen, 100, 5);
  const auto series = series_of(days);
  const auto pairs = pairs_at_distance(series, 1);
  CHECK(pairs == std::vector<DayPair>{{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  CHECK(pairs_at_distance(series, 3) == std::vector<DayPair>{{1, 4}, {2, 5}});

  const auto cells = churn_grid(series, gender(), {25, 50}, pairs);
  const auto summary = mean_churn_by_distance(cells);
  for (const auto& row : summary) {
    CHECK(row.distance == 1);
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [s, e] : pairs) {
      if (auto c = churn_rate(series, gender(), row.label, row.k, s, e).churn) {
        sum += *c;
        ++n;
      }
    }
    CHECK(row.cells == n);
    CHECK(row.mean == doctest::Approx(sum / static_cast<double>(n)));
  }
  CHECK(summary.size() == 4);
}

}  // TEST_SUITE
