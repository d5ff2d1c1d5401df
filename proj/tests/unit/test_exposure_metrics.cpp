#include <cmath>
#include <limits>

#include "doctest.h"
#include "rankaudit/detgreedy.hpp"
#include "rankaudit/exposure_metrics.hpp"
#include "support.hpp"

using namespace rankaudit;
using testing::Gen;
using testing::gender;
using testing::ranking;

namespace {

GroupProportions targets(double f) {
  return GroupProportions(gender(), {f, 1.0 - f}, ProportionSource::ExternalBaseline, 0);
}

// Top-k composition built directly from counts, F first.
RankingSnapshot block(std::size_t f, std::size_t m) {
  return ranking(std::string(f, 'F') + std::string(m, 'M'));
}

// Smallest |ln((c/k)/p)| over every non-zero count c <= k, by scanning.
double brute_best_skew(double p, std::size_t k) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 1; c <= k; ++c) {
    best = std::min(best, std::abs(std::log((static_cast<double>(c) / static_cast<double>(k)) / p)));
  }
  return best;
}

}  // namespace

TEST_SUITE("exposure_metrics") {

TEST_CASE("top-k counts on small lists") {
  auto c = topk_counts(ranking("FMF"), gender(), 2);
  CHECK(c.counts == std::vector<std::size_t>{1, 1});
  CHECK(c.labeled_total == 2);

  c = topk_counts(ranking("FxM"), gender(), 2);
  CHECK(c.counts == std::vector<std::size_t>{1, 0});
  CHECK(c.labeled_total == 1);

  CHECK_ERROR_KIND(topk_counts(ranking("FM"), gender(), 0), ErrorKind::CutoffOutOfRange);
  CHECK_ERROR_KIND(topk_counts(ranking("FM"), gender(), 3), ErrorKind::CutoffOutOfRange);
}

TEST_CASE("prefix counts match a brute-force recount at every k") {
  Gen gen(1);
  for (int trial = 0; trial < 40; ++trial) {
    const auto pattern = gen.pattern(300, "FM", 0.08, 0.04);
    const auto snap = ranking(pattern);
    const PrefixCounts prefix(snap, gender());
    for (std::size_t k = 1; k <= pattern.size(); ++k) {
      std::size_t f = 0, m = 0;
      for (std::size_t i = 0; i < k; ++i) {
        f += pattern[i] == 'F';
        m += pattern[i] == 'M';
      }
      const auto fast = prefix.at(k);
      CHECK(fast.counts[0] == f);
      CHECK(fast.counts[1] == m);
      CHECK(fast.labeled_total == f + m);
      if (k % 37 == 0) CHECK(topk_counts(snap, gender(), k).counts == fast.counts);
    }
  }
}

TEST_CASE("worked MinSkew example") {
  const auto before = block(30, 70);
  const auto p = targets(0.40);
  CHECK(std::abs(skew_at_k(before, gender(), p, "F", 100).get() - (-0.2877)) < 5e-4);
  CHECK(std::abs(skew_at_k(before, gender(), p, "F", 100).get() - std::log(0.75)) < 1e-15);
  CHECK(std::abs(skew_at_k(before, gender(), p, "M", 100).get() - 0.154) < 5e-4);
  CHECK(std::abs(min_skew_at_k(before, gender(), p, 100).get() - (-0.2877)) < 5e-4);

  const auto dev = deviation_curve(before, gender(), p, "F", {100});
  CHECK(dev.values.at(100).get() == doctest::Approx(0.10));

  const auto after = block(39, 61);
  CHECK(std::abs(min_skew_at_k(after, gender(), p, 100).get() - (-0.0253)) < 5e-4);
}

TEST_CASE("parity gives zero deviation and skew") {
  const auto snap = ranking("FMMFMFMMFM");
  const auto p = targets(0.4);
  CHECK(deviation_curve(snap, gender(), p, "F", {10}).values.at(10).get() == doctest::Approx(0.0));
  CHECK(skew_at_k(snap, gender(), p, "F", 10).get() == 0.0);
  CHECK(min_skew_at_k(snap, gender(), p, 10).get() == 0.0);
}

TEST_CASE("zero shares and targets") {
  const auto all_m = ranking("MMMM");
  CHECK(skew_at_k(all_m, gender(), targets(0.5), "F", 3).is_neg_infinite());
  CHECK(min_skew_at_k(all_m, gender(), targets(0.5), 3).is_neg_infinite());
  CHECK_ERROR_KIND(skew_at_k(all_m, gender(), targets(0.0), "F", 3), ErrorKind::ZeroTargetProportion);
  CHECK_ERROR_KIND(min_skew_at_k(all_m, gender(), targets(0.0), 3), ErrorKind::ZeroTargetProportion);
  CHECK(skew_at_k(ranking("xxMF"), gender(), targets(0.5), "F", 2).is_undefined());
  CHECK(deviation_curve(ranking("xxMF"), gender(), targets(0.5), "F", {1, 4, 9}).values.at(1).is_undefined());
  CHECK(deviation_curve(ranking("xxMF"), gender(), targets(0.5), "F", {1, 4, 9}).values.at(9).is_undefined());
}

TEST_CASE("best attainable skew") {
  CHECK(best_attainable_skew(0.5, 4) == 0.0);
  CHECK(best_attainable_skew(0.4, 3) == doctest::Approx(std::abs(std::log(5.0 / 6.0))));
  CHECK(best_attainable_skew(0.4, 3) == doctest::Approx(0.1823).epsilon(1e-3));
  // floor(0.1 * 5) = 0 leaves only the ceiling branch.
  CHECK(best_attainable_skew(0.1, 5) == doctest::Approx(std::log(2.0)));
  // 0.3 * 10 is 3 up to rounding.
  CHECK(best_attainable_skew(0.3, 10) == 0.0);
  CHECK_ERROR_KIND(best_attainable_skew(0.0, 4), ErrorKind::DegenerateProportion);
  CHECK_ERROR_KIND(best_attainable_skew(1.0, 4), ErrorKind::DegenerateProportion);

  Gen gen(3);
  for (int i = 0; i < 2000; ++i) {
    const double p = gen.uniform(0.01, 0.99);
    const auto k = gen.between(1, 400);
    CHECK(std::abs(best_attainable_skew(p, k) - brute_best_skew(p, k)) < 1e-12);
  }
}

TEST_CASE("corrected skew") {
  // 40 of 100 is attainable, so nothing is subtracted.
  CHECK(corrected_skew(MetricCell::value(std::log(0.75)), 0.4, 100).get() == doctest::Approx(std::log(0.75)));
  // A bracketing count exactly.
  const double s = std::log((1.0 / 3.0) / 0.4);
  const double c = corrected_skew(MetricCell::value(s), 0.4, 3).get();
  CHECK(std::abs(c) < 1e-12);
  CHECK(corrected_skew(MetricCell::neg_infinite(), 0.4, 3).is_neg_infinite());
  CHECK(corrected_skew(MetricCell::undefined(), 0.4, 3).is_undefined());

  Gen gen(4);
  for (int i = 0; i < 2000; ++i) {
    const double p = gen.uniform(0.02, 0.98);
    const auto k = gen.between(1, 300);
    const auto count = gen.between(1, k);
    const double observed = std::log((static_cast<double>(count) / static_cast<double>(k)) / p);
    const double bound = brute_best_skew(p, k);
    const double expected = (observed > 0 ? 1.0 : -1.0) * std::max(0.0, std::abs(observed) - bound);
    const double got = corrected_skew(MetricCell::value(observed), p, k).get();
    CHECK(std::abs(got - expected) < 1e-12);
    CHECK(std::abs(got) <= std::abs(observed) + 1e-15);
    if (bound > 1e-9 && observed != 0) CHECK(std::abs(got) < std::abs(observed));
    if (bound < 1e-12) CHECK(std::abs(got - observed) < 1e-12);
  }
}

TEST_CASE("metric identities on random lists") {
  Gen gen(8);
  const GroupScheme three("gender", {"F", "M", "N"});
  for (int trial = 0; trial < 60; ++trial) {
    const auto pattern = gen.pattern(120, "FMN", 0.05, 0.05);
    const auto snap = ranking(pattern);
    const auto shares = gen.shares(3);
    const GroupProportions p(three, shares, ProportionSource::ExternalBaseline, 0);
    const auto grid = full_grid(pattern.size());
    const MetricCurve dev[3] = {deviation_curve(snap, three, p, "F", grid), deviation_curve(snap, three, p, "M", grid),
                                deviation_curve(snap, three, p, "N", grid)};
    const MetricCurve skew[3] = {skew_curve(snap, three, p, "F", grid), skew_curve(snap, three, p, "M", grid),
                                 skew_curve(snap, three, p, "N", grid)};
    const auto minimum = min_skew_curve(snap, three, p, grid);
    for (auto k : grid) {
      if (dev[0].values.at(k).is_undefined()) continue;
      const auto counts = topk_counts(snap, three, k);
      double dev_sum = 0.0;
      bool any_low = false, any_high = false, any_neg_inf = false;
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < 3; ++g) {
        const double share = static_cast<double>(counts.counts[g]) / static_cast<double>(counts.labeled_total);
        CHECK(dev[g].values.at(k).get() == doctest::Approx(shares[g] - share));
        dev_sum += dev[g].values.at(k).get();
        const auto& cell = skew[g].values.at(k);
        if (cell.is_neg_infinite()) {
          any_neg_inf = any_low = true;
          continue;
        }
        CHECK(cell.get() == doctest::Approx(std::log(share / shares[g])));
        any_low = any_low || cell.get() <= 0;
        any_high = any_high || cell.get() >= 0;
        lowest = std::min(lowest, cell.get());
      }
      CHECK(std::abs(dev_sum) < 1e-12);
      CHECK(any_low);
      CHECK(any_high);
      if (any_neg_inf) {
        CHECK(minimum.values.at(k).is_neg_infinite());
      } else {
        CHECK(minimum.values.at(k).get() == lowest);
        CHECK(lowest <= 0.0);
      }
    }
  }
}

TEST_CASE("skew is strictly increasing in the observed share") {
  for (std::size_t c = 1; c < 100; ++c) {
    CHECK(skew_from_counts(c, 100, 0.37).get() < skew_from_counts(c + 1, 100, 0.37).get());
  }
}

TEST_CASE("cutoffs past the list are undefined, not errors") {
  const auto snap = ranking("FMFM");
  const auto curve = skew_curve(snap, gender(), targets(0.5), "F", {2, 4, 25});
  CHECK(curve.values.at(25).is_undefined());
  CHECK(curve.values.at(2).get() == 0.0);
  CHECK(corrected_skew_curve(snap, gender(), targets(0.5), "F", {25}).values.at(25).is_undefined());
  CHECK(page_grid(100) == std::vector<std::size_t>{25, 50, 75, 100});
  CHECK(full_grid(3) == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("DetGreedy output keeps every count within one of its target") {
  Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = gen.between(2, 3);
    const GroupScheme scheme = m == 2 ? gender() : GroupScheme("gender", {"F", "M", "N"});
    const std::size_t n = gen.between(10, 200);
    std::vector<ScoredCandidate> pool;
    std::vector<std::size_t> counts(m, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto g = gen.index(m);
      ++counts[g];
      pool.push_back({"c" + std::to_string(i), scheme.label(g), gen.uniform()});
    }
    std::vector<double> shares(m);
    for (std::size_t g = 0; g < m; ++g) shares[g] = static_cast<double>(counts[g]) / static_cast<double>(n);
    const GroupProportions p(scheme, shares, ProportionSource::ObservedPool, n);
    const auto result = detgreedy_rerank(pool, p);
    std::vector<std::size_t> running(m, 0);
    for (std::size_t k = 1; k <= n; ++k) {
      ++running[*scheme.index_of(result.labels[k - 1])];
      for (std::size_t g = 0; g < m; ++g) {
        CHECK(std::abs(static_cast<double>(running[g]) - shares[g] * static_cast<double>(k)) < 1.0);
      }
    }
  }
}

}  // TEST_SUITE
