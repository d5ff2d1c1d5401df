#pragma once

// Builders and random generators shared by the unit tests.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rankaudit/data_model.hpp"
#include "rankaudit/errors.hpp"

namespace testing {

using namespace rankaudit;

inline const GroupScheme& gender() {
  static const GroupScheme scheme("gender", {"F", "M"});
  return scheme;
}

inline CandidateRecord person(const std::string& id, const std::string& label,
                              const std::string& attribute = "gender") {
  CandidateRecord r;
  r.candidate_id = id;
  r.first_name = "n" + id;
  if (!label.empty()) r.group_labels[attribute] = label;
  return r;
}

// One character per rank: a label letter, 'x' for an anonymized entry, or
// 'u' for a visible candidate with no usable label.
inline RankingSnapshot ranking(const std::string& pattern, const std::string& query = "q", int day = 1) {
  std::vector<CandidateRecord> entries;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    const auto id = query + std::to_string(i);
    if (pattern[i] == 'x') entries.push_back(CandidateRecord::anonymized(id));
    else if (pattern[i] == 'u') entries.push_back(person(id, ""));
    else entries.push_back(person(id, std::string(1, pattern[i])));
  }
  return RankingSnapshot(query, day, std::move(entries));
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(eng_);
  }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(eng_); }
  bool chance(double p) { return uniform() < p; }

  // Shares bounded away from zero, summing to one.
  std::vector<double> shares(std::size_t m, double floor = 0.05) {
    std::vector<double> w(m);
    double total = 0.0;
    for (auto& x : w) total += (x = uniform(floor, 1.0));
    for (auto& x : w) x /= total;
    return w;
  }

  // Random list over `labels` with some anonymized and unlabeled entries.
  std::string pattern(std::size_t n, const std::string& labels, double missing = 0.05, double unknown = 0.03) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform();
      if (u < missing) s += 'x';
      else if (u < missing + unknown) s += 'u';
      else s += labels[index(labels.size())];
    }
    return s;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace testing

// Passes when `expr` throws rankaudit::Error of the given kind.
#define CHECK_ERROR_KIND(expr, expected_kind)                                          \
  do {                                                                                 \
    bool thrown_ = false;                                                              \
    try {                                                                              \
      (void)(expr);                                                                    \
    } catch (const ::rankaudit::Error& e_) {                                           \
      thrown_ = true;                                                                  \
      CHECK_MESSAGE(e_.kind() == (expected_kind), "got " << ::rankaudit::to_string(e_.kind())); \
    }                                                                                  \
    CHECK_MESSAGE(thrown_, "expected " << ::rankaudit::to_string(expected_kind));      \
  } while (0)
