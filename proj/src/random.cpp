#include "rankaudit/random.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "rankaudit/errors.hpp"

namespace rankaudit {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_key(std::uint64_t parent, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(mix64(parent + kGamma) ^ (a + 2 * kGamma)) ^ (b + 3 * kGamma));
}

std::uint64_t CounterRng::next() { return mix64(key_ + (++counter_) * kGamma); }

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

bool CounterRng::bernoulli(double p) { return uniform() < p; }

std::uint64_t CounterRng::uniform_int(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw Error(ErrorKind::InvalidArgument, "uniform_int with hi < lo");
  const std::uint64_t span = hi - lo + 1;
  if (span == 0) return next();
  __extension__ using u128 = unsigned __int128;
  return lo + static_cast<std::uint64_t>((static_cast<u128>(next()) * span) >> 64);
}

std::size_t CounterRng::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "categorical weights sum to zero");
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  // Rounding can leave u just past the last bucket.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

}  // namespace rankaudit
