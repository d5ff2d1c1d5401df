#pragma once

// Counter-based random stream: draw i of stream (seed, id) is a pure
// function of (seed, id, i), so any sub-stream can be regenerated without
// replaying the others and results do not depend on thread scheduling.

#include <cstddef>
#include <cstdint>
#include <span>

namespace rankaudit {

std::uint64_t mix64(std::uint64_t x);

// Derives an independent stream key from a parent key and a path.
std::uint64_t derive_key(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0);

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Standard normal (Box-Muller, one output per two uniforms).
  double normal();
  bool bernoulli(double p);
  // Uniform integer in [lo, hi].
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);
  // Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rankaudit
