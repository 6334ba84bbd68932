#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace sinrnet {

using NodeId = int32_t;
using ClusterId = int32_t;
using Round = int64_t;

// Thrown when a caller violates a documented precondition.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when an internal contract (not a user input) is broken.
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Deterministic RNG wrapper. std::mt19937_64 output is pinned by the
// standard; the distributions are not, so sampling is hand-rolled here to
// keep schedules bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // uniform in [0, 1)
  double unit() { return (eng_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  uint64_t below(uint64_t n) {
    if (n == 0) throw ContractError("Rng::below(0)");
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do { v = eng_(); } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return unit() < p; }

 private:
  std::mt19937_64 eng_;
};

inline int ceil_log2(int64_t n) {
  int r = 0;
  int64_t v = 1;
  while (v < n) { v <<= 1; ++r; }
  return r;
}

// iterated binary logarithm (number of log2 applications to reach <= 1)
inline int log_star(double n) {
  int r = 0;
  while (n > 1.0) { n = std::log2(n); ++r; }
  return r;
}

inline int64_t int_pow(int64_t b, int e) {
  int64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

}  // namespace sinrnet
