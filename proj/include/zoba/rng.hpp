#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "zoba/common.hpp"

namespace zoba {

// SplitMix64 finalizer. Used to derive child seeds; never used as a generator.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child seed for a named sub-stream ("directions-w", "noise-xi", ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view name);
// Child seed for an indexed sub-stream (repeat r, trial t, regeneration attempt).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

/// A reproducible random stream.
///
/// Every draw is defined in terms of the raw 64-bit output of `std::mt19937_64`,
/// whose sequence is fixed by the C++ standard, so traces are reproducible
/// across standard libraries:
///   - uniform():        (next_u64() >> 11) * 2^-53, in [0, 1)
///   - uniform_index(n): high 64 bits of next_u64() * n (multiply-shift)
///   - standard_normal(): Box-Muller on (u1, u2) = (1 - uniform(), uniform()),
///     returning r*cos(2*pi*u2) first and caching r*sin(2*pi*u2) for the next call.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t uniform_index(std::uint64_t n);
  double standard_normal();

  // Fills `out` coordinate by coordinate with standard normals.
  template <typename Derived>
  void fill_normal(Eigen::DenseBase<Derived>& out) {
    for (Index r = 0; r < out.rows(); ++r) {
      for (Index c = 0; c < out.cols(); ++c) out(r, c) = standard_normal();
    }
  }

  Vector normal_vector(Index n);
  Vector uniform_vector(Index n, double lo, double hi);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace zoba
