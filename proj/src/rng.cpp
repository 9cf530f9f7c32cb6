#include "zoba/rng.hpp"

#include <cmath>
#include <numbers>

namespace zoba {

std::uint64_t derive_seed(std::uint64_t parent, std::string_view name) {
  // FNV-1a over the name, then mixed with the parent.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(parent) ^ h);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) + mix64(index ^ 0x5851f42d4c957f2dULL));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  const auto wide = static_cast<unsigned __int128>(engine_()) * n;
  return static_cast<std::uint64_t>(wide >> 64);
}

double RngStream::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vector RngStream::normal_vector(Index n) {
  Vector out(n);
  fill_normal(out);
  return out;
}

Vector RngStream::uniform_vector(Index n, double lo, double hi) {
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = uniform(lo, hi);
  return out;
}

}  // namespace zoba
