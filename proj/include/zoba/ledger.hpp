#pragma once

#include <cstdint>

namespace zoba {

// Which black box an evaluation was charged to.
enum class Objective : std::uint8_t { kInner, kOuter };  // g, f

// Counts solver-visible function evaluations.
//
// `per_iteration_last` is the number of evaluations recorded since the last
// call to begin_iteration(); after a solver step it holds that step's cost.
struct EvalLedger {
  std::uint64_t count_g = 0;
  std::uint64_t count_f = 0;
  std::uint64_t per_iteration_last = 0;

  // Adds n evaluations to the matching counter. n == 0 is a no-op.
  void record(Objective which, std::uint64_t n);
  void begin_iteration() { per_iteration_last = 0; }
  std::uint64_t total() const { return count_g + count_f; }

  friend bool operator==(const EvalLedger&, const EvalLedger&) = default;
};

}  // namespace zoba
