#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "zoba/common.hpp"
#include "zoba/ledger.hpp"

namespace zoba {

// Iterate triple (x_k, z_k, v_k) of the single-loop scheme.
struct SolverState {
  Vector x;
  Vector z;
  Vector v;
  std::uint64_t k = 0;
  EvalLedger ledger;
};

// Norm or entry bound past which a run is declared diverged.
inline constexpr double kDivergenceBound = 1e12;

bool is_finite_state(const SolverState& state);
// False when any entry is non-finite or any of |x|, |z|, |v| exceeds kDivergenceBound.
bool within_divergence_guard(const SolverState& state);

// Thrown by a step whose result fails the divergence guard.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(SolverState last_finite, std::uint64_t evaluations_spent);

  const SolverState& last_finite_state() const { return last_finite_; }
  // Ledger total including the evaluations of the failed step.
  std::uint64_t evaluations_spent() const { return evaluations_spent_; }

 private:
  SolverState last_finite_;
  std::uint64_t evaluations_spent_;
};

// The three blocks written by a step. Every block is computed from the old
// state, so the order in which they are written does not matter.
enum class Block { kZ, kV, kX };
using UpdateOrder = std::array<Block, 3>;
inline constexpr UpdateOrder kDefaultUpdateOrder{Block::kZ, Block::kV, Block::kX};

// Throws ConfigError unless `order` names each block exactly once.
void validate_update_order(const UpdateOrder& order);

// Writes old - step * direction for each block in `order` into a copy of `old`.
SolverState apply_updates(const SolverState& old, const UpdateOrder& order, double rho,
                          double gamma, const Vector& dz, const Vector& dv, const Vector& dx);

/// One row of a run trace. Metric fields are NaN when no metrics hook is set.
struct TraceRow {
  std::uint64_t k = 0;      // iterations completed
  std::uint64_t evals = 0;  // cumulative evaluations
  std::int64_t wall_ns = 0;
  double psi = std::numeric_limits<double>::quiet_NaN();
  double psi_gap = std::numeric_limits<double>::quiet_NaN();
  double norm_gap = std::numeric_limits<double>::quiet_NaN();
  double grad_psi_norm = std::numeric_limits<double>::quiet_NaN();
  double z_err = std::numeric_limits<double>::quiet_NaN();
  double v_err = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

// Fills the metric fields of a row for a state. Must not charge the ledger.
using MetricsHook = std::function<void(const SolverState& state, TraceRow& row)>;

/// Rows are logged for the initial state (k = 0, evals = 0) and then after
/// every `metric_stride`-th iteration and after the last one.
struct RunTrace {
  std::string algorithm;
  std::string params;
  std::string instance_id;
  std::uint64_t seed = 0;
  std::uint64_t per_iteration_cost = 0;
  std::vector<TraceRow> rows;
  bool diverged = false;
  SolverState final_state;

  // Solver iterations performed (the diverged step excluded).
  std::uint64_t iterations() const { return final_state.k; }
};

struct RunOptions {
  std::uint64_t budget = 0;  // max evaluations
  std::uint64_t max_iterations = 1'000'000;
  std::uint64_t metric_stride = 1;
  bool record_wall_time = true;
};

using StepFunction = std::function<SolverState(const SolverState&)>;

// Drives `step` until the next iteration would exceed the budget or the
// iteration cap. Divergence ends the run with a final row flagged diverged and
// norm_gap clipped to 1.
RunTrace run_loop(const StepFunction& step, SolverState init, std::uint64_t per_iteration_cost,
                  const RunOptions& options, const MetricsHook& metrics);

}  // namespace zoba
