#include "zoba/solver.hpp"

#include <cmath>
#include <utility>

namespace zoba {

namespace {

bool finite_and_bounded(const Vector& v) {
  if (!v.allFinite()) return false;
  return v.norm() <= kDivergenceBound;
}

}  // namespace

bool is_finite_state(const SolverState& state) {
  return state.x.allFinite() && state.z.allFinite() && state.v.allFinite();
}

bool within_divergence_guard(const SolverState& state) {
  return finite_and_bounded(state.x) && finite_and_bounded(state.z) &&
         finite_and_bounded(state.v);
}

DivergenceError::DivergenceError(SolverState last_finite, std::uint64_t evaluations_spent)
    : std::runtime_error("iterates diverged at iteration " + std::to_string(last_finite.k + 1)),
      last_finite_(std::move(last_finite)),
      evaluations_spent_(evaluations_spent) {}

void validate_update_order(const UpdateOrder& order) {
  std::array<int, 3> seen{};
  for (const Block block : order) ++seen[static_cast<std::size_t>(block)];
  if (seen != std::array<int, 3>{1, 1, 1}) {
    throw ConfigError("update order must be a permutation of (z, v, x)");
  }
}

SolverState apply_updates(const SolverState& old, const UpdateOrder& order, double rho,
                          double gamma, const Vector& dz, const Vector& dv, const Vector& dx) {
  SolverState next = old;
  for (const Block block : order) {
    switch (block) {
      case Block::kZ:
        next.z = old.z - rho * dz;
        break;
      case Block::kV:
        next.v = old.v - rho * dv;
        break;
      case Block::kX:
        next.x = old.x - gamma * dx;
        break;
    }
  }
  next.k = old.k + 1;
  return next;
}

RunTrace run_loop(const StepFunction& step, SolverState init, std::uint64_t per_iteration_cost,
                  const RunOptions& options, const MetricsHook& metrics) {
  if (per_iteration_cost == 0) throw ConfigError("per-iteration cost must be positive");
  if (options.budget < per_iteration_cost) {
    throw ConfigError("budget of " + std::to_string(options.budget) +
                      " evaluations is below one iteration (" +
                      std::to_string(per_iteration_cost) + "); the trace would be empty");
  }
  if (options.metric_stride < 1) throw ConfigError("metric stride must be >= 1");
  if (!within_divergence_guard(init)) throw ConfigError("initial point is not finite");

  const std::uint64_t iterations =
      std::min(options.budget / per_iteration_cost, options.max_iterations);

  RunTrace trace;
  trace.per_iteration_cost = per_iteration_cost;
  const auto log_row = [&](const SolverState& state, std::int64_t wall_ns) {
    TraceRow row;
    row.k = state.k;
    row.evals = state.ledger.total();
    row.wall_ns = options.record_wall_time ? wall_ns : 0;
    if (metrics) metrics(state, row);
    trace.rows.push_back(row);
  };

  SolverState state = std::move(init);
  std::int64_t elapsed_ns = 0;
  log_row(state, 0);
  for (std::uint64_t it = 0; it < iterations; ++it) {
    const auto start = std::chrono::steady_clock::now();
    try {
      state = step(state);
    } catch (const DivergenceError& error) {
      elapsed_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      TraceRow row;
      row.k = error.last_finite_state().k + 1;
      row.evals = error.evaluations_spent();
      row.wall_ns = options.record_wall_time ? elapsed_ns : 0;
      row.norm_gap = 1.0;
      row.diverged = true;
      trace.rows.push_back(row);
      trace.diverged = true;
      trace.final_state = error.last_finite_state();
      return trace;
    }
    elapsed_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
    if ((it + 1) % options.metric_stride == 0 || it + 1 == iterations) {
      log_row(state, elapsed_ns);
    }
  }
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace zoba
