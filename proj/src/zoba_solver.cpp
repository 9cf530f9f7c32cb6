#include "zoba/zoba_solver.hpp"

#include <algorithm>
#include <sstream>

namespace zoba {

namespace {

void check_sizes(Index b1, Index b2, Index l1, Index l2) {
  if (b1 < 1 || b2 < 1 || l1 < 1 || l2 < 1) {
    throw ConfigError("batch sizes and direction counts must be >= 1");
  }
}

}  // namespace

void ZobaParams::validate() const {
  gamma.validate("gamma");
  rho.validate("rho");
  h.validate("h");
  check_sizes(b1, b2, l1, l2);
  validate_update_order(order);
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::string ZobaParams::describe() const {
  std::ostringstream out;
  out << "gamma=" << to_string(gamma) << " rho=" << to_string(rho) << " h=" << to_string(h)
      << " b1=" << b1 << " b2=" << b2 << " l1=" << l1 << " l2=" << l2;
  return out.str();
}

std::uint64_t fe_per_iteration_zoba(std::uint64_t b1, std::uint64_t l1, std::uint64_t b2,
                                    std::uint64_t l2) {
  return b1 * (4 * l1 + 1) + b2 * (2 * l2 + 1);
}

SolverState zoba_step(const SolverState& state, const BilevelOracle& oracle,
                      const ZobaParams& params, SolverStreams& streams) {
  if (state.z.size() != oracle.inner_dim() || state.v.size() != oracle.inner_dim() ||
      state.x.size() != oracle.outer_dim()) {
    throw ConfigError("solver state dimensions do not match the oracle");
  }
  const double gamma = params.gamma.value(state.k);
  const double rho = params.rho.value(state.k);
  const double h = params.h.value(state.k);

  EvalLedger ledger = state.ledger;
  ledger.begin_iteration();

  auto batch = EstimatorBatch::draw(oracle, state.z, state.x, h, std::max(params.b1, params.b2),
                                    std::max(params.l1, params.l2), streams);
  batch.attach_ledger(&ledger);
  batch.set_workers(params.workers);

  // Inner stencil first: the Hessian block reuses its +-h values.
  const Vector dz = grad_central_inner(batch, params.b1, params.l1);
  const Matrix hzz = hess_zz_estimate(batch, params.b1, params.l1);
  const Matrix hxz = hess_xz_estimate(batch, params.b1, params.l1);
  const Vector fz = grad_forward(batch, ForwardEvaluator::kOuterInZ, params.b2, params.l2);
  const Vector fx = grad_forward(batch, ForwardEvaluator::kOuterInX, params.b2, params.l2);

  const Vector dv = hzz * state.v + fz;
  const Vector dx = hxz * state.v + fx;

  SolverState next = apply_updates(state, params.order, rho, gamma, dz, dv, dx);
  next.ledger = ledger;
  if (!within_divergence_guard(next)) throw DivergenceError(state, next.ledger.total());
  return next;
}

RunTrace zoba_run(const BilevelOracle& oracle, const ZobaParams& params, SolverState init,
                  const RunOptions& options, std::uint64_t seed, const MetricsHook& metrics) {
  params.validate();
  auto streams = SolverStreams::from_seed(seed);
  const auto cost = fe_per_iteration_zoba(params.b1, params.l1, params.b2, params.l2);
  auto trace = run_loop(
      [&](const SolverState& s) { return zoba_step(s, oracle, params, streams); },
      std::move(init), cost, options, metrics);
  trace.algorithm = "zoba";
  trace.params = params.describe();
  trace.seed = seed;
  return trace;
}

}  // namespace zoba
