#include "zoba/hfzoba_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace zoba {

void HfZobaParams::validate() const {
  gamma.validate("gamma");
  rho.validate("rho");
  h.validate("h");
  hhat.validate("hhat");
  if (b1 < 1 || b2 < 1 || l1 < 1 || l2 < 1) {
    throw ConfigError("batch sizes and direction counts must be >= 1");
  }
  if (!(v_zero_threshold > 0.0) || !std::isfinite(v_zero_threshold)) {
    throw ConfigError("v_zero_threshold must be positive");
  }
  validate_update_order(order);
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

std::vector<std::string> HfZobaParams::warnings() const {
  std::vector<std::string> out;
  const auto decay = [](const StepSchedule& s) {
    return s.kind == StepSchedule::Kind::kPowerDecay ? s.exponent : 0.0;
  };
  if (decay(h) < decay(hhat)) {
    out.push_back("h decays slower than hhat (exponent " + std::to_string(decay(h)) + " < " +
                  std::to_string(decay(hhat)) +
                  "); decaying runs are only guaranteed to converge when h decays at least as "
                  "fast as hhat");
  }
  return out;
}

std::string HfZobaParams::describe() const {
  std::ostringstream out;
  out << "gamma=" << to_string(gamma) << " rho=" << to_string(rho) << " h=" << to_string(h)
      << " hhat=" << to_string(hhat) << " b1=" << b1 << " b2=" << b2 << " l1=" << l1
      << " l2=" << l2;
  return out.str();
}

std::uint64_t fe_per_iteration_hfzoba(std::uint64_t b1, std::uint64_t l1, std::uint64_t b2,
                                      std::uint64_t l2) {
  return 2 * b1 * (2 * l1 + 1) + b2 * (2 * l2 + 1);
}

double hbar_from_v(double hhat, const Vector& v, double threshold) {
  const double norm = v.norm();
  return norm > threshold ? hhat / norm : hhat;
}

SolverState hfzoba_step(const SolverState& state, const BilevelOracle& oracle,
                        const HfZobaParams& params, SolverStreams& streams) {
  if (state.z.size() != oracle.inner_dim() || state.v.size() != oracle.inner_dim() ||
      state.x.size() != oracle.outer_dim()) {
    throw ConfigError("solver state dimensions do not match the oracle");
  }
  const double gamma = params.gamma.value(state.k);
  const double rho = params.rho.value(state.k);
  const double h = params.h.value(state.k);
  const double hbar = hbar_from_v(params.hhat.value(state.k), state.v, params.v_zero_threshold);

  EvalLedger ledger = state.ledger;
  ledger.begin_iteration();

  auto batch = EstimatorBatch::draw(oracle, state.z, state.x, h, std::max(params.b1, params.b2),
                                    std::max(params.l1, params.l2), streams);
  batch.attach_ledger(&ledger);
  batch.set_workers(params.workers);
  batch.set_shifted_anchor(state.z + hbar * state.v, state.x);

  // Base-point surrogates are computed once; hvp_surrogate reads them from the cache.
  const Vector gz = grad_forward(batch, ForwardEvaluator::kInnerInZ, params.b1, params.l1);
  const Vector hzz = hvp_surrogate(batch, ForwardEvaluator::kInnerInZ, params.b1, params.l1, hbar);
  const Vector hxz = hvp_surrogate(batch, ForwardEvaluator::kInnerInX, params.b1, params.l1, hbar);
  const Vector fz = grad_forward(batch, ForwardEvaluator::kOuterInZ, params.b2, params.l2);
  const Vector fx = grad_forward(batch, ForwardEvaluator::kOuterInX, params.b2, params.l2);

  const Vector dv = hzz + fz;
  const Vector dx = hxz + fx;

  SolverState next = apply_updates(state, params.order, rho, gamma, gz, dv, dx);
  next.ledger = ledger;
  if (!within_divergence_guard(next)) throw DivergenceError(state, next.ledger.total());
  return next;
}

RunTrace hfzoba_run(const BilevelOracle& oracle, const HfZobaParams& params, SolverState init,
                    const RunOptions& options, std::uint64_t seed, const MetricsHook& metrics) {
  params.validate();
  auto streams = SolverStreams::from_seed(seed);
  const auto cost = fe_per_iteration_hfzoba(params.b1, params.l1, params.b2, params.l2);
  auto trace = run_loop(
      [&](const SolverState& s) { return hfzoba_step(s, oracle, params, streams); },
      std::move(init), cost, options, metrics);
  trace.algorithm = "hfzoba";
  trace.params = params.describe();
  trace.seed = seed;
  return trace;
}

}  // namespace zoba
