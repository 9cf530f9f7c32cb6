#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "zoba/estimators.hpp"
#include "zoba/oracle.hpp"
#include "zoba/schedule.hpp"
#include "zoba/solver.hpp"

namespace zoba {

struct HfZobaParams {
  StepSchedule gamma = StepSchedule::constant(1e-3);
  StepSchedule rho = StepSchedule::constant(1e-3);
  StepSchedule h = StepSchedule::constant(1e-3);     // gradient-surrogate spacing
  StepSchedule hhat = StepSchedule::constant(1e-3);  // Hessian-vector spacing scale
  Index b1 = 1;
  Index b2 = 1;
  Index l1 = 1;
  Index l2 = 1;
  double v_zero_threshold = 1e-12;
  UpdateOrder order = kDefaultUpdateOrder;
  int workers = 1;

  void validate() const;
  // Non-fatal advice, e.g. h decaying slower than hhat.
  std::vector<std::string> warnings() const;
  std::string describe() const;
};

// 2 b1 (2 l1 + 1) + b2 (2 l2 + 1).
std::uint64_t fe_per_iteration_hfzoba(std::uint64_t b1, std::uint64_t l1, std::uint64_t b2,
                                      std::uint64_t l2);

// hhat / |v| when |v| > threshold, hhat otherwise.
double hbar_from_v(double hhat, const Vector& v, double threshold);

/// One iteration of HF-ZOBA. Hessian-vector products are forward differences
/// of the inner gradient surrogate between (z_k + hbar v_k, x_k) and (z_k, x_k):
///   z' = z - rho_k grad_z g
///   v' = v - rho_k (H_zz + grad_z f)
///   x' = x - gamma_k (H_xz + grad_x f)
SolverState hfzoba_step(const SolverState& state, const BilevelOracle& oracle,
                        const HfZobaParams& params, SolverStreams& streams);

RunTrace hfzoba_run(const BilevelOracle& oracle, const HfZobaParams& params, SolverState init,
                    const RunOptions& options, std::uint64_t seed,
                    const MetricsHook& metrics = {});

}  // namespace zoba
