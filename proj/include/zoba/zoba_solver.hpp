#pragma once

#include <cstdint>
#include <string>

#include "zoba/estimators.hpp"
#include "zoba/oracle.hpp"
#include "zoba/schedule.hpp"
#include "zoba/solver.hpp"

namespace zoba {

struct ZobaParams {
  StepSchedule gamma = StepSchedule::constant(1e-3);  // outer step
  StepSchedule rho = StepSchedule::constant(1e-3);    // inner / linear-system step
  StepSchedule h = StepSchedule::constant(1e-3);      // finite-difference spacing
  Index b1 = 1;
  Index b2 = 1;
  Index l1 = 1;
  Index l2 = 1;
  UpdateOrder order = kDefaultUpdateOrder;
  int workers = 1;

  void validate() const;
  std::string describe() const;
};

// b1 (4 l1 + 1) + b2 (2 l2 + 1).
std::uint64_t fe_per_iteration_zoba(std::uint64_t b1, std::uint64_t l1, std::uint64_t b2,
                                    std::uint64_t l2);

/// One iteration of ZOBA from (x_k, z_k, v_k):
///   z' = z - rho_k D_z
///   v' = v - rho_k (Hzz v + grad_z f)
///   x' = x - gamma_k (Hxz v + grad_x f)
/// All surrogates share one batch built at the old state. Throws
/// DivergenceError when the new state fails the divergence guard.
SolverState zoba_step(const SolverState& state, const BilevelOracle& oracle,
                      const ZobaParams& params, SolverStreams& streams);

RunTrace zoba_run(const BilevelOracle& oracle, const ZobaParams& params, SolverState init,
                  const RunOptions& options, std::uint64_t seed, const MetricsHook& metrics = {});

}  // namespace zoba
