#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "zoba/common.hpp"
#include "zoba/oracle.hpp"

namespace zoba::harness {

/// A target with known derivatives at one point (z, x) plus the direction v
/// used by the Hessian-vector surrogates. Truth values are what the
/// estimators should average to.
struct CheckProblem {
  std::string name;
  std::shared_ptr<const BilevelOracle> oracle;
  Vector z, x, v;
  double h = 1e-3;
  double hhat = 1e-3;  // the HVP spacing is hhat / |v|
  Vector grad_z_g;     // D_z
  Vector grad_z_f;
  Vector grad_x_f;
  Matrix hess_zz_g;    // p x p
  Matrix hess_xz_g;    // d x p
  Vector hvp_zz;       // hess_zz_g v
  Vector hvp_xz;       // hess_xz_g v
};

// g = 1/2 z'Pz + x'Mz + 1/2 x'Sx + q'z, f = 1/2 z'Rz + z'Nx + 1/2 x'Tx + c'z + e'x,
// with coefficients and the point drawn from `seed`. Deterministic in the noise.
CheckProblem quadratic_check_problem(Index p, Index d, std::uint64_t seed);
// g = f = 0.
CheckProblem zero_check_problem(Index p, Index d);

struct EstimatorCheck {
  std::string name;
  std::size_t components = 0;
  double max_se = 0.0;       // max |mean - truth| / SE; 0 or inf when SE = 0
  double max_abs_dev = 0.0;  // max |mean - truth|
  bool pass = false;
};

struct CheckReport {
  std::string problem;
  std::uint64_t trials = 0;
  double tolerance = 0.0;
  std::vector<EstimatorCheck> estimators;
  bool pass = false;

  std::string to_string() const;
};

/// Monte-Carlo means over `trials` independent single-sample, single-direction
/// estimates (b = l = 1) of D_z, grad_z f, grad_x f, the two Hessian-block
/// surrogates and the two Hessian-free products, compared componentwise with
/// the truth in standard-error units. A component with zero spread passes
/// only on an exact match.
CheckReport check_estimators(const CheckProblem& problem, std::uint64_t trials, double tolerance,
                             std::uint64_t seed);

}  // namespace zoba::harness
