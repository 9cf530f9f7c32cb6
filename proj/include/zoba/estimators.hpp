#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "zoba/common.hpp"
#include "zoba/ledger.hpp"
#include "zoba/oracle.hpp"
#include "zoba/rng.hpp"

namespace zoba {

// Independent named sub-streams of one run, all derived from a master seed.
struct SolverStreams {
  RngStream directions_w;
  RngStream directions_u;
  RngStream inner_noise;
  RngStream outer_noise;

  static SolverStreams from_seed(std::uint64_t master_seed);
};

/// Gaussian directions shared by every estimator of one iteration.
///
/// Row (i * directions + j) of `w` (p columns) and `u` (d columns) is the
/// j-th direction of sample i. Estimators using b <= samples and
/// l <= directions read the leading (i, j) block.
struct DirectionPool {
  Index samples = 0;
  Index directions = 0;
  RowMatrix w;
  RowMatrix u;

  // Draws w from w_rng then u from u_rng, in (i, j, coordinate) order.
  static DirectionPool draw(Index samples, Index directions, Index p, Index d, RngStream& w_rng,
                            RngStream& u_rng);

  auto w_row(Index i, Index j) const { return w.row(i * directions + j).transpose(); }
  auto u_row(Index i, Index j) const { return u.row(i * directions + j).transpose(); }
};

// Point around which a stencil is laid out. kShifted is the z + hbar * v point
// of the Hessian-free variant.
enum class Anchor : std::uint8_t { kBase, kShifted };

enum class Stencil : std::uint8_t {
  kCenter,      // (z, x)
  kPlusZ,       // (z + h w, x)
  kMinusZ,      // (z - h w, x)
  kPlusX,       // (z, x + h u)
  kJointPlus,   // (z + h w, x + h u)
  kJointMinus,  // (z - h w, x - h u)
};

// Symbolic cache key. `direction` is ignored for kCenter.
struct EvalKey {
  Objective objective;
  Anchor anchor;
  Stencil stencil;
  Index sample;
  Index direction;
};

/// One iteration's shared randomness plus a cache of every function value
/// computed from it.
///
/// A value is identified by its symbolic key, never by coordinates, so each
/// (point, noise) pair is evaluated at most once and reused by every estimator
/// that needs it. Fresh evaluations are charged to the attached ledger.
///
/// The batch keeps a reference to the oracle; the oracle must outlive it.
class EstimatorBatch {
 public:
  EstimatorBatch(const BilevelOracle& oracle, Vector z, Vector x, double h,
                 DirectionPool directions, std::vector<NoiseToken> inner_noise,
                 std::vector<NoiseToken> outer_noise);

  // Samples `samples` inner tokens, `samples` outer tokens, then the direction
  // pool, each from its own stream.
  static EstimatorBatch draw(const BilevelOracle& oracle, Vector z, Vector x, double h,
                             Index samples, Index directions, SolverStreams& streams);

  void attach_ledger(EvalLedger* ledger) { ledger_ = ledger; }
  // Number of threads used for fresh evaluations. Results do not depend on it.
  void set_workers(int workers) { workers_ = workers < 1 ? 1 : workers; }
  void set_shifted_anchor(Vector z_shifted, Vector x_shifted);
  bool has_shifted_anchor() const { return has_shifted_; }

  // Evaluates every key not yet cached.
  void ensure(std::span<const EvalKey> keys);
  // Cached value; throws std::logic_error on a miss.
  double value(const EvalKey& key) const;
  bool cached(const EvalKey& key) const;

  const BilevelOracle& oracle() const { return *oracle_; }
  const DirectionPool& directions() const { return directions_; }
  const Vector& z(Anchor anchor = Anchor::kBase) const;
  const Vector& x(Anchor anchor = Anchor::kBase) const;
  double h() const { return h_; }
  Index samples() const { return directions_.samples; }
  Index direction_count() const { return directions_.directions; }
  std::uint64_t fresh_evaluations() const { return fresh_; }

 private:
  double evaluate(const EvalKey& key) const;
  void check_range(const EvalKey& key) const;

  const BilevelOracle* oracle_;
  Vector z_;
  Vector x_;
  Vector z_shifted_;
  Vector x_shifted_;
  bool has_shifted_ = false;
  double h_;
  DirectionPool directions_;
  std::vector<NoiseToken> inner_noise_;
  std::vector<NoiseToken> outer_noise_;
  std::unordered_map<std::uint64_t, double> cache_;
  EvalLedger* ledger_ = nullptr;
  int workers_ = 1;
  std::uint64_t fresh_ = 0;
};

// D_z: minibatch central difference of g in z,
//   (1 / b l) sum_{i,j} (g(z + h w) - g(z - h w)) / (2h) * w.
// Evaluates 2 b l inner values.
Vector grad_central_inner(EstimatorBatch& batch, Index b, Index l);

enum class ForwardEvaluator { kOuterInZ, kOuterInX, kInnerInZ, kInnerInX };

// Minibatch forward difference (1 / b l) sum (value(shifted) - value(center)) / h * dir,
// with dir = w for the in-z variants and u for the in-x variants.
Vector grad_forward(EstimatorBatch& batch, ForwardEvaluator evaluator, Index b, Index l,
                    Anchor anchor = Anchor::kBase);

// Surrogate of the inner Hessian block d2G/dzdz:
//   (1 / b l) sum c_ij (w w^T - I),  c_ij = (g+ + g- - 2 g_i) / (2 h^2).
// Reuses the +-h values of grad_central_inner, which must already be cached;
// only the b center values may be fresh.
Matrix hess_zz_estimate(EstimatorBatch& batch, Index b, Index l);

// Surrogate of the d x p cross block d2G/dxdz:
//   (1 / b l) sum s_ij u w^T,  s_ij = (g(z+hw, x+hu) + g(z-hw, x-hu) - 2 g_i) / (2 h^2).
Matrix hess_xz_estimate(EstimatorBatch& batch, Index b, Index l);

// (shifted - base) / hbar.
Vector difference_quotient(const Vector& at_shifted, const Vector& at_base, double hbar);

/// Forward-difference Hessian-vector product of a gradient map:
///   (grad_map(z + hbar v, x) - grad_map(z, x)) / hbar.
/// grad_map may return the in-z or the in-x gradient.
template <typename GradMap>
Vector hvp_forward(GradMap&& grad_map, const Vector& z, const Vector& x, const Vector& v,
                   double hbar) {
  if (!(hbar > 0.0)) throw ConfigError("hvp_forward: hbar must be positive");
  const Vector shifted = z + hbar * v;
  const Vector at_shifted = grad_map(shifted, x);
  const Vector at_base = grad_map(z, x);
  return difference_quotient(at_shifted, at_base, hbar);
}

// hvp_forward applied to the inner forward-difference surrogate of the batch
// (evaluator kInnerInZ or kInnerInX). The batch's shifted anchor must be set to
// (z + hbar v, x); base-anchor values are shared with other estimators.
Vector hvp_surrogate(EstimatorBatch& batch, ForwardEvaluator evaluator, Index b, Index l,
                     double hbar);

}  // namespace zoba
