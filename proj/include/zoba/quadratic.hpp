#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include <Eigen/Cholesky>
#include "json.hpp"

#include "zoba/common.hpp"
#include "zoba/oracle.hpp"

namespace zoba {

// Recipe for a synthetic least-squares bilevel instance. Matrices are not
// stored; they are regenerated from `seed`.
struct InstanceSpec {
  enum class Kind { kGaussian, kIdentity };

  Kind kind = Kind::kGaussian;
  Index p = 10;
  Index d = 10;
  Index n = 200;  // outer rows (C, D)
  Index m = 200;  // inner rows (A, B)
  std::uint64_t seed = 1;
  double z_bar = 2.0;  // every entry of z_bar
  double x_bar = 1.0;  // every entry of x_bar

  void validate() const;
  std::string id() const;
};

void to_json(nlohmann::json& j, const InstanceSpec& spec);
void from_json(const nlohmann::json& j, InstanceSpec& spec);

struct PsiValue {
  double value = 0.0;
  Vector gradient;
};

/// Quadratic bilevel problem
///   G(z, x) = (1 / 2m) |A z - B x - a|^2
///   F(z, x) = (1 / 2n) |C z - D x - b|^2 + (1/2) |x - x_bar|^2
/// with a = A z_bar - B x_bar and b = C z_bar - D x_bar, so that
/// min Psi = Psi(x_bar) = 0.
///
/// Immutable after construction; safe for concurrent reads.
class QuadraticInstance {
 public:
  // Gaussian entries drawn in the order A, B, C, D (row-major each) from a
  // stream derived from spec.seed. A singular A^T A triggers regeneration from
  // a derived seed, at most 5 attempts in total.
  static QuadraticInstance generate(const InstanceSpec& spec);
  // A = B = C = D = I with m = n = p = d = dim.
  static QuadraticInstance identity(Index dim, double z_bar = 2.0, double x_bar = 1.0);
  static QuadraticInstance from_matrices(Matrix A, Matrix B, Matrix C, Matrix D, Vector z_bar,
                                         Vector x_bar);

  Index p() const { return A_.cols(); }
  Index d() const { return B_.cols(); }
  Index m() const { return A_.rows(); }
  Index n() const { return C_.rows(); }
  const RowMatrix& A() const { return A_; }
  const RowMatrix& B() const { return B_; }
  const RowMatrix& C() const { return C_; }
  const RowMatrix& D() const { return D_; }
  const Vector& a() const { return a_; }
  const Vector& b() const { return b_; }
  const Vector& z_bar() const { return z_bar_; }
  const Vector& x_bar() const { return x_bar_; }
  const std::string& id() const { return id_; }
  // Spec the instance was generated from (kind/dims/seed); attempts > 1 when regenerated.
  const InstanceSpec& spec() const { return spec_; }
  int generation_attempts() const { return attempts_; }

  // Per-row stochastic pieces.
  double inner_row(Index j, const Vector& z, const Vector& x) const;  // 1/2 (A_j z - B_j x - a_j)^2
  double outer_row(Index i, const Vector& z, const Vector& x) const;  // 1/2 (C_i z - D_i x - b_i)^2 + 1/2 |x - x_bar|^2

  // Full objectives and derivative blocks.
  double inner_objective(const Vector& z, const Vector& x) const;
  double outer_objective(const Vector& z, const Vector& x) const;
  Vector grad_z_inner(const Vector& z, const Vector& x) const;
  Vector grad_x_inner(const Vector& z, const Vector& x) const;
  Vector grad_z_outer(const Vector& z, const Vector& x) const;
  Vector grad_x_outer(const Vector& z, const Vector& x) const;
  Matrix hess_zz_inner() const;  // A^T A / m
  Matrix hess_xz_inner() const;  // -B^T A / m  (d x p)

  Vector z_star(const Vector& x) const;
  Vector v_star(const Vector& x) const;
  PsiValue psi_and_grad(const Vector& x) const;
  double psi(const Vector& x) const { return psi_and_grad(x).value; }
  static constexpr double min_psi() { return 0.0; }

 private:
  QuadraticInstance() = default;
  void finish(std::string id);

  RowMatrix A_, B_, C_, D_;
  Vector a_, b_, z_bar_, x_bar_;
  Eigen::LLT<Matrix> gram_;  // factorization of A^T A
  InstanceSpec spec_;
  std::string id_;
  int attempts_ = 1;
};

/// Stochastic oracle over the rows of an instance: tokens are row indices drawn
/// uniformly with replacement; g uses row j of (A, B, a), f row i of (C, D, b).
class QuadraticOracle final : public BilevelOracle {
 public:
  explicit QuadraticOracle(std::shared_ptr<const QuadraticInstance> instance);

  Index inner_dim() const override { return instance_->p(); }
  Index outer_dim() const override { return instance_->d(); }
  double eval_g(const Vector& z, const Vector& x, NoiseToken xi) const override;
  double eval_f(const Vector& z, const Vector& x, NoiseToken zeta) const override;
  NoiseToken sample_inner_noise(RngStream& rng) const override;
  NoiseToken sample_outer_noise(RngStream& rng) const override;

  const QuadraticInstance& instance() const { return *instance_; }

 private:
  std::shared_ptr<const QuadraticInstance> instance_;
};

std::unique_ptr<BilevelOracle> oracle_from_instance(std::shared_ptr<const QuadraticInstance> instance);

}  // namespace zoba
