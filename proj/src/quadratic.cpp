#include "zoba/quadratic.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "zoba/rng.hpp"

namespace zoba {

namespace {

constexpr int kMaxGenerationAttempts = 5;
constexpr double kMinGramRcond = 1e-12;

RowMatrix gaussian(Index rows, Index cols, RngStream& rng) {
  RowMatrix out(rows, cols);
  rng.fill_normal(out);
  return out;
}

const char* kind_name(InstanceSpec::Kind kind) {
  return kind == InstanceSpec::Kind::kIdentity ? "identity" : "gaussian";
}

}  // namespace

void InstanceSpec::validate() const {
  if (p < 1 || d < 1 || n < 1 || m < 1) throw ConfigError("instance dimensions must be >= 1");
  if (kind == Kind::kIdentity) {
    if (!(p == d && d == n && n == m)) {
      throw ConfigError("identity instance needs p = d = n = m");
    }
  } else if (m < p) {
    throw ConfigError("inner rows m = " + std::to_string(m) + " < p = " + std::to_string(p) +
                      ": A^T A would be singular");
  }
  if (!std::isfinite(z_bar) || !std::isfinite(x_bar)) {
    throw ConfigError("z_bar and x_bar must be finite");
  }
}

std::string InstanceSpec::id() const {
  return std::string(kind_name(kind)) + "-p" + std::to_string(p) + "-d" + std::to_string(d) +
         "-n" + std::to_string(n) + "-m" + std::to_string(m) + "-seed" + std::to_string(seed);
}

void to_json(nlohmann::json& j, const InstanceSpec& spec) {
  j = nlohmann::json{{"kind", kind_name(spec.kind)},
                     {"p", spec.p},
                     {"d", spec.d},
                     {"n", spec.n},
                     {"m", spec.m},
                     {"seed", spec.seed},
                     {"z_bar", spec.z_bar},
                     {"x_bar", spec.x_bar}};
}

void from_json(const nlohmann::json& j, InstanceSpec& spec) {
  if (!j.is_object()) throw ConfigError("instance must be a JSON object");
  spec = InstanceSpec{};
  const auto kind = j.value("kind", std::string("gaussian"));
  if (kind == "gaussian") {
    spec.kind = InstanceSpec::Kind::kGaussian;
  } else if (kind == "identity") {
    spec.kind = InstanceSpec::Kind::kIdentity;
  } else {
    throw ConfigError("unknown instance kind '" + kind + "'");
  }
  try {
    spec.p = j.value("p", spec.p);
    spec.d = j.value("d", spec.d);
    if (spec.kind == InstanceSpec::Kind::kIdentity) {
      // Identity instances only need one size.
      spec.n = j.value("n", spec.p);
      spec.m = j.value("m", spec.p);
    } else {
      spec.n = j.value("n", spec.n);
      spec.m = j.value("m", spec.m);
    }
    spec.seed = j.value("seed", spec.seed);
    spec.z_bar = j.value("z_bar", spec.z_bar);
    spec.x_bar = j.value("x_bar", spec.x_bar);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("instance: ") + e.what());
  }
}

void QuadraticInstance::finish(std::string id) {
  if (A_.rows() != B_.rows() || C_.rows() != D_.rows() || A_.cols() != C_.cols() ||
      B_.cols() != D_.cols() || z_bar_.size() != A_.cols() || x_bar_.size() != B_.cols()) {
    throw ConfigError("instance matrix shapes are inconsistent");
  }
  a_ = A_ * z_bar_ - B_ * x_bar_;
  b_ = C_ * z_bar_ - D_ * x_bar_;
  gram_.compute(Matrix(A_.transpose() * A_));
  if (gram_.info() != Eigen::Success || !(gram_.rcond() > kMinGramRcond)) {
    throw ConfigError("A^T A is singular or ill-conditioned");
  }
  id_ = std::move(id);
}

QuadraticInstance QuadraticInstance::generate(const InstanceSpec& spec) {
  spec.validate();
  if (spec.kind == InstanceSpec::Kind::kIdentity) {
    auto inst = identity(spec.p, spec.z_bar, spec.x_bar);
    inst.spec_ = spec;
    inst.id_ = spec.id();
    return inst;
  }
  const std::uint64_t root = derive_seed(spec.seed, "instance");
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    RngStream rng(attempt == 0 ? root : derive_seed(root, static_cast<std::uint64_t>(attempt)));
    QuadraticInstance inst;
    inst.A_ = gaussian(spec.m, spec.p, rng);
    inst.B_ = gaussian(spec.m, spec.d, rng);
    inst.C_ = gaussian(spec.n, spec.p, rng);
    inst.D_ = gaussian(spec.n, spec.d, rng);
    inst.z_bar_ = Vector::Constant(spec.p, spec.z_bar);
    inst.x_bar_ = Vector::Constant(spec.d, spec.x_bar);
    try {
      inst.finish(spec.id());
    } catch (const ConfigError&) {
      continue;
    }
    inst.spec_ = spec;
    inst.attempts_ = attempt + 1;
    return inst;
  }
  throw ConfigError("could not generate a well-conditioned A^T A in " +
                    std::to_string(kMaxGenerationAttempts) + " attempts");
}

QuadraticInstance QuadraticInstance::identity(Index dim, double z_bar, double x_bar) {
  if (dim < 1) throw ConfigError("identity instance dimension must be >= 1");
  QuadraticInstance inst;
  inst.A_ = RowMatrix::Identity(dim, dim);
  inst.B_ = RowMatrix::Identity(dim, dim);
  inst.C_ = RowMatrix::Identity(dim, dim);
  inst.D_ = RowMatrix::Identity(dim, dim);
  inst.z_bar_ = Vector::Constant(dim, z_bar);
  inst.x_bar_ = Vector::Constant(dim, x_bar);
  inst.spec_.kind = InstanceSpec::Kind::kIdentity;
  inst.spec_.p = inst.spec_.d = inst.spec_.n = inst.spec_.m = dim;
  inst.spec_.seed = 0;
  inst.spec_.z_bar = z_bar;
  inst.spec_.x_bar = x_bar;
  inst.finish(inst.spec_.id());
  return inst;
}

QuadraticInstance QuadraticInstance::from_matrices(Matrix A, Matrix B, Matrix C, Matrix D,
                                                   Vector z_bar, Vector x_bar) {
  QuadraticInstance inst;
  inst.A_ = std::move(A);
  inst.B_ = std::move(B);
  inst.C_ = std::move(C);
  inst.D_ = std::move(D);
  inst.z_bar_ = std::move(z_bar);
  inst.x_bar_ = std::move(x_bar);
  inst.spec_.p = inst.A_.cols();
  inst.spec_.d = inst.B_.cols();
  inst.spec_.n = inst.C_.rows();
  inst.spec_.m = inst.A_.rows();
  inst.spec_.seed = 0;
  inst.finish("custom-p" + std::to_string(inst.A_.cols()) + "-d" + std::to_string(inst.B_.cols()));
  return inst;
}

double QuadraticInstance::inner_row(Index j, const Vector& z, const Vector& x) const {
  if (j < 0 || j >= m()) throw std::out_of_range("inner row index out of range");
  const double r = A_.row(j).dot(z) - B_.row(j).dot(x) - a_(j);
  return 0.5 * r * r;
}

double QuadraticInstance::outer_row(Index i, const Vector& z, const Vector& x) const {
  if (i < 0 || i >= n()) throw std::out_of_range("outer row index out of range");
  const double r = C_.row(i).dot(z) - D_.row(i).dot(x) - b_(i);
  return 0.5 * r * r + 0.5 * (x - x_bar_).squaredNorm();
}

double QuadraticInstance::inner_objective(const Vector& z, const Vector& x) const {
  return (A_ * z - B_ * x - a_).squaredNorm() / (2.0 * static_cast<double>(m()));
}

double QuadraticInstance::outer_objective(const Vector& z, const Vector& x) const {
  return (C_ * z - D_ * x - b_).squaredNorm() / (2.0 * static_cast<double>(n())) +
         0.5 * (x - x_bar_).squaredNorm();
}

Vector QuadraticInstance::grad_z_inner(const Vector& z, const Vector& x) const {
  return A_.transpose() * (A_ * z - B_ * x - a_) / static_cast<double>(m());
}

Vector QuadraticInstance::grad_x_inner(const Vector& z, const Vector& x) const {
  return -(B_.transpose() * (A_ * z - B_ * x - a_)) / static_cast<double>(m());
}

Vector QuadraticInstance::grad_z_outer(const Vector& z, const Vector& x) const {
  return C_.transpose() * (C_ * z - D_ * x - b_) / static_cast<double>(n());
}

Vector QuadraticInstance::grad_x_outer(const Vector& z, const Vector& x) const {
  return -(D_.transpose() * (C_ * z - D_ * x - b_)) / static_cast<double>(n()) + (x - x_bar_);
}

Matrix QuadraticInstance::hess_zz_inner() const {
  return A_.transpose() * A_ / static_cast<double>(m());
}

Matrix QuadraticInstance::hess_xz_inner() const {
  return -(B_.transpose() * A_) / static_cast<double>(m());
}

Vector QuadraticInstance::z_star(const Vector& x) const {
  if (x.size() != d()) throw std::invalid_argument("z_star: x has the wrong dimension");
  return gram_.solve(Vector(A_.transpose() * (B_ * x + a_)));
}

Vector QuadraticInstance::v_star(const Vector& x) const {
  const Vector z = z_star(x);
  // -(A^T A / m)^{-1} grad_z F(z*, x)
  return -static_cast<double>(m()) * gram_.solve(grad_z_outer(z, x));
}

PsiValue QuadraticInstance::psi_and_grad(const Vector& x) const {
  const Vector z = z_star(x);
  const Vector residual = C_ * z - D_ * x - b_;
  const double nd = static_cast<double>(n());
  PsiValue out;
  out.value = residual.squaredNorm() / (2.0 * nd) + 0.5 * (x - x_bar_).squaredNorm();
  const Vector vs = -static_cast<double>(m()) * gram_.solve(Vector(C_.transpose() * residual / nd));
  out.gradient = grad_x_outer(z, x) + hess_xz_inner() * vs;
  return out;
}

QuadraticOracle::QuadraticOracle(std::shared_ptr<const QuadraticInstance> instance)
    : instance_(std::move(instance)) {
  if (!instance_) throw ConfigError("QuadraticOracle needs an instance");
}

double QuadraticOracle::eval_g(const Vector& z, const Vector& x, NoiseToken xi) const {
  return instance_->inner_row(static_cast<Index>(xi), z, x);
}

double QuadraticOracle::eval_f(const Vector& z, const Vector& x, NoiseToken zeta) const {
  return instance_->outer_row(static_cast<Index>(zeta), z, x);
}

NoiseToken QuadraticOracle::sample_inner_noise(RngStream& rng) const {
  return rng.uniform_index(static_cast<std::uint64_t>(instance_->m()));
}

NoiseToken QuadraticOracle::sample_outer_noise(RngStream& rng) const {
  return rng.uniform_index(static_cast<std::uint64_t>(instance_->n()));
}

std::unique_ptr<BilevelOracle> oracle_from_instance(
    std::shared_ptr<const QuadraticInstance> instance) {
  return std::make_unique<QuadraticOracle>(std::move(instance));
}

}  // namespace zoba
