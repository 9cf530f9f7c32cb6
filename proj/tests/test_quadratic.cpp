#include <memory>

#include "doctest.h"
#include "test_util.hpp"

#include "zoba/quadratic.hpp"

using namespace zoba;

namespace {

InstanceSpec spec_of(Index p, Index d, Index n, Index m, std::uint64_t seed) {
  InstanceSpec s;
  s.p = p;
  s.d = d;
  s.n = n;
  s.m = m;
  s.seed = seed;
  return s;
}

Matrix one(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_CASE("one-dimensional injected instance") {
  const auto inst = QuadraticInstance::from_matrices(one(1), one(1), one(1), one(1),
                                                     Vector::Constant(1, 2.0),
                                                     Vector::Constant(1, 1.0));
  CHECK(inst.a()(0) == 1.0);
  CHECK(inst.b()(0) == 1.0);
  CHECK(inst.inner_row(0, Vector::Constant(1, 2.0), Vector::Constant(1, 1.0)) == 0.0);
  CHECK_THROWS_AS(inst.inner_row(1, Vector::Zero(1), Vector::Zero(1)), std::out_of_range);
  CHECK_THROWS_AS(inst.outer_row(-1, Vector::Zero(1), Vector::Zero(1)), std::out_of_range);
}

TEST_CASE("singular injected matrices are rejected") {
  CHECK_THROWS_AS(QuadraticInstance::from_matrices(one(0), one(1), one(1), one(1),
                                                   Vector::Constant(1, 2.0),
                                                   Vector::Constant(1, 1.0)),
                  ConfigError);
}

TEST_CASE("generation is deterministic and satisfies the shift identities") {
  const auto spec = spec_of(6, 4, 50, 40, 12);
  const auto a = QuadraticInstance::generate(spec);
  const auto b = QuadraticInstance::generate(spec);
  CHECK(a.A() == b.A());
  CHECK(a.D() == b.D());
  CHECK(a.id() == "gaussian-p6-d4-n50-m40-seed12");
  CHECK((a.A() * a.z_bar() - a.B() * a.x_bar() - a.a()).norm() <= 1e-10);
  CHECK((a.C() * a.z_bar() - a.D() * a.x_bar() - a.b()).norm() <= 1e-10);
  const auto c = QuadraticInstance::generate(spec_of(6, 4, 50, 40, 13));
  CHECK(a.A() != c.A());
  CHECK(a.z_bar() == Vector::Constant(6, 2.0));
  CHECK(a.x_bar() == Vector::Constant(4, 1.0));
}

TEST_CASE("first matrix entries follow the instance stream") {
  const auto inst = QuadraticInstance::generate(spec_of(2, 2, 3, 3, 1));
  RngStream rng(derive_seed(1, "instance"));
  CHECK(inst.A()(0, 0) == rng.standard_normal());
  CHECK(inst.A()(0, 1) == rng.standard_normal());
  CHECK(inst.A()(1, 0) == rng.standard_normal());
}

TEST_CASE("instance spec validation") {
  CHECK_THROWS_AS(QuadraticInstance::generate(spec_of(10, 2, 20, 5, 1)), ConfigError);
  CHECK_THROWS_AS(QuadraticInstance::generate(spec_of(0, 2, 20, 5, 1)), ConfigError);
  InstanceSpec id;
  id.kind = InstanceSpec::Kind::kIdentity;
  id.p = 3;
  id.d = 2;
  CHECK_THROWS_AS(id.validate(), ConfigError);
}

TEST_CASE("instance spec json round trip") {
  auto spec = spec_of(5, 3, 30, 20, 77);
  const nlohmann::json j = spec;
  const auto back = j.get<InstanceSpec>();
  CHECK(back.p == 5);
  CHECK(back.d == 3);
  CHECK(back.n == 30);
  CHECK(back.m == 20);
  CHECK(back.seed == 77);
  CHECK(back.id() == spec.id());
  CHECK_THROWS_AS((nlohmann::json{{"kind", "weird"}}.get<InstanceSpec>()), ConfigError);
  CHECK_THROWS_AS((nlohmann::json{{"p", "ten"}}.get<InstanceSpec>()), ConfigError);
}

TEST_CASE("oracle rows average to the full objectives") {
  auto inst = std::make_shared<const QuadraticInstance>(
      QuadraticInstance::generate(spec_of(4, 3, 17, 23, 5)));
  QuadraticOracle oracle(inst);
  RngStream rng(8);
  for (int t = 0; t < 5; ++t) {
    const Vector z = rng.normal_vector(4);
    const Vector x = rng.normal_vector(3);
    double g = 0, f = 0;
    for (Index j = 0; j < inst->m(); ++j) g += oracle.eval_g(z, x, static_cast<NoiseToken>(j));
    for (Index i = 0; i < inst->n(); ++i) f += oracle.eval_f(z, x, static_cast<NoiseToken>(i));
    CHECK(std::abs(g / inst->m() - inst->inner_objective(z, x)) <= 1e-10);
    CHECK(std::abs(f / inst->n() - inst->outer_objective(z, x)) <= 1e-10);
  }
  for (Index i = 0; i < inst->n(); ++i) {
    CHECK(oracle.eval_f(inst->z_bar(), inst->x_bar(), static_cast<NoiseToken>(i)) == 0.0);
  }
}

TEST_CASE("sampled inner values estimate G") {
  auto inst = std::make_shared<const QuadraticInstance>(
      QuadraticInstance::generate(spec_of(3, 3, 20, 20, 9)));
  QuadraticOracle oracle(inst);
  RngStream rng(3);
  const Vector z = Vector::Ones(3);
  const Vector x = -Vector::Ones(3);
  const auto mc = testutil::monte_carlo(100000, [&] {
    return Eigen::ArrayXd::Constant(1, oracle.eval_g(z, x, oracle.sample_inner_noise(rng)));
  });
  CHECK(mc.max_se_deviation(Eigen::ArrayXd::Constant(1, inst->inner_objective(z, x))) <= 3.0);
}

TEST_CASE("identity instance closed forms") {
  const auto inst = QuadraticInstance::identity(4);
  RngStream rng(2);
  for (int t = 0; t < 10; ++t) {
    const Vector x = rng.normal_vector(4);
    CHECK((inst.z_star(x) - (x + inst.z_bar() - inst.x_bar())).norm() < 1e-12);
    CHECK(inst.v_star(x).norm() < 1e-12);
    const auto psi = inst.psi_and_grad(x);
    CHECK(psi.value == doctest::Approx(0.5 * (x - inst.x_bar()).squaredNorm()).epsilon(1e-12));
    CHECK((psi.gradient - (x - inst.x_bar())).norm() < 1e-12);
  }
}

TEST_CASE("analytic oracles on a random instance") {
  const auto inst = QuadraticInstance::generate(spec_of(10, 10, 200, 200, 3));
  CHECK((inst.z_star(inst.x_bar()) - inst.z_bar()).norm() < 1e-10);
  CHECK(inst.v_star(inst.x_bar()).norm() < 1e-10);
  const auto at_min = inst.psi_and_grad(inst.x_bar());
  CHECK(at_min.value == doctest::Approx(0.0).epsilon(1e-16));
  CHECK(at_min.gradient.norm() <= 1e-8);

  RngStream rng(4);
  for (int t = 0; t < 20; ++t) {
    const Vector x = rng.uniform_vector(10, -5.0, 10.0);
    const Vector z = inst.z_star(x);
    CHECK(inst.grad_z_inner(z, x).norm() <= 1e-8);
    const Vector v = inst.v_star(x);
    CHECK((inst.hess_zz_inner() * v + inst.grad_z_outer(z, x)).norm() <= 1e-8);
    CHECK(inst.psi(x) >= 0.5 * (x - inst.x_bar()).squaredNorm());
  }
}

TEST_CASE("hypergradient matches finite differences of Psi") {
  const auto inst = QuadraticInstance::generate(spec_of(6, 5, 60, 60, 21));
  RngStream rng(6);
  const double step = 1e-5;
  for (int t = 0; t < 10; ++t) {
    const Vector x = rng.uniform_vector(5, -5.0, 10.0);
    const Vector grad = inst.psi_and_grad(x).gradient;
    Vector fd(5);
    for (Index i = 0; i < 5; ++i) {
      Vector xp = x, xm = x;
      xp(i) += step;
      xm(i) -= step;
      fd(i) = (inst.psi(xp) - inst.psi(xm)) / (2 * step);
    }
    CHECK((fd - grad).norm() <= 1e-4 * grad.norm());
  }
}

TEST_CASE("Hessian blocks") {
  const auto inst = QuadraticInstance::generate(spec_of(3, 2, 10, 10, 2));
  RngStream rng(1);
  const Vector z = rng.normal_vector(3);
  const Vector x = rng.normal_vector(2);
  const double eps = 1e-6;
  Matrix fd(2, 3);
  for (Index i = 0; i < 2; ++i) {
    Vector xp = x;
    xp(i) += eps;
    fd.row(i) = (inst.grad_z_inner(z, xp) - inst.grad_z_inner(z, x)).transpose() / eps;
  }
  CHECK((fd - inst.hess_xz_inner()).cwiseAbs().maxCoeff() < 1e-6);
}
