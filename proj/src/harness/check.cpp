#include "zoba/harness/check.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "zoba/estimators.hpp"
#include "zoba/hfzoba_solver.hpp"
#include "zoba/rng.hpp"

namespace zoba::harness {

namespace {

Matrix gaussian_matrix(Index rows, Index cols, RngStream& rng) {
  Matrix out(rows, cols);
  rng.fill_normal(out);
  return out;
}

Matrix spd(Index n, RngStream& rng) {
  const Matrix l = gaussian_matrix(n, n, rng);
  return l * l.transpose() / static_cast<double>(n) + Matrix::Identity(n, n);
}

// Running mean and variance per component.
struct Welford {
  std::uint64_t n = 0;
  Eigen::ArrayXd mean;
  Eigen::ArrayXd m2;

  explicit Welford(Index size) : mean(Eigen::ArrayXd::Zero(size)), m2(Eigen::ArrayXd::Zero(size)) {}

  void add(const Eigen::ArrayXd& x) {
    ++n;
    const Eigen::ArrayXd delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
};

Eigen::ArrayXd flatten(const Matrix& m) {
  return Eigen::Map<const Eigen::ArrayXd>(m.data(), m.size());
}

}  // namespace

CheckProblem quadratic_check_problem(Index p, Index d, std::uint64_t seed) {
  if (p < 1 || d < 1) throw ConfigError("check dimensions must be >= 1");
  RngStream rng(derive_seed(seed, "check-problem"));
  const Matrix P = spd(p, rng);
  const Matrix M = gaussian_matrix(d, p, rng);
  const Matrix S = spd(d, rng);
  const Vector q = rng.normal_vector(p);
  const Matrix R = spd(p, rng);
  const Matrix N = gaussian_matrix(p, d, rng);
  const Matrix T = spd(d, rng);
  const Vector c = rng.normal_vector(p);
  const Vector e = rng.normal_vector(d);

  CheckProblem out;
  out.name = "quadratic-p" + std::to_string(p) + "-d" + std::to_string(d);
  out.z = rng.normal_vector(p);
  out.x = rng.normal_vector(d);
  out.v = rng.normal_vector(p);

  FunctionOracle::Function g = [=](const Vector& z, const Vector& x, NoiseToken) {
    return 0.5 * z.dot(P * z) + x.dot(M * z) + 0.5 * x.dot(S * x) + q.dot(z);
  };
  FunctionOracle::Function f = [=](const Vector& z, const Vector& x, NoiseToken) {
    return 0.5 * z.dot(R * z) + z.dot(N * x) + 0.5 * x.dot(T * x) + c.dot(z) + e.dot(x);
  };
  out.oracle = std::make_shared<FunctionOracle>(p, d, std::move(g), std::move(f));

  out.grad_z_g = P * out.z + M.transpose() * out.x + q;
  out.grad_z_f = R * out.z + N * out.x + c;
  out.grad_x_f = T * out.x + N.transpose() * out.z + e;
  out.hess_zz_g = P;
  out.hess_xz_g = M;
  out.hvp_zz = P * out.v;
  out.hvp_xz = M * out.v;
  return out;
}

CheckProblem zero_check_problem(Index p, Index d) {
  if (p < 1 || d < 1) throw ConfigError("check dimensions must be >= 1");
  CheckProblem out;
  out.name = "zero-p" + std::to_string(p) + "-d" + std::to_string(d);
  FunctionOracle::Function zero = [](const Vector&, const Vector&, NoiseToken) { return 0.0; };
  out.oracle = std::make_shared<FunctionOracle>(p, d, zero, zero);
  out.z = Vector::Ones(p);
  out.x = Vector::Ones(d);
  out.v = Vector::Ones(p);
  out.grad_z_g = Vector::Zero(p);
  out.grad_z_f = Vector::Zero(p);
  out.grad_x_f = Vector::Zero(d);
  out.hess_zz_g = Matrix::Zero(p, p);
  out.hess_xz_g = Matrix::Zero(d, p);
  out.hvp_zz = Vector::Zero(p);
  out.hvp_xz = Vector::Zero(d);
  return out;
}

CheckReport check_estimators(const CheckProblem& problem, std::uint64_t trials, double tolerance,
                             std::uint64_t seed) {
  const auto& oracle = *problem.oracle;
  const double hbar = hbar_from_v(problem.hhat, problem.v, 1e-12);
  const Vector shifted = problem.z + hbar * problem.v;

  const std::vector<std::pair<std::string, Eigen::ArrayXd>> truths{
      {"D_z", problem.grad_z_g.array()},
      {"grad_z f", problem.grad_z_f.array()},
      {"grad_x f", problem.grad_x_f.array()},
      {"hess_zz g", flatten(problem.hess_zz_g)},
      {"hess_xz g", flatten(problem.hess_xz_g)},
      {"H_zz", problem.hvp_zz.array()},
      {"H_xz", problem.hvp_xz.array()}};
  std::vector<Welford> stats;
  for (const auto& t : truths) stats.emplace_back(t.second.size());

  auto streams = SolverStreams::from_seed(seed);
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto batch = EstimatorBatch::draw(oracle, problem.z, problem.x, problem.h, 1, 1, streams);
    batch.set_shifted_anchor(shifted, problem.x);
    const Vector dz = grad_central_inner(batch, 1, 1);
    const Matrix hzz = hess_zz_estimate(batch, 1, 1);
    const Matrix hxz = hess_xz_estimate(batch, 1, 1);
    const Vector fz = grad_forward(batch, ForwardEvaluator::kOuterInZ, 1, 1);
    const Vector fx = grad_forward(batch, ForwardEvaluator::kOuterInX, 1, 1);
    const Vector hvz = hvp_surrogate(batch, ForwardEvaluator::kInnerInZ, 1, 1, hbar);
    const Vector hvx = hvp_surrogate(batch, ForwardEvaluator::kInnerInX, 1, 1, hbar);
    stats[0].add(dz.array());
    stats[1].add(fz.array());
    stats[2].add(fx.array());
    stats[3].add(flatten(hzz));
    stats[4].add(flatten(hxz));
    stats[5].add(hvz.array());
    stats[6].add(hvx.array());
  }

  CheckReport report;
  report.problem = problem.name;
  report.trials = trials;
  report.tolerance = tolerance;
  report.pass = true;
  const double n = static_cast<double>(trials);
  for (std::size_t e = 0; e < truths.size(); ++e) {
    EstimatorCheck check;
    check.name = truths[e].first;
    check.components = static_cast<std::size_t>(truths[e].second.size());
    const auto& s = stats[e];
    for (Index i = 0; i < truths[e].second.size(); ++i) {
      const double dev = std::abs(s.mean(i) - truths[e].second(i));
      const double var = trials > 1 ? s.m2(i) / (n - 1.0) : 0.0;
      const double se = std::sqrt(var / n);
      double in_se = 0.0;
      if (se > 0.0) {
        in_se = dev / se;
      } else if (dev > 0.0 || !std::isfinite(dev)) {
        in_se = std::numeric_limits<double>::infinity();
      }
      check.max_se = std::max(check.max_se, in_se);
      check.max_abs_dev = std::max(check.max_abs_dev, dev);
    }
    check.pass = check.max_se <= tolerance;
    report.pass = report.pass && check.pass;
    report.estimators.push_back(check);
  }
  return report;
}

std::string CheckReport::to_string() const {
  std::ostringstream out;
  out << "estimator check on " << problem << ", " << trials << " trials, tolerance "
      << tolerance << " SE\n";
  for (const auto& e : estimators) {
    out << "  " << (e.pass ? "PASS " : "FAIL ") << e.name << ": max " << e.max_se
        << " SE, max |dev| " << e.max_abs_dev << " over " << e.components << " components\n";
  }
  out << (pass ? "PASS" : "FAIL") << '\n';
  return out.str();
}

}  // namespace zoba::harness
