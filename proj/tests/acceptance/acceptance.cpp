// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the number of failures.
#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "zoba/harness/check.hpp"
#include "zoba/harness/config.hpp"
#include "zoba/harness/experiment.hpp"
#include "zoba/harness/grid.hpp"
#include "zoba/harness/trace_csv.hpp"
#include "zoba/hfzoba_solver.hpp"
#include "zoba/quadratic.hpp"
#include "zoba/zoba_solver.hpp"

using namespace zoba;
using namespace zoba::harness;
namespace fs = std::filesystem;

namespace {

// Seeds are fixed up front; none was chosen after looking at outcomes.
constexpr std::uint64_t kInstanceSeed = 1;
constexpr std::uint64_t kGridSeed = 1;
constexpr std::uint64_t kEvaluationSeed = 2;
constexpr std::uint64_t kDecaySeed = 3;
constexpr std::uint64_t kCheckSeed = 1;

int failures = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void criterion(const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = limit_s <= 0.0 || secs < limit_s;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::ostringstream time;
  time.precision(3);
  time << secs << " s";
  if (limit_s > 0.0) time << " / limit " << limit_s << " s";
  std::printf("%s  %s: %s (%s)\n", pass ? "PASS" : "FAIL", name, out.detail.c_str(),
              time.str().c_str());
  std::fflush(stdout);
}

InstanceSpec benchmark_spec() {
  InstanceSpec spec;
  spec.p = 10;
  spec.d = 10;
  spec.n = 200;
  spec.m = 200;
  spec.seed = kInstanceSeed;
  return spec;
}

ExperimentConfig benchmark_config(Algorithm algorithm) {
  ExperimentConfig c;
  c.algorithm = algorithm;
  c.instance = benchmark_spec();
  c.params.h = StepSchedule::constant(1e-3);
  c.params.hhat = StepSchedule::constant(1e-3);
  c.params.b1 = c.params.b2 = 1;
  c.params.l1 = c.params.l2 = 10;
  c.budget = 200000;
  c.init_lo = -5.0;
  c.init_hi = 10.0;
  c.record_wall_time = false;
  return c;
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(4);
  out << v;
  return out.str();
}

Outcome evaluation_counts() {
  auto instance = std::make_shared<const QuadraticInstance>(QuadraticInstance::generate(benchmark_spec()));
  QuadraticOracle oracle(instance);
  int combos = 0;
  std::uint64_t mismatches = 0;
  for (Index b1 : {1, 5})
    for (Index b2 : {2, 10})
      for (Index l1 : {1, 10})
        for (Index l2 : {2, 5}) {
          ++combos;
          SolverState init;
          init.x = Vector::Zero(10);
          init.z = Vector::Ones(10);
          init.v = Vector::Zero(10);
          ZobaParams zp;
          zp.b1 = b1;
          zp.b2 = b2;
          zp.l1 = l1;
          zp.l2 = l2;
          HfZobaParams hp;
          hp.b1 = b1;
          hp.b2 = b2;
          hp.l1 = l1;
          hp.l2 = l2;
          const auto zcost = b1 * (4 * l1 + 1) + b2 * (2 * l2 + 1);
          const auto hcost = 2 * b1 * (2 * l1 + 1) + b2 * (2 * l2 + 1);
          auto zs = SolverStreams::from_seed(combos);
          auto hs = SolverStreams::from_seed(combos);
          SolverState a = init, b = init;
          for (int it = 0; it < 3; ++it) {
            const auto before_a = a.ledger.total();
            a = zoba_step(a, oracle, zp, zs);
            mismatches += a.ledger.total() - before_a != static_cast<std::uint64_t>(zcost);
            mismatches += a.ledger.per_iteration_last != static_cast<std::uint64_t>(zcost);
            const auto before_b = b.ledger.total();
            b = hfzoba_step(b, oracle, hp, hs);
            mismatches += b.ledger.total() - before_b != static_cast<std::uint64_t>(hcost);
            mismatches += b.ledger.per_iteration_last != static_cast<std::uint64_t>(hcost);
          }
        }
  return {mismatches == 0, std::to_string(combos) + " (b1,b2,l1,l2) combinations x 2 solvers x 3 steps, " +
                               std::to_string(mismatches) + " ledger mismatches"};
}

Outcome estimator_unbiasedness() {
  auto problem = quadratic_check_problem(5, 5, kCheckSeed);
  problem.h = 1e-3;
  const auto report = check_estimators(problem, 100000, 3.0, kCheckSeed);
  std::string detail = "p=d=5, N=1e5, h=1e-3, max deviation in SE:";
  for (const auto& e : report.estimators) detail += " " + e.name + " " + fmt(e.max_se) + ";";
  return {report.pass, detail};
}

Outcome quadratic_exactness() {
  RngStream rng(derive_seed(kCheckSeed, "exactness"));
  double worst_cd = 0.0;
  double worst_hvp = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto problem = quadratic_check_problem(5, 4, 1000 + t);
    auto streams = SolverStreams::from_seed(t);
    auto batch = EstimatorBatch::draw(*problem.oracle, problem.z, problem.x, 1e-3, 1, 1, streams);
    const Vector w = batch.directions().w_row(0, 0);
    const Vector expected = w * w.dot(problem.grad_z_g);
    worst_cd = std::max(worst_cd, (grad_central_inner(batch, 1, 1) - expected).cwiseAbs().maxCoeff());

    const Matrix& P = problem.hess_zz_g;
    const Matrix& M = problem.hess_xz_g;
    const Vector gz0 = problem.grad_z_g;
    const Vector z0 = problem.z;
    const Vector x0 = problem.x;
    // Exact gradients of g in z and x, affine in (z, x).
    const auto grad_z = [&](const Vector& z, const Vector& x) {
      return Vector(gz0 + P * (z - z0) + M.transpose() * (x - x0));
    };
    const auto grad_x = [&](const Vector& z, const Vector&) { return Vector(M * (z - z0)); };
    const Vector v = rng.normal_vector(5);
    const double hbar = rng.uniform(1e-4, 1.0);
    worst_hvp = std::max(worst_hvp, (hvp_forward(grad_z, z0, x0, v, hbar) - P * v).cwiseAbs().maxCoeff());
    worst_hvp = std::max(worst_hvp, (hvp_forward(grad_x, z0, x0, v, hbar) - M * v).cwiseAbs().maxCoeff());
  }
  const auto instance = QuadraticInstance::generate(benchmark_spec());
  for (int t = 0; t < 20; ++t) {
    const Vector z = rng.uniform_vector(10, -5, 10);
    const Vector x = rng.uniform_vector(10, -5, 10);
    const Vector v = rng.normal_vector(10);
    const double hbar = hbar_from_v(1e-3, v, 1e-12);
    const auto gz = [&](const Vector& zz, const Vector& xx) { return instance.grad_z_inner(zz, xx); };
    const auto gx = [&](const Vector& zz, const Vector& xx) { return instance.grad_x_inner(zz, xx); };
    worst_hvp = std::max(worst_hvp, (hvp_forward(gz, z, x, v, hbar) - instance.hess_zz_inner() * v).cwiseAbs().maxCoeff());
    worst_hvp = std::max(worst_hvp, (hvp_forward(gx, z, x, v, hbar) - instance.hess_xz_inner() * v).cwiseAbs().maxCoeff());
  }
  const bool pass = worst_cd <= 1e-8 && worst_hvp <= 1e-8;
  return {pass, "max |central - (w w^T) grad| = " + fmt(worst_cd) + ", max |hvp - H v| = " +
                    fmt(worst_hvp) + " (tolerance 1e-8)"};
}

Outcome analytic_oracles() {
  double inner_res = 0.0, v_res = 0.0, rel_fd = 0.0, psi_min = 0.0, grad_min = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto spec = benchmark_spec();
    spec.seed = seed;
    const auto inst = QuadraticInstance::generate(spec);
    RngStream rng(derive_seed(seed, "oracle-points"));
    for (int t = 0; t < 100; ++t) {
      const Vector x = rng.uniform_vector(10, -5.0, 10.0);
      const Vector z = inst.z_star(x);
      inner_res = std::max(inner_res, inst.grad_z_inner(z, x).norm());
      const Vector v = inst.v_star(x);
      v_res = std::max(v_res, (inst.hess_zz_inner() * v + inst.grad_z_outer(z, x)).norm());
      const Vector grad = inst.psi_and_grad(x).gradient;
      Vector fd(10);
      const double step = 1e-5;
      for (Index i = 0; i < 10; ++i) {
        Vector xp = x, xm = x;
        xp(i) += step;
        xm(i) -= step;
        fd(i) = (inst.psi(xp) - inst.psi(xm)) / (2.0 * step);
      }
      rel_fd = std::max(rel_fd, (fd - grad).norm() / grad.norm());
    }
    const auto at_min = inst.psi_and_grad(inst.x_bar());
    psi_min = std::max(psi_min, std::abs(at_min.value));
    grad_min = std::max(grad_min, at_min.gradient.norm());
  }
  const bool pass = inner_res <= 1e-8 && v_res <= 1e-8 && rel_fd <= 1e-4 && psi_min <= 1e-16 &&
                    grad_min <= 1e-8;
  return {pass, "20 instances x 100 points: max |grad_z G(z*)| " + fmt(inner_res) +
                    ", max v* residual " + fmt(v_res) + ", max rel. FD error " + fmt(rel_fd) +
                    ", max |Psi(x_bar)| " + fmt(psi_min) + ", max |grad Psi(x_bar)| " + fmt(grad_min)};
}

struct Tuned {
  ExperimentConfig zoba;
  ExperimentConfig hfzoba;
};

Tuned tuned;

Outcome scaled_convergence() {
  const auto grid = nlohmann::json::parse(R"({"gamma": [1e-4, 1e-3, 1e-2], "rho": [1e-4, 1e-3, 1e-2]})");
  std::string detail;
  bool pass = true;
  for (const auto algorithm : {Algorithm::kZoba, Algorithm::kHfZoba}) {
    auto base = benchmark_config(algorithm);
    base.seed = kGridSeed;
    base.repeats = 6;
    const auto search = grid_search(base, grid);
    auto best = search.best;
    (algorithm == Algorithm::kZoba ? tuned.zoba : tuned.hfzoba) = best;

    best.seed = kEvaluationSeed;
    best.repeats = 10;
    const auto result = run_experiment(best);
    const auto hits = std::count_if(result.final_gaps.begin(), result.final_gaps.end(),
                                    [](double g) { return g <= 0.1; });
    pass = pass && hits >= 8;
    detail += std::string(algorithm_name(algorithm)) + " grid best gamma=" +
              fmt(best.params.gamma.base) + " rho=" + fmt(best.params.rho.base) + ": " +
              std::to_string(hits) + "/10 seeds with gap <= 0.1 (mean " + fmt(result.mean_gap) +
              ", max " + fmt(*std::max_element(result.final_gaps.begin(), result.final_gaps.end())) +
              "); ";
  }
  return {pass, detail};
}

// Mean of |grad Psi|^2 over the first and last quarter of the iterates.
std::pair<double, double> quartile_means(const RunTrace& trace) {
  const auto n = trace.rows.size();
  const auto quarter = std::max<std::size_t>(n / 4, 1);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < quarter; ++i) {
    first += trace.rows[i].grad_psi_norm * trace.rows[i].grad_psi_norm;
    const auto& r = trace.rows[n - quarter + i];
    last += r.grad_psi_norm * r.grad_psi_norm;
  }
  return {first / quarter, last / quarter};
}

Outcome decaying_trend() {
  std::string detail;
  bool pass = true;
  for (const auto algorithm : {Algorithm::kZoba, Algorithm::kHfZoba}) {
    auto c = benchmark_config(algorithm);
    const auto& base = algorithm == Algorithm::kZoba ? tuned.zoba : tuned.hfzoba;
    c.params.gamma = StepSchedule::power_decay(base.params.gamma.base, 0.6);
    c.params.rho = StepSchedule::power_decay(base.params.rho.base, 0.6);
    if (algorithm == Algorithm::kZoba) {
      c.params.h = StepSchedule::power_decay(1e-3, 1.1);
    } else {
      c.params.h = StepSchedule::power_decay(1e-3, 0.75);
      c.params.hhat = StepSchedule::power_decay(1e-3, 0.6);
    }
    c.seed = kDecaySeed;
    c.repeats = 10;
    const auto result = run_experiment(c);
    int decreasing = 0;
    for (const auto& trace : result.traces) {
      const auto [first, last] = quartile_means(trace);
      decreasing += !trace.diverged && last < first;
    }
    pass = pass && decreasing >= 9;
    detail += std::string(algorithm_name(algorithm)) + " " + to_string(c.params.gamma) + " " +
              to_string(c.params.rho) + " h=" + to_string(c.params.h) +
              (algorithm == Algorithm::kHfZoba ? " hhat=" + to_string(c.params.hhat) : "") +
              ": " + std::to_string(decreasing) + "/10 seeds with last-quartile mean below first; ";
  }
  return {pass, detail};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

Outcome order_and_determinism() {
  auto instance = std::make_shared<const QuadraticInstance>(QuadraticInstance::generate(benchmark_spec()));
  QuadraticOracle oracle(instance);
  const auto init = sample_init(repeat_seed(kEvaluationSeed, 0), 10, 10, -5.0, 10.0);
  SolverState start;
  start.x = init.x0;
  start.z = init.z0;
  start.v = Vector::Zero(10);
  RunOptions options;
  options.budget = 20000;
  options.record_wall_time = false;
  const auto metrics = quadratic_metrics(instance, instance->psi(init.x0));

  int permutations = 0;
  int order_mismatches = 0;
  std::array<Block, 3> order{Block::kZ, Block::kV, Block::kX};
  std::sort(order.begin(), order.end());
  std::string zref, href;
  do {
    ZobaParams zp = tuned.zoba.params.zoba();
    HfZobaParams hp = tuned.hfzoba.params.hfzoba();
    zp.order = order;
    hp.order = order;
    const auto zt = zoba_run(oracle, zp, start, options, 7, metrics);
    const auto ht = hfzoba_run(oracle, hp, start, options, 7, metrics);
    const auto zcsv = format_trace_csv(zt.rows);
    const auto hcsv = format_trace_csv(ht.rows);
    if (permutations == 0) {
      zref = zcsv;
      href = hcsv;
    }
    order_mismatches += (zcsv != zref) + (hcsv != href);
    ++permutations;
  } while (std::next_permutation(order.begin(), order.end()));

  int byte_mismatches = 0;
  int files = 0;
  for (const auto algorithm : {Algorithm::kZoba, Algorithm::kHfZoba}) {
    auto c = algorithm == Algorithm::kZoba ? tuned.zoba : tuned.hfzoba;
    c.seed = kEvaluationSeed;
    c.repeats = 3;
    c.budget = 20000;
    const auto a = fs::temp_directory_path() / "zoba-acceptance-a";
    const auto b = fs::temp_directory_path() / "zoba-acceptance-b";
    fs::remove_all(a);
    fs::remove_all(b);
    c.output = a.string();
    run_experiment(c);
    c.output = b.string();
    c.jobs = 3;
    run_experiment(c);
    for (const auto& name : {"trace_r0.csv", "trace_r1.csv", "trace_r2.csv", "summary.json"}) {
      ++files;
      byte_mismatches += slurp(a / name).empty() || slurp(a / name) != slurp(b / name);
    }
    fs::remove_all(a);
    fs::remove_all(b);
  }
  const bool pass = permutations == 6 && order_mismatches == 0 && byte_mismatches == 0;
  return {pass, std::to_string(permutations) + " update orders x 2 solvers: " +
                    std::to_string(order_mismatches) + " differing traces; " +
                    std::to_string(files) + " files from two same-seed runs: " +
                    std::to_string(byte_mismatches) + " differing"};
}

}  // namespace

int main() {
  criterion("evaluation-count exactness", 10.0, evaluation_counts);
  criterion("estimator unbiasedness", 60.0, estimator_unbiasedness);
  criterion("quadratic exactness", 1.0, quadratic_exactness);
  criterion("analytic-oracle consistency", 30.0, analytic_oracles);
  criterion("scaled convergence", 300.0, scaled_convergence);
  criterion("decaying-step trend", 0.0, decaying_trend);
  criterion("update order and determinism", 0.0, order_and_determinism);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
