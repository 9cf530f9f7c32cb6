#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <utility>
#include <memory>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "zoba/harness/config.hpp"
#include "zoba/quadratic.hpp"
#include "zoba/solver.hpp"

namespace zoba::harness {

// Raised when the starting point already attains the minimum.
class DegenerateStartError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// (psi_k - min_psi) / (psi_0 - min_psi).
double normalized_gap(double psi_k, double psi_0, double min_psi);

// Fills psi, psi_gap, norm_gap, grad_psi_norm, z_err and v_err from the
// analytic oracles. psi_0 is Psi at the run's starting x.
MetricsHook quadratic_metrics(std::shared_ptr<const QuadraticInstance> instance, double psi_0);

struct RepeatInit {
  Vector x0;
  Vector z0;
};

// Solver seed of repeat r.
std::uint64_t repeat_seed(std::uint64_t master_seed, std::uint64_t r);
// x0 then z0, uniform on [lo, hi], from the repeat's "init" stream.
RepeatInit sample_init(std::uint64_t repeat_seed, Index p, Index d, double lo, double hi);

// Final normalized gap of a trace; 1 for a diverged run.
double final_gap(const RunTrace& trace);

// Runs the configured solver once from `init` (v0 = 0) with solver seed `seed`.
RunTrace run_single(const ExperimentConfig& config,
                    const std::shared_ptr<const QuadraticInstance>& instance,
                    const RepeatInit& init, std::uint64_t seed);

struct ExperimentResult {
  std::vector<RunTrace> traces;
  std::vector<RepeatInit> inits;
  std::vector<double> final_gaps;
  double mean_gap = 0.0;
  double std_gap = 0.0;  // sample standard deviation; 0 for one repeat
  int diverged = 0;
  nlohmann::json summary;
};

/// Runs every repeat r with seed repeat_seed(config.seed, r). When
/// config.output is set, writes trace_r<r>.csv per repeat and summary.json
/// into that directory.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Mean and sample standard deviation.
std::pair<double, double> mean_and_std(const std::vector<double>& values);

// Runs jobs(i) for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job);

}  // namespace zoba::harness
