#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "zoba/hfzoba_solver.hpp"
#include "zoba/quadratic.hpp"
#include "zoba/schedule.hpp"
#include "zoba/zoba_solver.hpp"

namespace zoba::harness {

enum class Algorithm { kZoba, kHfZoba };

const char* algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(const std::string& name);

// Union of both solvers' knobs; `hhat` and `v_zero_threshold` only affect HF-ZOBA.
struct SolverParams {
  StepSchedule gamma = StepSchedule::constant(1e-3);
  StepSchedule rho = StepSchedule::constant(1e-3);
  StepSchedule h = StepSchedule::constant(1e-3);
  StepSchedule hhat = StepSchedule::constant(1e-3);
  Index b1 = 1;
  Index b2 = 1;
  Index l1 = 1;
  Index l2 = 1;
  double v_zero_threshold = 1e-12;
  int workers = 1;

  ZobaParams zoba() const;
  HfZobaParams hfzoba() const;
};

/// One experiment: an instance, a solver configuration and the protocol
/// (budget, repeats, initialization box, outputs).
///
/// JSON layout (every key except "seed" and "budget" has a default):
///   {
///     "algorithm": "zoba" | "hfzoba",
///     "seed": 42,
///     "instance": {"kind": "gaussian", "p": 10, "d": 10, "n": 200, "m": 200, "seed": 1},
///     "params": {"gamma": 0.01, "rho": {"kind": "power", "base": 0.01, "exponent": 0.6},
///                "h": 0.001, "hhat": 0.001, "b1": 1, "b2": 1, "l1": 10, "l2": 10},
///     "budget": 200000, "max_iterations": 1000000, "repeats": 10,
///     "init_box": [-5, 10], "output": "runs/zoba", "metric_stride": 1,
///     "record_wall_time": true, "discard_first": false, "jobs": 1,
///     "grid": {"gamma": [1e-4, 1e-3, 1e-2], "rho": [1e-4, 1e-3, 1e-2]}
///   }
/// A schedule is either a number (constant) or {"kind": "constant"|"power", ...}.
struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kZoba;
  std::uint64_t seed = 0;
  InstanceSpec instance;
  SolverParams params;
  std::uint64_t budget = 0;
  std::uint64_t max_iterations = 1'000'000;
  int repeats = 1;
  double init_lo = -5.0;
  double init_hi = 10.0;
  std::string output;
  std::uint64_t metric_stride = 1;
  bool record_wall_time = true;
  bool discard_first = false;
  int jobs = 1;  // repeats run concurrently
  nlohmann::json grid = nlohmann::json::object();

  std::uint64_t per_iteration_cost() const;
  // Throws ConfigError on any violated constraint.
  void validate() const;
};

StepSchedule parse_schedule(const nlohmann::json& j, const char* name);
nlohmann::json schedule_to_json(const StepSchedule& schedule);

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

}  // namespace zoba::harness
