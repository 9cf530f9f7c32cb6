#include "zoba/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "zoba/harness/trace_csv.hpp"
#include "zoba/rng.hpp"

namespace zoba::harness {

double normalized_gap(double psi_k, double psi_0, double min_psi) {
  if (!(psi_0 > min_psi)) {
    throw DegenerateStartError("normalized gap undefined: psi_0 <= min psi");
  }
  return (psi_k - min_psi) / (psi_0 - min_psi);
}

MetricsHook quadratic_metrics(std::shared_ptr<const QuadraticInstance> instance, double psi_0) {
  return [instance = std::move(instance), psi_0](const SolverState& state, TraceRow& row) {
    const auto value = instance->psi_and_grad(state.x);
    const double min_psi = QuadraticInstance::min_psi();
    row.psi = value.value;
    row.psi_gap = value.value - min_psi;
    row.norm_gap = normalized_gap(value.value, psi_0, min_psi);
    row.grad_psi_norm = value.gradient.norm();
    row.z_err = (state.z - instance->z_star(state.x)).norm();
    row.v_err = (state.v - instance->v_star(state.x)).norm();
  };
}

std::uint64_t repeat_seed(std::uint64_t master_seed, std::uint64_t r) {
  return derive_seed(master_seed, r);
}

RepeatInit sample_init(std::uint64_t seed, Index p, Index d, double lo, double hi) {
  RngStream rng(derive_seed(seed, "init"));
  RepeatInit init;
  init.x0 = rng.uniform_vector(d, lo, hi);
  init.z0 = rng.uniform_vector(p, lo, hi);
  return init;
}

double final_gap(const RunTrace& trace) {
  if (trace.diverged || trace.rows.empty()) return 1.0;
  const double gap = trace.rows.back().norm_gap;
  return std::isfinite(gap) ? gap : 1.0;
}

RunTrace run_single(const ExperimentConfig& config,
                    const std::shared_ptr<const QuadraticInstance>& instance,
                    const RepeatInit& init, std::uint64_t seed) {
  QuadraticOracle oracle(instance);
  SolverState state;
  state.x = init.x0;
  state.z = init.z0;
  state.v = Vector::Zero(instance->p());

  RunOptions options;
  options.budget = config.budget;
  options.max_iterations = config.max_iterations;
  options.metric_stride = config.metric_stride;
  options.record_wall_time = config.record_wall_time;

  const auto metrics = quadratic_metrics(instance, instance->psi(init.x0));
  RunTrace trace = config.algorithm == Algorithm::kZoba
                       ? zoba_run(oracle, config.params.zoba(), std::move(state), options, seed,
                                  metrics)
                       : hfzoba_run(oracle, config.params.hfzoba(), std::move(state), options,
                                    seed, metrics);
  trace.instance_id = instance->id();
  return trace;
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& job) {
  const auto threads = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            job(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto instance =
      std::make_shared<const QuadraticInstance>(QuadraticInstance::generate(config.instance));
  const auto repeats = static_cast<std::size_t>(config.repeats);

  ExperimentResult result;
  result.inits.resize(repeats);
  result.traces.resize(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    result.inits[r] = sample_init(repeat_seed(config.seed, r), instance->p(), instance->d(),
                                  config.init_lo, config.init_hi);
  }
  if (config.discard_first) {
    // Warm-up run, dropped; only wall time can differ from repeat 0.
    run_single(config, instance, result.inits[0], repeat_seed(config.seed, 0));
  }
  parallel_for(repeats, config.jobs, [&](std::size_t r) {
    result.traces[r] = run_single(config, instance, result.inits[r], repeat_seed(config.seed, r));
  });

  for (const auto& trace : result.traces) {
    result.final_gaps.push_back(final_gap(trace));
    if (trace.diverged) ++result.diverged;
  }
  std::tie(result.mean_gap, result.std_gap) = mean_and_std(result.final_gaps);

  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto& trace = result.traces[r];
    runs.push_back({{"repeat", r},
                    {"seed", trace.seed},
                    {"iterations", trace.iterations()},
                    {"evaluations", trace.final_state.ledger.total()},
                    {"final_norm_gap", result.final_gaps[r]},
                    {"diverged", trace.diverged},
                    {"trace", "trace_r" + std::to_string(r) + ".csv"}});
  }
  // Where and how parallel the run was does not affect results; keep the summary reproducible.
  auto recorded = to_json(config);
  recorded.erase("output");
  recorded.erase("jobs");
  result.summary = {{"algorithm", algorithm_name(config.algorithm)},
                    {"instance_id", instance->id()},
                    {"params", result.traces.front().params},
                    {"per_iteration_cost", config.per_iteration_cost()},
                    {"budget", config.budget},
                    {"repeats", config.repeats},
                    {"final_norm_gap_mean", result.mean_gap},
                    {"final_norm_gap_std", result.std_gap},
                    {"diverged_runs", result.diverged},
                    {"runs", runs},
                    {"config", recorded}};

  if (!config.output.empty()) {
    const std::filesystem::path dir(config.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    for (std::size_t r = 0; r < repeats; ++r) {
      write_trace_csv(dir / ("trace_r" + std::to_string(r) + ".csv"), result.traces[r].rows);
    }
    const auto path = dir / "summary.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << result.summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }
  return result;
}

}  // namespace zoba::harness
