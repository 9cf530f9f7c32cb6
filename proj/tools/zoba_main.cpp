// Command-line front end: run, grid, check, fe-count.
#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "zoba/harness/check.hpp"
#include "zoba/harness/config.hpp"
#include "zoba/harness/experiment.hpp"
#include "zoba/harness/grid.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

using namespace zoba;
using namespace zoba::harness;

void print_warnings(const ExperimentConfig& config) {
  if (config.algorithm != Algorithm::kHfZoba) return;
  for (const auto& w : config.params.hfzoba().warnings()) std::cerr << "warning: " << w << '\n';
}

int cmd_run(const std::string& path) {
  const auto config = load_config(path);
  print_warnings(config);
  const auto result = run_experiment(config);
  for (std::size_t r = 0; r < result.traces.size(); ++r) {
    const auto& t = result.traces[r];
    std::cout << "repeat " << r << ": iterations " << t.iterations() << ", evaluations "
              << t.final_state.ledger.total() << ", final norm gap " << result.final_gaps[r]
              << (t.diverged ? " (diverged)" : "") << '\n';
  }
  std::cout << "final norm gap " << result.mean_gap << " +- " << result.std_gap << " over "
            << result.traces.size() << " repeats\n";
  if (!config.output.empty()) std::cout << "wrote " << config.output << '\n';
  if (result.diverged == static_cast<int>(result.traces.size())) return kExitDiverged;
  return kExitOk;
}

int cmd_grid(const std::string& path) {
  const auto config = load_config(path);
  print_warnings(config);
  const auto result = grid_search(config);
  std::cout << "rank  mean_gap  std_gap  diverged  values\n";
  for (std::size_t i = 0; i < result.leaderboard.size(); ++i) {
    const auto& e = result.leaderboard[i];
    std::cout << i + 1 << "  " << e.mean_gap << "  " << e.std_gap << "  " << e.diverged << "  "
              << e.point.values.dump() << '\n';
    for (const auto& err : e.errors) std::cout << "    error: " << err << '\n';
  }
  std::cout << "best " << result.leaderboard.front().point.values.dump() << " (" << result.runs
            << " runs)\n";
  bool all_diverged = true;
  for (const auto& e : result.leaderboard) {
    all_diverged = all_diverged && e.diverged == static_cast<int>(e.gaps.size());
  }
  return all_diverged ? kExitDiverged : kExitOk;
}

std::pair<Index, Index> parse_dims(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("--dims expects p,d");
  const auto parse = [&](std::string_view s) {
    Index v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || v < 1) {
      throw ConfigError("--dims expects two positive integers, got '" + text + "'");
    }
    return v;
  };
  const std::string_view all(text);
  return {parse(all.substr(0, comma)), parse(all.substr(comma + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zeroth-order bilevel optimizers (ZOBA, HF-ZOBA) on quadratic benchmarks"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "config file")->required();

  auto* grid = app.add_subcommand("grid", "grid search over the config's \"grid\" lattice");
  grid->add_option("--config", config_path, "config file")->required();

  std::string dims = "5,5";
  std::uint64_t trials = 100000;
  double tol = 3.0;
  std::uint64_t check_seed = 1;
  double check_h = 1e-3;
  bool zero_target = false;
  auto* check = app.add_subcommand("check", "Monte-Carlo unbiasedness check of the estimators");
  check->add_option("--dims", dims, "p,d")->capture_default_str();
  check->add_option("--trials", trials, "Monte-Carlo trials (>= 1000)")->capture_default_str();
  check->add_option("--tol", tol, "tolerance in standard errors")->capture_default_str();
  check->add_option("--seed", check_seed, "seed of target and directions")->capture_default_str();
  check->add_option("--spacing", check_h, "finite-difference spacing h")->capture_default_str();
  check->add_flag("--zero", zero_target, "use the zero target");

  std::string algo = "zoba";
  std::uint64_t b1 = 1, l1 = 1, b2 = 1, l2 = 1;
  auto* fe = app.add_subcommand("fe-count", "function evaluations per iteration");
  fe->add_option("--algo", algo, "zoba or hfzoba")->capture_default_str();
  fe->add_option("--b1", b1)->check(CLI::PositiveNumber);
  fe->add_option("--l1", l1)->check(CLI::PositiveNumber);
  fe->add_option("--b2", b2)->check(CLI::PositiveNumber);
  fe->add_option("--l2", l2)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path);
    if (*grid) return cmd_grid(config_path);
    if (*check) {
      if (trials < 1000) throw ConfigError("--trials must be >= 1000");
      const auto [p, d] = parse_dims(dims);
      auto problem = zero_target ? zero_check_problem(p, d) : quadratic_check_problem(p, d, check_seed);
      problem.h = check_h;
      const auto report = check_estimators(problem, trials, tol, check_seed);
      std::cout << report.to_string();
      return report.pass ? kExitOk : kExitCheckFailed;
    }
    if (*fe) {
      const auto algorithm = parse_algorithm(algo);
      std::cout << (algorithm == Algorithm::kZoba ? fe_per_iteration_zoba(b1, l1, b2, l2)
                                                  : fe_per_iteration_hfzoba(b1, l1, b2, l2))
                << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
