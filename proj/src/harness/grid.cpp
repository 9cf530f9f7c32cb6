#include "zoba/harness/grid.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <memory>
#include <string_view>
#include <tuple>

namespace zoba::harness {

namespace {

constexpr std::array<std::string_view, 8> kGridKeys{"gamma", "rho", "h", "hhat",
                                                    "b1",    "b2",  "l1", "l2"};

void apply(SolverParams& params, std::string_view key, const nlohmann::json& value) {
  const std::string name(key);
  const auto count = [&] {
    if (!value.is_number_integer()) throw ConfigError("grid '" + name + "' values must be integers");
    return value.get<Index>();
  };
  if (key == "gamma") params.gamma = parse_schedule(value, "gamma");
  else if (key == "rho") params.rho = parse_schedule(value, "rho");
  else if (key == "h") params.h = parse_schedule(value, "h");
  else if (key == "hhat") params.hhat = parse_schedule(value, "hhat");
  else if (key == "b1") params.b1 = count();
  else if (key == "b2") params.b2 = count();
  else if (key == "l1") params.l1 = count();
  else if (key == "l2") params.l2 = count();
}

}  // namespace

std::vector<GridPoint> expand_grid(const ExperimentConfig& base, const nlohmann::json& grid) {
  if (!grid.is_object()) throw ConfigError("grid must be an object of value lists");
  for (const auto& [key, values] : grid.items()) {
    if (std::find(kGridKeys.begin(), kGridKeys.end(), key) == kGridKeys.end()) {
      throw ConfigError("unknown grid key '" + key + "'");
    }
    if (!values.is_array() || values.empty()) {
      throw ConfigError("grid '" + key + "' must be a non-empty list");
    }
  }
  std::vector<std::string_view> keys;
  for (const auto key : kGridKeys) {
    if (grid.contains(std::string(key))) keys.push_back(key);
  }

  std::size_t total = 1;
  for (const auto key : keys) total *= grid.at(std::string(key)).size();

  std::vector<GridPoint> points;
  points.reserve(total);
  for (std::size_t index = 0; index < total; ++index) {
    GridPoint point;
    point.index = index;
    point.values = nlohmann::json::object();
    point.config = base;
    point.config.grid = nlohmann::json::object();
    std::size_t rest = index;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) {
      const auto& values = grid.at(std::string(*it));
      const auto& value = values.at(rest % values.size());
      rest /= values.size();
      apply(point.config.params, *it, value);
      point.values[std::string(*it)] = value;
    }
    point.config.validate();
    points.push_back(std::move(point));
  }
  return points;
}

GridResult grid_search(const ExperimentConfig& base, const nlohmann::json& grid) {
  base.instance.validate();
  if (base.repeats < 1) throw ConfigError("repeats must be >= 1");
  auto points = expand_grid(base, grid);
  const auto instance =
      std::make_shared<const QuadraticInstance>(QuadraticInstance::generate(base.instance));
  const auto repeats = static_cast<std::size_t>(base.repeats);

  GridResult result;
  for (std::size_t r = 0; r < repeats; ++r) {
    result.inits.push_back(sample_init(repeat_seed(base.seed, r), instance->p(), instance->d(),
                                       base.init_lo, base.init_hi));
  }

  std::vector<GridEntry> entries(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    entries[i].point = std::move(points[i]);
    entries[i].gaps.assign(repeats, 1.0);
  }
  std::vector<std::string> run_errors(entries.size() * repeats);
  std::vector<char> run_diverged(entries.size() * repeats, 0);
  parallel_for(entries.size() * repeats, base.jobs, [&](std::size_t job) {
    const std::size_t i = job / repeats;
    const std::size_t r = job % repeats;
    try {
      const auto trace = run_single(entries[i].point.config, instance, result.inits[r],
                                    repeat_seed(base.seed, r));
      entries[i].gaps[r] = final_gap(trace);
      run_diverged[job] = trace.diverged ? 1 : 0;
    } catch (const std::exception& e) {
      run_errors[job] = "repeat " + std::to_string(r) + ": " + e.what();
    }
  });
  result.runs = entries.size() * repeats;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& entry = entries[i];
    for (std::size_t r = 0; r < repeats; ++r) {
      entry.diverged += run_diverged[i * repeats + r];
      if (!run_errors[i * repeats + r].empty()) entry.errors.push_back(run_errors[i * repeats + r]);
    }
    std::tie(entry.mean_gap, entry.std_gap) = mean_and_std(entry.gaps);
  }
  std::sort(entries.begin(), entries.end(), [](const GridEntry& a, const GridEntry& b) {
    const auto& pa = a.point.config.params;
    const auto& pb = b.point.config.params;
    return std::tuple(a.mean_gap, pa.gamma.base, pa.rho.base, a.point.index) <
           std::tuple(b.mean_gap, pb.gamma.base, pb.rho.base, b.point.index);
  });
  result.best = entries.front().point.config;
  result.leaderboard = std::move(entries);

  nlohmann::json board = nlohmann::json::array();
  for (const auto& entry : result.leaderboard) {
    board.push_back({{"index", entry.point.index},
                     {"values", entry.point.values},
                     {"mean_gap", entry.mean_gap},
                     {"std_gap", entry.std_gap},
                     {"gaps", entry.gaps},
                     {"diverged", entry.diverged},
                     {"errors", entry.errors}});
  }
  result.summary = {{"algorithm", algorithm_name(base.algorithm)},
                    {"instance_id", instance->id()},
                    {"repeats", base.repeats},
                    {"runs", result.runs},
                    {"best", result.leaderboard.front().point.values},
                    {"leaderboard", board}};

  if (!base.output.empty()) {
    const std::filesystem::path dir(base.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    const auto path = dir / "grid.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << result.summary.dump(2) << '\n';
  }
  return result;
}

}  // namespace zoba::harness
