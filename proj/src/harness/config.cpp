#include "zoba/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <string>

namespace zoba::harness {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("'") + key + "': " + e.what());
  }
}

}  // namespace

const char* algorithm_name(Algorithm algorithm) {
  return algorithm == Algorithm::kZoba ? "zoba" : "hfzoba";
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "zoba") return Algorithm::kZoba;
  if (name == "hfzoba" || name == "hf-zoba") return Algorithm::kHfZoba;
  throw ConfigError("unknown algorithm '" + name + "' (expected zoba or hfzoba)");
}

ZobaParams SolverParams::zoba() const {
  ZobaParams out;
  out.gamma = gamma;
  out.rho = rho;
  out.h = h;
  out.b1 = b1;
  out.b2 = b2;
  out.l1 = l1;
  out.l2 = l2;
  out.workers = workers;
  return out;
}

HfZobaParams SolverParams::hfzoba() const {
  HfZobaParams out;
  out.gamma = gamma;
  out.rho = rho;
  out.h = h;
  out.hhat = hhat;
  out.b1 = b1;
  out.b2 = b2;
  out.l1 = l1;
  out.l2 = l2;
  out.v_zero_threshold = v_zero_threshold;
  out.workers = workers;
  return out;
}

std::uint64_t ExperimentConfig::per_iteration_cost() const {
  const auto b1u = static_cast<std::uint64_t>(params.b1);
  const auto b2u = static_cast<std::uint64_t>(params.b2);
  const auto l1u = static_cast<std::uint64_t>(params.l1);
  const auto l2u = static_cast<std::uint64_t>(params.l2);
  return algorithm == Algorithm::kZoba ? fe_per_iteration_zoba(b1u, l1u, b2u, l2u)
                                       : fe_per_iteration_hfzoba(b1u, l1u, b2u, l2u);
}

void ExperimentConfig::validate() const {
  instance.validate();
  if (algorithm == Algorithm::kZoba) {
    params.zoba().validate();
  } else {
    params.hfzoba().validate();
  }
  if (budget < per_iteration_cost()) {
    throw ConfigError("budget " + std::to_string(budget) + " is below one iteration (" +
                      std::to_string(per_iteration_cost()) + " evaluations)");
  }
  if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  if (!(init_lo < init_hi) || !std::isfinite(init_lo) || !std::isfinite(init_hi)) {
    throw ConfigError("init_box must be [lo, hi] with lo < hi");
  }
  if (metric_stride < 1) throw ConfigError("metric_stride must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!grid.is_object()) throw ConfigError("grid must be an object of value lists");
}

StepSchedule parse_schedule(const nlohmann::json& j, const char* name) {
  StepSchedule out;
  if (j.is_number()) {
    out = StepSchedule::constant(j.get<double>());
  } else if (j.is_object()) {
    const auto kind = get_or<std::string>(j, "kind", "constant");
    const auto base = get_or<double>(j, "base", 0.0);
    if (kind == "constant") {
      out = StepSchedule::constant(base);
    } else if (kind == "power" || kind == "power-decay") {
      if (!j.contains("exponent")) {
        throw ConfigError(std::string(name) + ": power-decay schedule needs an exponent");
      }
      out = StepSchedule::power_decay(base, get_or<double>(j, "exponent", 0.0));
    } else {
      throw ConfigError(std::string(name) + ": unknown schedule kind '" + kind + "'");
    }
  } else {
    throw ConfigError(std::string(name) + ": schedule must be a number or an object");
  }
  out.validate(name);
  return out;
}

nlohmann::json schedule_to_json(const StepSchedule& schedule) {
  if (schedule.kind == StepSchedule::Kind::kConstant) {
    return {{"kind", "constant"}, {"base", schedule.base}};
  }
  return {{"kind", "power"}, {"base", schedule.base}, {"exponent", schedule.exponent}};
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  c.algorithm = parse_algorithm(get_or<std::string>(j, "algorithm", "zoba"));
  if (!j.contains("seed")) throw ConfigError("config needs a master 'seed'");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (j.contains("instance")) c.instance = j.at("instance").get<InstanceSpec>();

  const auto params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) throw ConfigError("params must be an object");
  auto& p = c.params;
  if (params.contains("gamma")) p.gamma = parse_schedule(params.at("gamma"), "gamma");
  if (params.contains("rho")) p.rho = parse_schedule(params.at("rho"), "rho");
  if (params.contains("h")) p.h = parse_schedule(params.at("h"), "h");
  if (params.contains("hhat")) p.hhat = parse_schedule(params.at("hhat"), "hhat");
  p.b1 = get_or<Index>(params, "b1", p.b1);
  p.b2 = get_or<Index>(params, "b2", p.b2);
  p.l1 = get_or<Index>(params, "l1", p.l1);
  p.l2 = get_or<Index>(params, "l2", p.l2);
  p.v_zero_threshold = get_or<double>(params, "v_zero_threshold", p.v_zero_threshold);
  p.workers = get_or<int>(params, "workers", p.workers);

  if (!j.contains("budget")) throw ConfigError("config needs an evaluation 'budget'");
  c.budget = get_or<std::uint64_t>(j, "budget", 0);
  c.max_iterations = get_or<std::uint64_t>(j, "max_iterations", c.max_iterations);
  c.repeats = get_or<int>(j, "repeats", c.repeats);
  if (j.contains("init_box")) {
    const auto box = get_or<std::vector<double>>(j, "init_box", {});
    if (box.size() != 2) throw ConfigError("init_box must be [lo, hi]");
    c.init_lo = box[0];
    c.init_hi = box[1];
  }
  c.output = get_or<std::string>(j, "output", "");
  c.metric_stride = get_or<std::uint64_t>(j, "metric_stride", c.metric_stride);
  c.record_wall_time = get_or<bool>(j, "record_wall_time", c.record_wall_time);
  c.discard_first = get_or<bool>(j, "discard_first", c.discard_first);
  c.jobs = get_or<int>(j, "jobs", c.jobs);
  if (j.contains("grid")) c.grid = j.at("grid");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  const auto& p = c.params;
  nlohmann::json params{{"gamma", schedule_to_json(p.gamma)},
                        {"rho", schedule_to_json(p.rho)},
                        {"h", schedule_to_json(p.h)},
                        {"b1", p.b1},
                        {"b2", p.b2},
                        {"l1", p.l1},
                        {"l2", p.l2},
                        {"workers", p.workers}};
  if (c.algorithm == Algorithm::kHfZoba) {
    params["hhat"] = schedule_to_json(p.hhat);
    params["v_zero_threshold"] = p.v_zero_threshold;
  }
  return {{"algorithm", algorithm_name(c.algorithm)},
          {"seed", c.seed},
          {"instance", c.instance},
          {"params", params},
          {"budget", c.budget},
          {"max_iterations", c.max_iterations},
          {"repeats", c.repeats},
          {"init_box", {c.init_lo, c.init_hi}},
          {"output", c.output},
          {"metric_stride", c.metric_stride},
          {"record_wall_time", c.record_wall_time},
          {"discard_first", c.discard_first},
          {"jobs", c.jobs},
          {"grid", c.grid}};
}

}  // namespace zoba::harness
