#include "zoba/schedule.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "zoba/common.hpp"

namespace zoba {

void StepSchedule::validate(const char* name) const {
  if (!(base > 0.0) || !std::isfinite(base)) {
    throw ConfigError(std::string(name) + ": base must be positive and finite, got " +
                      std::to_string(base));
  }
  if (kind == Kind::kPowerDecay && !std::isfinite(exponent)) {
    throw ConfigError(std::string(name) + ": exponent must be finite");
  }
}

double StepSchedule::value(std::uint64_t k) const {
  if (kind == Kind::kConstant) return base;
  return base * std::pow(static_cast<double>(k) + 1.0, -exponent);
}

namespace {

std::string shortest(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(const StepSchedule& schedule) {
  if (schedule.kind == StepSchedule::Kind::kConstant) return "const(" + shortest(schedule.base) + ")";
  return "pow(" + shortest(schedule.base) + "," + shortest(schedule.exponent) + ")";
}

double schedule_value(const StepSchedule& schedule, std::uint64_t k) {
  schedule.validate();
  return schedule.value(k);
}

}  // namespace zoba
