#pragma once

#include <cstdint>
#include <string>

namespace zoba {

/// Step size / discretization schedule indexed by iteration k >= 0.
///
/// constant:     value(k) = base
/// power-decay:  value(k) = base * (k + 1)^(-exponent)
struct StepSchedule {
  enum class Kind { kConstant, kPowerDecay };

  Kind kind = Kind::kConstant;
  double base = 0.0;
  double exponent = 0.0;

  static StepSchedule constant(double base) { return {Kind::kConstant, base, 0.0}; }
  static StepSchedule power_decay(double base, double exponent) {
    return {Kind::kPowerDecay, base, exponent};
  }

  // Throws ConfigError when base is not a positive finite number.
  void validate(const char* name = "schedule") const;
  double value(std::uint64_t k) const;

  friend bool operator==(const StepSchedule&, const StepSchedule&) = default;
};

// "const(0.01)" or "pow(0.1,0.6)"; 17 significant digits.
std::string to_string(const StepSchedule& schedule);

// Validating form of StepSchedule::value.
double schedule_value(const StepSchedule& schedule, std::uint64_t k);

}  // namespace zoba
