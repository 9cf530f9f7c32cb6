#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "zoba/harness/config.hpp"
#include "zoba/harness/experiment.hpp"

namespace zoba::harness {

struct GridPoint {
  std::size_t index = 0;   // position in the lattice
  nlohmann::json values;   // overridden keys, e.g. {"gamma": 0.01, "rho": 0.001}
  ExperimentConfig config;
};

/// Cartesian product of the value lists in `grid`, applied on top of `base`.
/// Recognized keys: gamma, rho, h, hhat (numbers or schedule objects) and b1,
/// b2, l1, l2. The lattice is enumerated with the last key (in that order)
/// varying fastest. An empty grid yields the base configuration alone.
std::vector<GridPoint> expand_grid(const ExperimentConfig& base, const nlohmann::json& grid);

struct GridEntry {
  GridPoint point;
  std::vector<double> gaps;  // one per repeat; failed or diverged runs count as 1
  double mean_gap = 0.0;
  double std_gap = 0.0;
  int diverged = 0;
  std::vector<std::string> errors;
};

struct GridResult {
  // Ascending mean gap; ties broken by smaller gamma, then smaller rho, then lattice index.
  std::vector<GridEntry> leaderboard;
  ExperimentConfig best;
  std::vector<RepeatInit> inits;  // shared by every lattice point
  std::size_t runs = 0;           // solver runs issued
  nlohmann::json summary;
};

// Runs every lattice point for base.repeats repeats. Repeat r uses the same
// initialization and solver seed at every point. Per-run errors are recorded,
// not thrown.
GridResult grid_search(const ExperimentConfig& base, const nlohmann::json& grid);
inline GridResult grid_search(const ExperimentConfig& base) { return grid_search(base, base.grid); }

}  // namespace zoba::harness
