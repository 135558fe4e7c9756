#pragma once

#include "fcswift/calibration.hpp"
#include "fcswift/scenario.hpp"
#include "oracles.hpp"

// Calibrated default scenario, shared across test files (calibration is
// deterministic, so caching it is safe).
inline const fcswift::ScenarioSpec& calibrated_default() {
  static fcswift::ScenarioSpec s =
      fcswift::calibrate_scenario(fcswift::load_scenario(oracles::scenario_path())).scenario;
  return s;
}
