#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fcswift/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitUsageError = 2;
constexpr int kExitCalibrationFailure = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fcswift: fiber-cavity frequency-translation memory simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::uint64_t round_trips = 10;
  bool no_dispersion = false;
  bool gate_spdc = false;
  bool uncorrected = false;

  const char* experiments[] = {"ringdown", "decay",    "power-sweep", "g2-scan",
                               "spectrum", "delay-scan", "calibrate",  "validate"};
  for (const char* name : experiments) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario configuration file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the Monte-Carlo seed");
    sub->add_option("--trials", trials, "override the Monte-Carlo trial count");
    sub->add_option("--round-trips", round_trips, "storage depth (delay-scan)");
    sub->add_flag("--no-dispersion", no_dispersion, "disable storage dispersion");
    sub->add_flag("--gate-spdc", gate_spdc, "gate the pair source outside the write bin");
    sub->add_flag("--uncorrected-mismatch", uncorrected,
                  "leave the cavity/laser timing mismatch uncompensated");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsageError;
  }

  std::string name = app.get_subcommands().front()->get_name();

  try {
    fcswift::ScenarioSpec raw = fcswift::load_scenario(config_path);

    if (name == "validate") {
      auto checks = fcswift::validate_scenario(raw);
      bool all_ok = true;
      for (const auto& c : checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  (" << c.detail << ")\n";
        all_ok = all_ok && c.pass;
      }
      std::cout << (all_ok ? "all checks passed\n" : "configuration invalid\n");
      return all_ok ? kExitOk : kExitConfigError;
    }

    fcswift::RunOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.trials = trials;
    opt.round_trips = round_trips;
    opt.no_dispersion = no_dispersion;
    opt.gate_spdc = gate_spdc;
    opt.uncorrected_mismatch = uncorrected;

    if (!fcswift::run_experiment(name, raw, opt)) {
      std::cerr << "unknown experiment '" << name << "'\n";
      return kExitUsageError;
    }
    std::cout << name << ": wrote results to " << out_dir << "\n";
    return kExitOk;
  } catch (const fcswift::CalibrationFailure& e) {
    std::cerr << "calibration failure: " << e.what() << "\n";
    return kExitCalibrationFailure;
  } catch (const fcswift::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
