#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcswift/experiments.hpp"
#include "fixture.hpp"

using namespace fcswift;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("fcswift_test_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

bool all_pass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

const CheckResult* find_check(const std::vector<CheckResult>& checks, const std::string& name) {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("shipped default scenario passes every validation check") {
  ScenarioSpec s = load_scenario(oracles::scenario_path());
  auto checks = validate_scenario(s);
  for (const auto& c : checks) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.pass);
  }
  REQUIRE(all_pass(checks));
  // and so does the calibrated version
  REQUIRE(all_pass(validate_scenario(calibrated_default())));
}

TEST_CASE("broken invariants are reported by name") {
  ScenarioSpec s = load_scenario(oracles::scenario_path());
  SECTION("frequency conservation") {
    s.quartet.lambda_q_nm = 1510.0;
    auto checks = validate_scenario(s);
    auto c = find_check(checks, "quartet.frequency_conservation");
    REQUIRE(c != nullptr);
    REQUIRE_FALSE(c->pass);
  }
  SECTION("coupling efficiency range") {
    s.cavity.eta_in = 1.2;
    auto checks = validate_scenario(s);
    auto c = find_check(checks, "cavity.eta_in_range");
    REQUIRE(c != nullptr);
    REQUIRE_FALSE(c->pass);
  }
  SECTION("timing consistency") {
    s.cavity.residual_mismatch_ps = 10.0;
    auto checks = validate_scenario(s);
    auto c = find_check(checks, "cavity.mismatch_consistent");
    REQUIRE(c != nullptr);
    REQUIRE_FALSE(c->pass);
  }
}

TEST_CASE("config parser diagnostics name the offending key") {
  auto parse_text = [](const std::string& text) {
    std::istringstream in(text);
    auto cfg = detail::parse_config_text(in);
    return scenario_from_config(cfg);
  };
  SECTION("unknown key") {
    std::string text = serialize_scenario(load_scenario(oracles::scenario_path()));
    text += "\n[fiber]\nbogus_key = 1\n";
    // reparse: duplicate section is fine, bogus key is not
    try {
      parse_text(text);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
  }
  SECTION("missing key") {
    try {
      parse_text("schema = 1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(std::string(e.what()).find("fiber.length_m") != std::string::npos);
    }
  }
  SECTION("non-numeric value") {
    std::string text = serialize_scenario(load_scenario(oracles::scenario_path()));
    auto pos = text.find("eta_in = ");
    text.replace(pos, std::string("eta_in = 0.55").size(), "eta_in = fast");
    try {
      parse_text(text);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      REQUIRE(std::string(e.what()).find("eta_in") != std::string::npos);
    }
  }
  SECTION("nonexistent file") { REQUIRE_THROWS_AS(load_scenario("/nope/missing.scenario"), ConfigError); }
}

TEST_CASE("serialize then parse is the identity") {
  const ScenarioSpec& s = calibrated_default();
  std::string text = serialize_scenario(s);
  std::istringstream in(text);
  auto cfg = detail::parse_config_text(in);
  ScenarioSpec t = scenario_from_config(cfg);
  REQUIRE(serialize_scenario(t) == text);
  REQUIRE(scenario_hash(t) == scenario_hash(s));
}

TEST_CASE("scenario hash tracks content") {
  ScenarioSpec s = calibrated_default();
  std::uint64_t h = scenario_hash(s);
  REQUIRE(h == scenario_hash(s));
  ScenarioSpec t = s;
  t.cavity.eta_in = 0.56;
  REQUIRE(scenario_hash(t) != h);
}

TEST_CASE("calibration is a fixed point") {
  ScenarioSpec once = calibrated_default();
  ScenarioSpec twice = calibrate_scenario(once).scenario;
  REQUIRE(twice.fiber.gamma_per_w_m == Catch::Approx(once.fiber.gamma_per_w_m).epsilon(1e-9));
  REQUIRE(twice.fiber.beta3_ps3_per_m == Catch::Approx(once.fiber.beta3_ps3_per_m).epsilon(1e-12));
  REQUIRE(twice.fiber.lambda_zd_nm == Catch::Approx(once.fiber.lambda_zd_nm).epsilon(1e-12));
  REQUIRE(twice.control.duration_fwhm_ps ==
          Catch::Approx(once.control.duration_fwhm_ps).epsilon(1e-9));
  REQUIRE(twice.filter.order == Catch::Approx(once.filter.order).epsilon(1e-9));
  REQUIRE(twice.cal.overlap_prefactor ==
          Catch::Approx(once.cal.overlap_prefactor).epsilon(1e-9));
  REQUIRE(twice.cal.xpm_power_exponent ==
          Catch::Approx(once.cal.xpm_power_exponent).epsilon(1e-6));
  REQUIRE(twice.source.pair_prob_per_pulse ==
          Catch::Approx(once.source.pair_prob_per_pulse).epsilon(1e-9));
}

TEST_CASE("stiffening the dispersion anchor shortens the fitted lifetime") {
  ScenarioSpec base = load_scenario(oracles::scenario_path());
  ScenarioSpec hard = base;
  hard.anchors.gdd_ps2_per_rt *= 1.5;
  ScenarioSpec a = calibrate_scenario(base).scenario;
  ScenarioSpec b = calibrate_scenario(hard).scenario;
  auto tau = [](const ScenarioSpec& s) {
    MemoryModel m = make_memory_model(s);
    return fit_decay_lifetime(decay_curve(m, standard_decay_grid()),
                              static_cast<double>(s.mc.n_trials))
        .tau_round_trips;
  };
  REQUIRE(tau(b) < tau(a));
}

TEST_CASE("an unreachable anchor fails calibration naming the anchor") {
  ScenarioSpec s = load_scenario(oracles::scenario_path());
  s.noise.noise_mean_per_shot = 5e-2;  // background too bright for g2 = 180
  try {
    calibrate_scenario(s);
    FAIL("expected CalibrationFailure");
  } catch (const CalibrationFailure& e) {
    REQUIRE(std::string(e.what()).find("g2_input") != std::string::npos);
  }
}

TEST_CASE("experiments write byte-identical files for identical config and seed") {
  ScenarioSpec raw = load_scenario(oracles::scenario_path());
  RunOptions opt;
  auto d1 = temp_dir("repro1");
  auto d2 = temp_dir("repro2");
  opt.out_dir = d1.string();
  REQUIRE(run_experiment("decay", raw, opt));
  opt.out_dir = d2.string();
  REQUIRE(run_experiment("decay", raw, opt));
  REQUIRE(slurp(d1 / "decay.csv") == slurp(d2 / "decay.csv"));
  REQUIRE(slurp(d1 / "decay_fit.txt") == slurp(d2 / "decay_fit.txt"));
  REQUIRE_FALSE(slurp(d1 / "decay.csv").empty());
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("unknown experiment names are rejected") {
  ScenarioSpec raw = load_scenario(oracles::scenario_path());
  RunOptions opt;
  opt.out_dir = temp_dir("unknown").string();
  REQUIRE_FALSE(run_experiment("warp-drive", raw, opt));
  std::filesystem::remove_all(opt.out_dir);
}

TEST_CASE("seed and trial overrides flow into the outputs") {
  ScenarioSpec raw = load_scenario(oracles::scenario_path());
  auto d = temp_dir("override");
  RunOptions opt;
  opt.out_dir = d.string();
  opt.seed = 99;
  REQUIRE(run_experiment("g2-scan", raw, opt));
  std::string with_seed = slurp(d / "g2_scan.csv");
  REQUIRE(with_seed.find("seed=99") != std::string::npos);

  // fewer trials means larger statistical error bars on every point
  opt.trials = 50000;
  REQUIRE(run_experiment("g2-scan", raw, opt));
  std::string with_fewer = slurp(d / "g2_scan.csv");
  REQUIRE(with_fewer != with_seed);

  opt.trials = 0;
  REQUIRE_THROWS_AS(run_experiment("g2-scan", raw, opt), ConfigError);
  std::filesystem::remove_all(d);
}

TEST_CASE("hand-edited calibrated scenarios are caught by validation") {
  ScenarioSpec s = calibrated_default();
  s.cal.overlap_prefactor = 1.7;
  auto checks = validate_scenario(s);
  auto c = find_check(checks, "calibration.prefactor_range");
  REQUIRE(c != nullptr);
  REQUIRE_FALSE(c->pass);
}

TEST_CASE("every experiment writes its documented columns") {
  const ScenarioSpec& calibrated = calibrated_default();
  auto d = temp_dir("columns");
  RunOptions opt;
  opt.out_dir = d.string();
  struct Expect {
    const char* name;
    const char* file;
    const char* header;
  } expected[] = {
      {"decay", "decay.csv", "storage_us,round_trips,retrieval_prob,noise_prob,accidental_prob"},
      {"g2-scan", "g2_scan.csv", "storage_us,g2,g2_sigma,nonclassical_flag"},
      {"power-sweep", "power_sweep.csv", "energy_nj,memory_efficiency"},
      {"delay-scan", "delay_scan.csv", "delay_ps,retrieval_prob"},
      {"ringdown", "ringdown.csv", "round_trip,storage_us,survival"},
      {"spectrum", "spectrum.csv",
       "stage,fwhm_ghz,measured_fwhm_ghz,deconvolved_fwhm_ghz,filter_transmission"},
  };
  for (const auto& e : expected) {
    REQUIRE(run_experiment(e.name, calibrated, opt));
    std::string text = slurp(d / e.file);
    INFO(e.name);
    REQUIRE(text.find(std::string(e.header) + "\n") != std::string::npos);
    REQUIRE(std::filesystem::exists(d / (std::string(e.file, strlen(e.file) - 4) + "_fit.txt")));
  }
  std::filesystem::remove_all(d);
}

TEST_CASE("output files carry the schema, scenario hash and seed header") {
  ScenarioSpec raw = load_scenario(oracles::scenario_path());
  RunOptions opt;
  auto d = temp_dir("header");
  opt.out_dir = d.string();
  REQUIRE(run_experiment("spectrum", raw, opt));
  std::string text = slurp(d / "spectrum.csv");
  REQUIRE(text.rfind("# schema=1 scenario=", 0) == 0);
  REQUIRE(text.find("seed=") != std::string::npos);
  REQUIRE(text.find("stage,fwhm_ghz") != std::string::npos);
  std::filesystem::remove_all(d);
}
