#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcswift/cavity.hpp"
#include "fcswift/stats.hpp"

namespace fcswift {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct McSpec {
  std::uint64_t n_trials = 5000000;
  std::uint64_t seed = 20260811;
};

// Measured constants the calibration pins the free model parameters to.
struct AnchorSpec {
  double gdd_ps2_per_rt = 0.31;
  double input_fwhm_ghz = 81.0;
  double stored_fwhm_ghz = 130.0;
  double retrieved_fwhm_ghz = 275.0;
  double filter_blocked_fraction = 0.30;
  double peak_memory_efficiency = 0.109;
  double peak_energy_nj = 2.0;
  std::uint64_t efficiency_round_trips = 10;
  double decay_round_trips = 32.8;
  double delay_scan_fwhm_ps = 13.6;
  double g2_input = 180.0;
  double monochromator_resolution_ghz = 100.0;
};

struct CalibrationSpec {
  bool calibrated = false;
  double xpm_write_factor = 130.0 / 81.0;
  double xpm_read_factor = 275.0 / 130.0;
  double xpm_reference_peak_power_w = 38.0;
  double xpm_power_exponent = 1.0;
  double overlap_prefactor = 1.0;
};

struct ScenarioSpec {
  int schema = 1;
  FiberSpec fiber;
  WavelengthQuartet quartet;
  CavitySpec cavity;
  ControlSpec control;  // write and read passes share energy and duration
  FilterSpec filter;
  SourceSpec source;
  NoiseSpec noise;
  double input_fwhm_ghz = 81.0;
  McSpec mc;
  AnchorSpec anchors;
  CalibrationSpec cal;
};

inline MemoryModel make_memory_model(const ScenarioSpec& s) {
  MemoryModel m;
  m.fiber = s.fiber;
  m.quartet = s.quartet;
  m.cavity = s.cavity;
  m.write_control = s.control;
  m.read_control = s.control;
  m.filter = s.filter;
  m.xpm = {s.cal.xpm_write_factor, s.cal.xpm_read_factor, s.cal.xpm_reference_peak_power_w,
           s.cal.xpm_power_exponent};
  m.overlap_prefactor = s.cal.overlap_prefactor;
  m.input_fwhm_ghz = s.input_fwhm_ghz;
  m.input_duration_fwhm_ps = transform_limited_fwhm_ps(s.input_fwhm_ghz);
  return m;
}

namespace detail {

struct ConfigMap {
  std::map<std::string, std::string> values;  // "section.key" -> raw text
  std::set<std::string> consumed;

  const std::string& raw(const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing required key '" + key + "'");
    consumed.insert(key);
    return it->second;
  }

  double number(const std::string& key) {
    const std::string& s = raw(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw ConfigError("key '" + key + "' has non-numeric value '" + s + "'");
    return v;
  }

  std::uint64_t integer(const std::string& key) {
    double v = number(key);
    if (v < 0 || v != static_cast<std::uint64_t>(v))
      throw ConfigError("key '" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  bool boolean(const std::string& key) {
    const std::string& s = raw(key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("key '" + key + "' must be true or false, got '" + s + "'");
  }
};

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config_text(std::istream& in) {
  ConfigMap cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    std::string full = section.empty() ? key : section + "." + key;
    if (cfg.values.count(full))
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + full + "'");
    cfg.values[full] = value;
  }
  return cfg;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline ScenarioSpec scenario_from_config(detail::ConfigMap& c) {
  ScenarioSpec s;
  s.schema = static_cast<int>(c.integer("schema"));
  if (s.schema != 1)
    throw ConfigError("unsupported schema version " + std::to_string(s.schema));

  s.fiber.length_m = c.number("fiber.length_m");
  s.fiber.gamma_per_w_m = c.number("fiber.gamma_per_w_m");
  s.fiber.lambda_zd_nm = c.number("fiber.lambda_zd_nm");
  s.fiber.beta3_ps3_per_m = c.number("fiber.beta3_ps3_per_m");
  s.fiber.attenuation_db_per_km = c.number("fiber.attenuation_db_per_km");

  s.quartet.lambda_s_nm = c.number("quartet.lambda_s_nm");
  s.quartet.lambda_t_nm = c.number("quartet.lambda_t_nm");
  s.quartet.lambda_p_nm = c.number("quartet.lambda_p_nm");
  s.quartet.lambda_q_nm = c.number("quartet.lambda_q_nm");

  s.cavity.round_trip_ns = c.number("cavity.round_trip_ns");
  s.cavity.laser_period_ns = c.number("cavity.laser_period_ns");
  s.cavity.loss_per_rt_db = c.number("cavity.loss_per_rt_db");
  s.cavity.eta_in = c.number("cavity.eta_in");
  s.cavity.residual_mismatch_ps = c.number("cavity.residual_mismatch_ps");
  s.cavity.mismatch_corrected = c.boolean("cavity.mismatch_corrected");

  s.control.total_energy_nj = c.number("control.total_energy_nj");
  s.control.duration_fwhm_ps = c.number("control.duration_fwhm_ps");

  s.filter.center_nm = c.number("filter.center_nm");
  s.filter.fwhm_ghz = c.number("filter.fwhm_ghz");
  s.filter.order = c.number("filter.order");

  s.source.pair_prob_per_pulse = c.number("source.pair_prob_per_pulse");
  s.source.herald_efficiency = c.number("source.herald_efficiency");
  s.source.signal_path_efficiency = c.number("source.signal_path_efficiency");
  s.source.rep_rate_hz = c.number("source.rep_rate_hz");
  s.source.trial_rate_hz = c.number("source.trial_rate_hz");
  s.source.spdc_gated = c.boolean("source.spdc_gated");

  s.noise.noise_mean_per_shot = c.number("noise.noise_mean_per_shot");
  s.noise.dark_count_prob = c.number("noise.dark_count_prob");

  s.input_fwhm_ghz = c.number("signal.input_fwhm_ghz");

  s.mc.n_trials = c.integer("mc.n_trials");
  s.mc.seed = c.integer("mc.seed");

  s.anchors.gdd_ps2_per_rt = c.number("anchors.gdd_ps2_per_rt");
  s.anchors.input_fwhm_ghz = c.number("anchors.input_fwhm_ghz");
  s.anchors.stored_fwhm_ghz = c.number("anchors.stored_fwhm_ghz");
  s.anchors.retrieved_fwhm_ghz = c.number("anchors.retrieved_fwhm_ghz");
  s.anchors.filter_blocked_fraction = c.number("anchors.filter_blocked_fraction");
  s.anchors.peak_memory_efficiency = c.number("anchors.peak_memory_efficiency");
  s.anchors.peak_energy_nj = c.number("anchors.peak_energy_nj");
  s.anchors.efficiency_round_trips = c.integer("anchors.efficiency_round_trips");
  s.anchors.decay_round_trips = c.number("anchors.decay_round_trips");
  s.anchors.delay_scan_fwhm_ps = c.number("anchors.delay_scan_fwhm_ps");
  s.anchors.g2_input = c.number("anchors.g2_input");
  s.anchors.monochromator_resolution_ghz = c.number("anchors.monochromator_resolution_ghz");

  s.cal.calibrated = c.boolean("calibration.calibrated");
  if (s.cal.calibrated) {
    s.cal.xpm_write_factor = c.number("calibration.xpm_write_factor");
    s.cal.xpm_read_factor = c.number("calibration.xpm_read_factor");
    s.cal.xpm_reference_peak_power_w = c.number("calibration.xpm_reference_peak_power_w");
    s.cal.xpm_power_exponent = c.number("calibration.xpm_power_exponent");
    s.cal.overlap_prefactor = c.number("calibration.overlap_prefactor");
  }

  for (const auto& [key, value] : c.values)
    if (!c.consumed.count(key)) throw ConfigError("unknown key '" + key + "'");
  return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  auto cfg = detail::parse_config_text(in);
  try {
    return scenario_from_config(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::string serialize_scenario(const ScenarioSpec& s) {
  using detail::fmt;
  std::ostringstream o;
  o << "schema = " << s.schema << "\n\n";
  o << "[fiber]\n";
  o << "length_m = " << fmt(s.fiber.length_m) << "\n";
  o << "gamma_per_w_m = " << fmt(s.fiber.gamma_per_w_m) << "\n";
  o << "lambda_zd_nm = " << fmt(s.fiber.lambda_zd_nm) << "\n";
  o << "beta3_ps3_per_m = " << fmt(s.fiber.beta3_ps3_per_m) << "\n";
  o << "attenuation_db_per_km = " << fmt(s.fiber.attenuation_db_per_km) << "\n\n";
  o << "[quartet]\n";
  o << "lambda_s_nm = " << fmt(s.quartet.lambda_s_nm) << "\n";
  o << "lambda_t_nm = " << fmt(s.quartet.lambda_t_nm) << "\n";
  o << "lambda_p_nm = " << fmt(s.quartet.lambda_p_nm) << "\n";
  o << "lambda_q_nm = " << fmt(s.quartet.lambda_q_nm) << "\n\n";
  o << "[cavity]\n";
  o << "round_trip_ns = " << fmt(s.cavity.round_trip_ns) << "\n";
  o << "laser_period_ns = " << fmt(s.cavity.laser_period_ns) << "\n";
  o << "loss_per_rt_db = " << fmt(s.cavity.loss_per_rt_db) << "\n";
  o << "eta_in = " << fmt(s.cavity.eta_in) << "\n";
  o << "residual_mismatch_ps = " << fmt(s.cavity.residual_mismatch_ps) << "\n";
  o << "mismatch_corrected = " << (s.cavity.mismatch_corrected ? "true" : "false") << "\n\n";
  o << "[control]\n";
  o << "total_energy_nj = " << fmt(s.control.total_energy_nj) << "\n";
  o << "duration_fwhm_ps = " << fmt(s.control.duration_fwhm_ps) << "\n\n";
  o << "[filter]\n";
  o << "center_nm = " << fmt(s.filter.center_nm) << "\n";
  o << "fwhm_ghz = " << fmt(s.filter.fwhm_ghz) << "\n";
  o << "order = " << fmt(s.filter.order) << "\n\n";
  o << "[source]\n";
  o << "pair_prob_per_pulse = " << fmt(s.source.pair_prob_per_pulse) << "\n";
  o << "herald_efficiency = " << fmt(s.source.herald_efficiency) << "\n";
  o << "signal_path_efficiency = " << fmt(s.source.signal_path_efficiency) << "\n";
  o << "rep_rate_hz = " << fmt(s.source.rep_rate_hz) << "\n";
  o << "trial_rate_hz = " << fmt(s.source.trial_rate_hz) << "\n";
  o << "spdc_gated = " << (s.source.spdc_gated ? "true" : "false") << "\n\n";
  o << "[noise]\n";
  o << "noise_mean_per_shot = " << fmt(s.noise.noise_mean_per_shot) << "\n";
  o << "dark_count_prob = " << fmt(s.noise.dark_count_prob) << "\n\n";
  o << "[signal]\n";
  o << "input_fwhm_ghz = " << fmt(s.input_fwhm_ghz) << "\n\n";
  o << "[mc]\n";
  o << "n_trials = " << s.mc.n_trials << "\n";
  o << "seed = " << s.mc.seed << "\n\n";
  o << "[anchors]\n";
  o << "gdd_ps2_per_rt = " << fmt(s.anchors.gdd_ps2_per_rt) << "\n";
  o << "input_fwhm_ghz = " << fmt(s.anchors.input_fwhm_ghz) << "\n";
  o << "stored_fwhm_ghz = " << fmt(s.anchors.stored_fwhm_ghz) << "\n";
  o << "retrieved_fwhm_ghz = " << fmt(s.anchors.retrieved_fwhm_ghz) << "\n";
  o << "filter_blocked_fraction = " << fmt(s.anchors.filter_blocked_fraction) << "\n";
  o << "peak_memory_efficiency = " << fmt(s.anchors.peak_memory_efficiency) << "\n";
  o << "peak_energy_nj = " << fmt(s.anchors.peak_energy_nj) << "\n";
  o << "efficiency_round_trips = " << s.anchors.efficiency_round_trips << "\n";
  o << "decay_round_trips = " << fmt(s.anchors.decay_round_trips) << "\n";
  o << "delay_scan_fwhm_ps = " << fmt(s.anchors.delay_scan_fwhm_ps) << "\n";
  o << "g2_input = " << fmt(s.anchors.g2_input) << "\n";
  o << "monochromator_resolution_ghz = " << fmt(s.anchors.monochromator_resolution_ghz) << "\n\n";
  o << "[calibration]\n";
  o << "calibrated = " << (s.cal.calibrated ? "true" : "false") << "\n";
  if (s.cal.calibrated) {
    o << "xpm_write_factor = " << fmt(s.cal.xpm_write_factor) << "\n";
    o << "xpm_read_factor = " << fmt(s.cal.xpm_read_factor) << "\n";
    o << "xpm_reference_peak_power_w = " << fmt(s.cal.xpm_reference_peak_power_w) << "\n";
    o << "xpm_power_exponent = " << fmt(s.cal.xpm_power_exponent) << "\n";
    o << "overlap_prefactor = " << fmt(s.cal.overlap_prefactor) << "\n";
  }
  return o.str();
}

inline void save_scenario(const ScenarioSpec& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file '" + path + "'");
  out << serialize_scenario(s);
}

// FNV-1a over the canonical serialization; stamped into every output file.
inline std::uint64_t scenario_hash(const ScenarioSpec& s) {
  std::string text = serialize_scenario(s);
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Every type invariant, one line per check.
inline std::vector<CheckResult> validate_scenario(const ScenarioSpec& s) {
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    out.push_back({name, ok, detail});
  };
  auto describe = [](double v) { return detail::fmt(v); };

  check("fiber.length_positive", s.fiber.length_m > 0, describe(s.fiber.length_m));
  check("fiber.gamma_positive", s.fiber.gamma_per_w_m > 0, describe(s.fiber.gamma_per_w_m));
  check("fiber.beta3_nonzero", s.fiber.beta3_ps3_per_m != 0, describe(s.fiber.beta3_ps3_per_m));
  check("fiber.attenuation_nonnegative", s.fiber.attenuation_db_per_km >= 0,
        describe(s.fiber.attenuation_db_per_km));
  check("fiber.zdw_between_bands",
        s.fiber.lambda_zd_nm > s.quartet.lambda_t_nm && s.fiber.lambda_zd_nm < s.quartet.lambda_q_nm,
        describe(s.fiber.lambda_zd_nm));
  check("fiber.attenuation_within_lumped_loss",
        s.fiber.attenuation_db_per_km * 2.0 * s.fiber.length_m / 1000.0 <= s.cavity.loss_per_rt_db,
        "fiber share of the per-cycle loss");

  double mism = s.quartet.frequency_mismatch_ghz();
  check("quartet.frequency_conservation", std::abs(mism) < 1.0,
        "|(w_q-w_p)-(w_s-w_t)| = " + describe(std::abs(mism)) + " GHz");

  check("cavity.round_trip_positive", s.cavity.round_trip_ns > 0, describe(s.cavity.round_trip_ns));
  check("cavity.eta_in_range", s.cavity.eta_in > 0 && s.cavity.eta_in <= 1,
        describe(s.cavity.eta_in));
  check("cavity.loss_nonnegative", s.cavity.loss_per_rt_db >= 0, describe(s.cavity.loss_per_rt_db));
  check("cavity.mismatch_consistent", s.cavity.mismatch_consistent(),
        "1000*(laser_period - round_trip) vs residual_mismatch_ps");

  check("control.energy_nonnegative", s.control.total_energy_nj >= 0,
        describe(s.control.total_energy_nj));
  check("control.duration_positive", s.control.duration_fwhm_ps > 0,
        describe(s.control.duration_fwhm_ps));

  check("filter.fwhm_positive", s.filter.fwhm_ghz > 0, describe(s.filter.fwhm_ghz));
  check("filter.order_at_least_one", s.filter.order >= 1, describe(s.filter.order));

  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  check("source.pair_prob_range", unit(s.source.pair_prob_per_pulse),
        describe(s.source.pair_prob_per_pulse));
  check("source.herald_efficiency_range", unit(s.source.herald_efficiency),
        describe(s.source.herald_efficiency));
  check("source.signal_path_range", unit(s.source.signal_path_efficiency),
        describe(s.source.signal_path_efficiency));
  check("source.rates_ordered", s.source.rep_rate_hz >= s.source.trial_rate_hz &&
                                    s.source.trial_rate_hz > 0,
        "rep_rate >= trial_rate > 0");

  check("noise.nonnegative", s.noise.noise_mean_per_shot >= 0 && s.noise.dark_count_prob >= 0,
        describe(s.noise.noise_mean_per_shot));
  check("signal.input_bandwidth_positive", s.input_fwhm_ghz > 0, describe(s.input_fwhm_ghz));
  check("mc.trials_positive", s.mc.n_trials >= 1, std::to_string(s.mc.n_trials));
  if (s.cal.calibrated) {
    check("calibration.prefactor_range",
          s.cal.overlap_prefactor > 0 && s.cal.overlap_prefactor <= 1,
          describe(s.cal.overlap_prefactor));
    check("calibration.xpm_factors_at_least_one",
          s.cal.xpm_write_factor >= 1 && s.cal.xpm_read_factor >= 1 &&
              s.cal.xpm_power_exponent > 0,
          describe(s.cal.xpm_write_factor));
  }
  return out;
}

}  // namespace fcswift
