#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fcswift/calibration.hpp"
#include "fcswift/scenario.hpp"

namespace fcswift {

struct RunOptions {
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::uint64_t round_trips = 10;  // delay-scan storage depth
  bool no_dispersion = false;
  bool gate_spdc = false;
  bool uncorrected_mismatch = false;
};

namespace detail {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const ScenarioSpec& s,
            const std::vector<std::string>& columns) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open output file " + path.string());
    char meta[96];
    std::snprintf(meta, sizeof(meta), "# schema=1 scenario=%016llx seed=%llu\n",
                  static_cast<unsigned long long>(scenario_hash(s)),
                  static_cast<unsigned long long>(s.mc.seed));
    out_ << meta;
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
  }

  void row(const std::vector<double>& values) {
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.9g", values[i]);
      out_ << buf << (i + 1 < values.size() ? "," : "\n");
    }
  }

  void text_row(const std::string& first, const std::vector<double>& values) {
    out_ << first;
    char buf[40];
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out_ << ',' << buf;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline std::string fmt_fit_line(const char* name, double value, double sigma) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-24s %.6g +- %.3g\n", name, value, sigma);
  return buf;
}

}  // namespace detail

// Scenario as actually run: calibration first, then the experiment switches.
inline ScenarioSpec prepare_scenario(const ScenarioSpec& raw, const RunOptions& opt) {
  ScenarioSpec s = ensure_calibrated(raw);
  if (opt.seed) s.mc.seed = *opt.seed;
  if (opt.trials) s.mc.n_trials = *opt.trials;
  if (s.mc.n_trials < 1) throw ConfigError("mc.n_trials must be >= 1");
  if (opt.gate_spdc) s.source.spdc_gated = true;
  if (opt.uncorrected_mismatch) s.cavity.mismatch_corrected = false;
  return s;
}

inline MemoryModel prepare_model(const ScenarioSpec& s, const RunOptions& opt) {
  MemoryModel m = make_memory_model(s);
  m.dispersion_enabled = !opt.no_dispersion;
  return m;
}

inline void run_decay(const ScenarioSpec& s, const RunOptions& opt) {
  MemoryModel m = prepare_model(s, opt);
  auto points = decay_curve(m, standard_decay_grid());
  double noise_prob = s.noise.noise_mean_per_shot;
  double uncorr = s.source.spdc_gated
                      ? 0.0
                      : s.source.pair_prob_per_pulse * s.source.signal_path_efficiency;
  double accidental = analytic_rates(s.source, s.noise, 1.0).p_herald * uncorr;

  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "decay.csv", s,
                        {"storage_us", "round_trips", "retrieval_prob", "noise_prob",
                         "accidental_prob"});
  for (const auto& p : points)
    csv.row({p.storage_us, static_cast<double>(p.round_trips), p.retrieval_probability,
             noise_prob, accidental});

  auto fit = fit_decay_lifetime(points, static_cast<double>(s.mc.n_trials));
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "decay_fit.txt");
  sum << "model: retrieval = A exp(-t / tau)\n";
  sum << detail::fmt_fit_line("A", fit.amplitude, fit.sigma_amplitude);
  sum << detail::fmt_fit_line("tau_us", fit.tau, fit.sigma_tau);
  sum << detail::fmt_fit_line("tau_round_trips", fit.tau_round_trips,
                              fit.sigma_tau / kRoundTripUs);
  sum << "converged: " << (fit.raw.converged ? "yes" : "no") << "\n";
  if (!s.cavity.mismatch_corrected) {
    char buf[112];
    std::snprintf(buf, sizeof(buf), "effective_lifetime_rt   %.4g (drift equals read window)\n",
                  mismatch_limited_lifetime_rt(m));
    sum << buf;
    std::snprintf(buf, sizeof(buf), "retrieval_1_over_e_rt   %.4g\n", one_over_e_crossing_rt(m));
    sum << buf;
  }
}

inline void run_ringdown(const ScenarioSpec& s, const RunOptions& opt) {
  auto survival = ring_down(s.cavity, 120);
  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "ringdown.csv", s,
                        {"round_trip", "storage_us", "survival"});
  std::vector<double> t, y, e;
  for (std::size_t i = 0; i < survival.size(); ++i) {
    double n = static_cast<double>(i + 1);
    double tus = storage_time_us(s.cavity, i + 1);
    csv.row({n, tus, survival[i]});
    t.push_back(tus);
    y.push_back(survival[i]);
    e.push_back(probability_sigma(survival[i], static_cast<double>(s.mc.n_trials)));
  }
  auto fit = fit_exponential_decay(t, y, e);
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "ringdown_fit.txt");
  sum << "model: survival = A exp(-t / tau)\n";
  sum << detail::fmt_fit_line("A", fit.amplitude, fit.sigma_amplitude);
  sum << detail::fmt_fit_line("tau_us", fit.tau, fit.sigma_tau);
  sum << detail::fmt_fit_line("tau_round_trips", fit.tau_round_trips,
                              fit.sigma_tau / kRoundTripUs);
}

inline void run_power_sweep(const ScenarioSpec& s, const RunOptions& opt) {
  auto energies = standard_sweep_energies_nj();
  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "power_sweep.csv", s,
                        {"energy_nj", "memory_efficiency"});
  std::vector<double> p, eta, err;
  double best_e = 0.0, best = -1.0;
  for (double e : energies) {
    double v = internal_memory_efficiency(s, e, s.anchors.efficiency_round_trips,
                                          !opt.no_dispersion);
    csv.row({e, v});
    if (v > best) { best = v; best_e = e; }
    if (e <= 2.5) {
      p.push_back(e);
      eta.push_back(v);
      err.push_back(probability_sigma(v, static_cast<double>(s.mc.n_trials)));
    }
  }
  auto fit = fit_sin4(p, eta, err);
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "power_sweep_fit.txt");
  sum << "model: eta = A sin^4(b P), fit window P <= 2.5 nJ\n";
  sum << detail::fmt_fit_line("A", fit.amplitude, fit.sigma_amplitude);
  sum << detail::fmt_fit_line("b_per_nj", fit.scale_b, fit.sigma_scale_b);
  sum << detail::fmt_fit_line("peak_energy_nj", fit.peak_energy,
                              fit.sigma_scale_b * fit.peak_energy / fit.scale_b);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "grid_max                %.6g at %.3g nJ\n", best, best_e);
  sum << buf;
}

inline void run_g2_scan(const ScenarioSpec& s, const RunOptions& opt) {
  MemoryModel m = prepare_model(s, opt);
  auto points = g2_vs_storage(m, s.source, s.noise, standard_g2_grid(),
                              static_cast<double>(s.mc.n_trials));
  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "g2_scan.csv", s,
                        {"storage_us", "g2", "g2_sigma", "nonclassical_flag"});
  for (const auto& p : points)
    csv.row({p.storage_us, p.g2, p.sigma, p.nonclassical ? 1.0 : 0.0});

  // one-sigma crossing of the classical bound, interpolated in round trips
  double crossing = -1.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    double prev = points[i - 1].g2 - points[i - 1].sigma - 2.0;
    double cur = points[i].g2 - points[i].sigma - 2.0;
    if (prev > 0.0 && cur <= 0.0) {
      double f = prev / (prev - cur);
      crossing = static_cast<double>(points[i - 1].round_trips) +
                 f * static_cast<double>(points[i].round_trips - points[i - 1].round_trips);
      break;
    }
  }
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "g2_scan_fit.txt");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "g2_input                %.6g +- %.3g\n", points.front().g2,
                points.front().sigma);
  sum << buf;
  if (crossing >= 0.0) {
    std::snprintf(buf, sizeof(buf), "classical_crossing_rt   %.4g (one-sigma)\n", crossing);
    sum << buf;
  } else {
    sum << "classical_crossing_rt   none within scan\n";
  }
}

inline void run_spectrum(const ScenarioSpec& s, const RunOptions& opt) {
  MemoryModel m = prepare_model(s, opt);
  StoredPhotonState st = write(m);
  ReadResult rd = read(st, m, 0.0);
  double res = s.anchors.monochromator_resolution_ghz;

  struct Stage {
    const char* name;
    double fwhm;
  } stages[] = {{"input", m.input_fwhm_ghz},
                {"stored", st.bandwidth_ghz},
                {"retrieved", rd.retrieved_bandwidth_ghz}};

  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "spectrum.csv", s,
                        {"stage", "fwhm_ghz", "measured_fwhm_ghz", "deconvolved_fwhm_ghz",
                         "filter_transmission"});
  for (const auto& stage : stages) {
    double measured = std::sqrt(stage.fwhm * stage.fwhm + res * res);
    double deconv = deconvolve_gaussian_fwhm(measured, res);
    csv.text_row(stage.name,
                 {stage.fwhm, measured, deconv, filter_transmission(stage.fwhm, m.filter)});
  }
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "spectrum_fit.txt");
  char buf[128];
  std::snprintf(buf, sizeof(buf), "retrieved_blocked       %.4g (filter order %.4g)\n",
                1.0 - filter_transmission(rd.retrieved_bandwidth_ghz, m.filter),
                m.filter.order);
  sum << buf;
  std::snprintf(buf, sizeof(buf), "monochromator_res_ghz   %.4g\n", res);
  sum << buf;
}

inline void run_delay_scan(const ScenarioSpec& s, const RunOptions& opt) {
  MemoryModel m = prepare_model(s, opt);
  StoredPhotonState st = write(m);
  for (std::uint64_t i = 0; i < opt.round_trips; ++i) st = advance_round_trip(st, m);
  double center = st.timing_offset_ps;
  std::vector<double> delays;
  for (int k = -80; k <= 80; ++k) delays.push_back(center + 0.5 * k);
  auto scan = delay_scan(m, opt.round_trips, delays);

  detail::CsvWriter csv(std::filesystem::path(opt.out_dir) / "delay_scan.csv", s,
                        {"delay_ps", "retrieval_prob"});
  std::vector<double> x, y, e;
  for (const auto& [d, p] : scan) {
    csv.row({d, p});
    x.push_back(d);
    y.push_back(p);
    e.push_back(probability_sigma(p, static_cast<double>(s.mc.n_trials)));
  }
  auto fit = fit_gaussian(x, y, e);
  std::ofstream sum(std::filesystem::path(opt.out_dir) / "delay_scan_fit.txt");
  sum << "model: p = off + A exp(-4 ln2 (d - c)^2 / fwhm^2)\n";
  sum << detail::fmt_fit_line("fwhm_ps", fit.fwhm, fit.sigma_fwhm);
  sum << detail::fmt_fit_line("center_ps", fit.center, fit.sigma_center);
  sum << detail::fmt_fit_line("amplitude", fit.amplitude, fit.sigma_amplitude);
  sum << detail::fmt_fit_line("offset", fit.offset, fit.sigma_offset);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "round_trips             %llu\n",
                static_cast<unsigned long long>(opt.round_trips));
  sum << buf;
}

inline void run_calibrate(const ScenarioSpec& raw, const RunOptions& opt) {
  CalibrationResult result = calibrate_scenario(raw);
  save_scenario(result.scenario,
                (std::filesystem::path(opt.out_dir) / "calibrated.scenario").string());
  std::ofstream rep(std::filesystem::path(opt.out_dir) / "calibration_report.txt");
  rep << result.report.to_text();
}

// Dispatch by experiment name. Returns false for an unknown name (usage
// error at the CLI layer).
inline bool run_experiment(const std::string& name, const ScenarioSpec& raw,
                           const RunOptions& opt) {
  std::filesystem::create_directories(opt.out_dir);
  if (name == "calibrate") {
    run_calibrate(raw, opt);
    return true;
  }
  ScenarioSpec s = prepare_scenario(raw, opt);
  if (name == "decay") run_decay(s, opt);
  else if (name == "ringdown") run_ringdown(s, opt);
  else if (name == "power-sweep") run_power_sweep(s, opt);
  else if (name == "g2-scan") run_g2_scan(s, opt);
  else if (name == "spectrum") run_spectrum(s, opt);
  else if (name == "delay-scan") run_delay_scan(s, opt);
  else return false;
  return true;
}

}  // namespace fcswift
