#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcswift/fitting.hpp"
#include "fcswift/scenario.hpp"

namespace fcswift {

struct CalibrationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationEntry {
  std::string anchor;
  double target = 0.0;
  double achieved = 0.0;
  double tolerance = 0.0;
  bool within = false;
};

struct CalibrationReport {
  std::vector<CalibrationEntry> entries;

  std::string to_text() const {
    std::ostringstream o;
    o << "calibration report\n";
    for (const auto& e : entries) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "  %-28s target %-12.6g achieved %-12.6g tol %-10.4g %s\n",
                    e.anchor.c_str(), e.target, e.achieved, e.tolerance,
                    e.within ? "ok" : "VIOLATED");
      o << buf;
    }
    return o.str();
  }
};

namespace detail {

inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double tol, const char* what) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    throw CalibrationFailure(std::string("anchor unreachable: ") + what);
  for (int i = 0; i < 200 && hi - lo > tol; ++i) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

inline double golden_min(const std::function<double(double)>& f, double lo, double hi,
                         int iters = 90) {
  const double r = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// --- shared experiment protocol -------------------------------------------
// The decay experiment, its sampling grid, and its weighting are fixed here
// so the calibration and the runner always agree on what "the fitted
// lifetime" means.

inline std::vector<std::uint64_t> standard_decay_grid() {
  std::vector<std::uint64_t> n;
  for (std::uint64_t k = 1; k <= 100; k += 3) n.push_back(k);
  return n;
}

inline std::vector<double> standard_sweep_energies_nj() {
  std::vector<double> e;
  for (int k = 1; k <= 10; ++k) e.push_back(0.25 * k);
  return e;
}

inline std::vector<std::uint64_t> standard_g2_grid() {
  std::vector<std::uint64_t> n{0};
  for (std::uint64_t k = 5; k <= 100; k += 5) n.push_back(k);
  return n;
}

// Statistical uncertainty of a probability estimated from n_trials shots,
// floored at the one-count level so empty bins cannot dominate a fit.
inline double probability_sigma(double p, double n_trials) {
  double floor_p = 1.0 / n_trials;
  double pe = std::max(std::min(p, 1.0), floor_p);
  return std::sqrt(pe * (1.0 - pe) / n_trials) + 1e-300;
}

inline ExponentialFit fit_decay_lifetime(const std::vector<DecayPoint>& points,
                                         double n_trials) {
  std::vector<double> t, y, e;
  for (const auto& pt : points) {
    t.push_back(pt.storage_us);
    y.push_back(pt.retrieval_probability);
    e.push_back(probability_sigma(pt.retrieval_probability, n_trials));
  }
  return fit_exponential_decay(t, y, e);
}

// Retrieval at N = 0 (write then immediate read), the reference level for
// effective-lifetime crossings.
inline double immediate_retrieval(const MemoryModel& m) {
  return read(write(m), m, 0.0).probability;
}

// First storage depth at which retrieval falls below 1/e of the immediate
// value, walked one round trip at a time and interpolated between integer
// depths, in round trips.
inline double one_over_e_crossing_rt(const MemoryModel& m, std::uint64_t n_max = 400) {
  double p0 = immediate_retrieval(m);
  double target = p0 / std::exp(1.0);
  StoredPhotonState st = write(m);
  double prev_p = p0;
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    st = advance_round_trip(st, m);
    double delay = m.cavity.mismatch_corrected ? st.timing_offset_ps : 0.0;
    double p = read(st, m, delay).probability;
    if (p < target) {
      if (prev_p <= target || p <= 0.0) return static_cast<double>(n - 1);
      double f = (std::log(prev_p) - std::log(target)) / (std::log(prev_p) - std::log(p));
      return static_cast<double>(n - 1) + f;
    }
    prev_p = p;
  }
  return static_cast<double>(n_max);
}

// Storage depth at which the accumulated timing drift equals the read
// window width (the delay-scan FWHM at that depth): the uncorrected-
// mismatch effective lifetime. Solved as a fixed point of
// N = W(N) / |tau_r|; W grows slowly, so a few sweeps converge.
inline double mismatch_limited_lifetime_rt(const MemoryModel& m) {
  double drift = std::abs(m.cavity.residual_mismatch_ps);
  if (!(drift > 0.0)) throw std::invalid_argument("mismatch lifetime needs a nonzero drift");
  auto window_at = [&](std::uint64_t n) {
    StoredPhotonState st = write(m);
    for (std::uint64_t i = 0; i < n; ++i) st = advance_round_trip(st, m);
    double w = m.read_walkoff_ps();
    double ce2 = m.read_control.duration_fwhm_ps * m.read_control.duration_fwhm_ps + w * w;
    return std::sqrt(st.duration_fwhm_ps * st.duration_fwhm_ps + ce2);
  };
  double n = 1.0;
  for (int i = 0; i < 24; ++i)
    n = window_at(static_cast<std::uint64_t>(std::llround(n))) / drift;
  return n;
}

// Internal memory efficiency after n round trips at a given total control
// energy (coupling efficiency divided out).
inline double internal_memory_efficiency(const ScenarioSpec& s, double total_energy_nj,
                                         std::uint64_t n_round_trips,
                                         bool dispersion_enabled = true) {
  ScenarioSpec v = s;
  v.control.total_energy_nj = total_energy_nj;
  MemoryModel m = make_memory_model(v);
  m.dispersion_enabled = dispersion_enabled;
  StoredPhotonState st = write(m);
  for (std::uint64_t i = 0; i < n_round_trips; ++i) st = advance_round_trip(st, m);
  double delay = m.cavity.mismatch_corrected ? st.timing_offset_ps : 0.0;
  return read(st, m, delay).probability / m.cavity.eta_in;
}

// --- calibration ------------------------------------------------------------
// Pins every free model parameter to the anchors, in dependency order:
//   1. lambda_q from frequency conservation
//   2. effective zero-dispersion wavelength from phase matching
//   3. beta3 from the per-cycle group-delay dispersion
//   4. filter order from the blocked fraction of the retrieved spectrum
//   5. control duration from {delay-scan width, decay lifetime} (weighted
//      least squares), with gamma slaved to the efficiency-peak energy and
//      the XPM reference pinned to the calibration-point peak power
//   6. overlap prefactor from the peak memory efficiency
//   7. pair probability from the input-photon g2

struct CalibrationResult {
  ScenarioSpec scenario;
  CalibrationReport report;
};

inline CalibrationResult calibrate_scenario(const ScenarioSpec& base) {
  ScenarioSpec s = base;
  CalibrationReport rep;
  std::vector<std::string> violated;
  auto record = [&](const std::string& anchor, double target, double achieved, double tol) {
    bool ok = std::abs(achieved - target) <= tol;
    rep.entries.push_back({anchor, target, achieved, tol, ok});
    if (!ok) violated.push_back(anchor);
  };

  // 1. frequency conservation
  s.quartet = conserving_quartet(s.quartet.lambda_s_nm, s.quartet.lambda_t_nm,
                                 s.quartet.lambda_p_nm);
  record("quartet.conservation_ghz", 0.0, s.quartet.frequency_mismatch_ghz(), 1e-6);

  // 2. phase matching: shift the effective zero-dispersion wavelength until
  // the cubic model gives dbeta = 0 for the operating quartet.
  auto mismatch_at = [&](double zd) {
    FiberSpec f = s.fiber;
    f.lambda_zd_nm = zd;
    f.beta3_ps3_per_m = 1.0;  // sign carrier only; the root does not depend on beta3
    return phase_mismatch(f, s.quartet, 1e9);
  };
  s.fiber.lambda_zd_nm =
      detail::bisect(mismatch_at, s.quartet.lambda_t_nm + 20.0, s.quartet.lambda_q_nm - 20.0,
                     1e-9, "phase_matching (dbeta = 0)");

  // 3. beta3 from the measured per-cycle GDD at the stored wavelength
  s.fiber = calibrate_beta3(s.fiber, s.anchors.gdd_ps2_per_rt, s.quartet.lambda_t_nm);
  record("dispersion.gdd_ps2_per_rt", s.anchors.gdd_ps2_per_rt,
         gdd_per_round_trip_ps2(s.fiber, 2.0, s.quartet.lambda_t_nm),
         1e-9 * std::abs(s.anchors.gdd_ps2_per_rt));
  record("dispersion.delta_beta_per_m", 0.0, phase_mismatch(s.fiber, s.quartet), 1e-6);

  // 4. filter order: the retrieved spectrum must lose the blocked fraction
  double t_target = 1.0 - s.anchors.filter_blocked_fraction;
  auto trans_at_order = [&](double order) {
    FilterSpec f = s.filter;
    f.order = order;
    return filter_transmission(s.anchors.retrieved_fwhm_ghz, f) - t_target;
  };
  s.filter.order = detail::bisect(trans_at_order, 1.0, 60.0, 1e-10, "filter.blocked_fraction");
  record("filter.transmission_retrieved", t_target,
         filter_transmission(s.anchors.retrieved_fwhm_ghz, s.filter), 1e-6);

  // 5. control duration: weighted compromise between the delay-scan width
  // and the decay lifetime, each weighted by its quoted uncertainty.
  auto configured = [&](double duration_ps) {
    ScenarioSpec v = s;
    v.control.duration_fwhm_ps = duration_ps;
    v.control.total_energy_nj = v.anchors.peak_energy_nj;
    double peak_w = v.control.peak_power_w();
    v.fiber.gamma_per_w_m = kPi / (4.0 * peak_w * v.fiber.length_m);
    v.cal.xpm_write_factor = v.anchors.stored_fwhm_ghz / v.anchors.input_fwhm_ghz;
    v.cal.xpm_read_factor = v.anchors.retrieved_fwhm_ghz / v.anchors.stored_fwhm_ghz;
    v.cal.xpm_reference_peak_power_w = peak_w;
    v.cal.xpm_power_exponent = 1.0;
    v.cal.overlap_prefactor = 1.0;
    return v;
  };
  auto scan_fwhm_at = [&](const ScenarioSpec& v) {
    MemoryModel m = make_memory_model(v);
    StoredPhotonState st = advance_round_trip(write(m), m);
    double w = m.read_walkoff_ps();
    double ce2 = v.control.duration_fwhm_ps * v.control.duration_fwhm_ps + w * w;
    return std::sqrt(st.duration_fwhm_ps * st.duration_fwhm_ps + ce2);
  };
  auto decay_rt_at = [&](const ScenarioSpec& v) {
    MemoryModel m = make_memory_model(v);
    return fit_decay_lifetime(decay_curve(m, standard_decay_grid()),
                              static_cast<double>(v.mc.n_trials))
        .tau_round_trips;
  };
  const double sigma_scan = 0.3;  // quoted uncertainty of the delay-scan width
  const double sigma_decay = 0.15 * s.anchors.decay_round_trips;
  auto objective = [&](double duration_ps) {
    ScenarioSpec v = configured(duration_ps);
    double rs = (scan_fwhm_at(v) - s.anchors.delay_scan_fwhm_ps) / sigma_scan;
    double rd = (decay_rt_at(v) - s.anchors.decay_round_trips) / sigma_decay;
    return rs * rs + rd * rd;
  };
  double duration = detail::golden_min(objective, 6.0, 20.0);
  {
    ScenarioSpec v = configured(duration);
    s.fiber.gamma_per_w_m = v.fiber.gamma_per_w_m;
    s.control.duration_fwhm_ps = duration;
    s.cal.xpm_write_factor = v.cal.xpm_write_factor;
    s.cal.xpm_read_factor = v.cal.xpm_read_factor;
    s.cal.xpm_reference_peak_power_w = v.cal.xpm_reference_peak_power_w;
    s.cal.xpm_power_exponent = 1.0;
    s.cal.overlap_prefactor = 1.0;
    s.control.total_energy_nj = s.anchors.peak_energy_nj;
    record("delay_scan.fwhm_n1_ps", s.anchors.delay_scan_fwhm_ps, scan_fwhm_at(v),
           0.10 * s.anchors.delay_scan_fwhm_ps);
  }

  // 5b. XPM power-scaling exponent. Strict proportionality to the control
  // peak power couples the band-pass transmission to the sweep energy hard
  // enough to pull the efficiency maximum below the measured location, so
  // the exponent is lowered (a saturating law) until the sin^4 fit of the
  // standard sweep peaks at the anchor energy within half its tolerance.
  // None of the calibration-point anchors depend on it.
  auto fitted_peak_at = [&](double exponent) {
    ScenarioSpec v = s;
    v.cal.xpm_power_exponent = exponent;
    std::vector<double> p, eta, err;
    for (double e : standard_sweep_energies_nj()) {
      if (e > 2.5) continue;
      p.push_back(e);
      eta.push_back(internal_memory_efficiency(v, e, v.anchors.efficiency_round_trips));
      err.push_back(probability_sigma(eta.back(), static_cast<double>(v.mc.n_trials)));
    }
    return fit_sin4(p, eta, err).peak_energy;
  };
  {
    double peak_target = s.anchors.peak_energy_nj - 0.05;
    if (fitted_peak_at(1.0) >= peak_target) {
      s.cal.xpm_power_exponent = 1.0;
    } else {
      s.cal.xpm_power_exponent = detail::bisect(
          [&](double a) { return fitted_peak_at(a) - peak_target; }, 0.05, 1.0, 1e-6,
          "efficiency.peak_energy (xpm exponent)");
    }
    record("efficiency.fit_peak_energy_nj", s.anchors.peak_energy_nj,
           fitted_peak_at(s.cal.xpm_power_exponent), 0.1);
  }

  // spectra chain at the calibration point (exact by construction)
  {
    MemoryModel m = make_memory_model(s);
    StoredPhotonState st = write(m);
    record("spectra.stored_ghz", s.anchors.stored_fwhm_ghz, st.bandwidth_ghz, 1e-9);
    record("spectra.retrieved_ghz", s.anchors.retrieved_fwhm_ghz,
           read(st, m, 0.0).retrieved_bandwidth_ghz, 1e-9);
  }

  // 6. overlap prefactor from the peak internal efficiency after the
  // standard storage depth
  double eta_unit = internal_memory_efficiency(s, s.anchors.peak_energy_nj,
                                               s.anchors.efficiency_round_trips);
  if (!(eta_unit > 0.0))
    throw CalibrationFailure("anchor unreachable: peak_memory_efficiency (zero pipeline)");
  s.cal.overlap_prefactor = s.anchors.peak_memory_efficiency / eta_unit;
  if (s.cal.overlap_prefactor > 1.0)
    throw CalibrationFailure("anchor unreachable: peak_memory_efficiency (prefactor > 1)");
  record("efficiency.peak_at_anchor", s.anchors.peak_memory_efficiency,
         internal_memory_efficiency(s, s.anchors.peak_energy_nj,
                                    s.anchors.efficiency_round_trips),
         1e-9);
  {
    // the sweep grid must peak at the anchor energy
    double best_e = 0.0, best = -1.0;
    for (double e : standard_sweep_energies_nj()) {
      double v = internal_memory_efficiency(s, e, s.anchors.efficiency_round_trips);
      if (v > best) { best = v; best_e = e; }
    }
    record("efficiency.peak_energy_nj", s.anchors.peak_energy_nj, best_e, 0.1);
  }

  // decay lifetime with the final parameters
  {
    MemoryModel m = make_memory_model(s);
    double tau = fit_decay_lifetime(decay_curve(m, standard_decay_grid()),
                                    static_cast<double>(s.mc.n_trials))
                     .tau_round_trips;
    record("decay.lifetime_rt", s.anchors.decay_round_trips, tau,
           0.15 * s.anchors.decay_round_trips);
  }

  // 7. pair probability from the input-photon g2
  auto g2_at_mu = [&](double mu) {
    SourceSpec src = s.source;
    src.pair_prob_per_pulse = mu;
    return g2_analytic(analytic_rates(src, s.noise, 1.0), 1e12).value - s.anchors.g2_input;
  };
  s.source.pair_prob_per_pulse =
      detail::bisect(g2_at_mu, 1e-8, 0.05, 1e-14, "g2_input (pair probability)");
  record("stats.g2_input", s.anchors.g2_input,
         g2_analytic(analytic_rates(s.source, s.noise, 1.0), 1e12).value, 1e-5);

  s.cal.calibrated = true;

  if (!violated.empty()) {
    std::string msg = "calibration failed, violated anchors:";
    for (const auto& v : violated) msg += " " + v;
    throw CalibrationFailure(msg + "\n" + rep.to_text());
  }
  return {s, rep};
}

// Load a scenario and calibrate it unless the file already carries
// calibrated parameters.
inline ScenarioSpec ensure_calibrated(const ScenarioSpec& s) {
  if (s.cal.calibrated) return s;
  return calibrate_scenario(s).scenario;
}

}  // namespace fcswift
