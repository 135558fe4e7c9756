#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fcswift/bsfwm.hpp"
#include "fcswift/constants.hpp"
#include "fcswift/dispersion.hpp"

namespace fcswift {

struct CavitySpec {
  double round_trip_ns = 49.9354;     // operating cavity cycle, stretched onto the laser
  double laser_period_ns = 49.938;    // four laser periods
  double loss_per_rt_db = 0.08;       // lumped mirror + fiber loss per cycle
  double eta_in = 0.55;               // in-coupling efficiency
  double residual_mismatch_ps = 2.6;  // laser period minus cavity cycle
  bool mismatch_corrected = true;     // read delay tracks the drift when true

  void validate() const {
    if (!(round_trip_ns > 0.0)) throw std::invalid_argument("CavitySpec: round_trip must be > 0");
    if (!(eta_in > 0.0 && eta_in <= 1.0))
      throw std::invalid_argument("CavitySpec: eta_in must lie in (0, 1]");
    if (loss_per_rt_db < 0.0) throw std::invalid_argument("CavitySpec: loss must be >= 0");
  }

  // Survival multiplier per round trip.
  double survival_per_rt() const { return std::pow(10.0, -loss_per_rt_db / 10.0); }

  bool mismatch_consistent(double tol_ps = 0.05) const {
    return std::abs(1e3 * (laser_period_ns - round_trip_ns) - residual_mismatch_ps) < tol_ps;
  }
};

struct StoredPhotonState {
  double survival = 1.0;
  double duration_fwhm_ps = 0.0;
  double launch_duration_fwhm_ps = 0.0;  // duration when storage began
  double bandwidth_ghz = 0.0;
  double accumulated_gdd_ps2 = 0.0;
  double timing_offset_ps = 0.0;
  std::uint64_t round_trips = 0;
};

// Calibrated cross-phase-modulation broadening factors at the reference
// control peak power, with the power-scaling exponent of the excess factor.
struct XpmCalibration {
  double write_factor = 130.0 / 81.0;
  double read_factor = 275.0 / 130.0;
  double reference_peak_power_w = 38.0;
  double power_exponent = 1.0;
};

// Everything the write/store/read pipeline needs. overlap_prefactor is the
// calibrated lumped factor (mode matching, polarization, conversion
// non-idealities) folded into the write overlap.
struct MemoryModel {
  FiberSpec fiber;
  WavelengthQuartet quartet;
  CavitySpec cavity;
  ControlSpec write_control;
  ControlSpec read_control;
  FilterSpec filter;
  XpmCalibration xpm;
  double overlap_prefactor = 1.0;
  double input_fwhm_ghz = 81.0;
  double input_duration_fwhm_ps = 5.448;
  bool dispersion_enabled = true;

  double delta_beta() const { return phase_mismatch(fiber, quartet); }

  // Walk-off between signal and its paired control over the fiber length.
  double write_walkoff_ps() const {
    return std::abs(walkoff_ps_per_m(fiber, quartet.lambda_s_nm, quartet.lambda_p_nm)) *
           fiber.length_m;
  }
  double read_walkoff_ps() const {
    return std::abs(walkoff_ps_per_m(fiber, quartet.lambda_t_nm, quartet.lambda_q_nm)) *
           fiber.length_m;
  }
};

namespace detail {

// Gaussian duration after group-delay dispersion phi2, for a pulse launched
// with FWHM tau_l and bandwidth corresponding to transform limit tau_0.
// The stored pulse generally carries chirp (its time-bandwidth product
// exceeds the transform limit after XPM), which accelerates the spreading:
//   tau(phi2) = tau_l sqrt((1 + k C phi2)^2 + (k phi2)^2),  k = 4 ln2 / tau_l^2
// with C = sqrt((tau_l/tau_0)^2 - 1) oriented along the cavity's beta2 so
// the pulse always broadens. C = 0 recovers the transform-limited law
// tau_0 sqrt(1 + (4 ln2 phi2 / tau_0^2)^2).
inline double dispersed_duration_ps(double launch_fwhm_ps, double bandwidth_ghz,
                                    double gdd_ps2) {
  double tau0 = transform_limited_fwhm_ps(bandwidth_ghz);
  double ratio2 = (launch_fwhm_ps * launch_fwhm_ps) / (tau0 * tau0);
  double chirp = std::sqrt(std::max(ratio2 - 1.0, 0.0));
  double k = kFourLn2 / (launch_fwhm_ps * launch_fwhm_ps);
  double a = 1.0 + k * chirp * std::abs(gdd_ps2);
  double b = k * gdd_ps2;
  return launch_fwhm_ps * std::sqrt(a * a + b * b);
}

}  // namespace detail

// In-coupling plus the write conversion. The stored mode picks up the write
// pass XPM broadening; its duration cannot drop below the input envelope.
inline StoredPhotonState write(const MemoryModel& m) {
  m.fiber.validate();
  m.cavity.validate();
  m.write_control.validate();
  StoredPhotonState s;
  double ov = temporal_overlap(m.input_duration_fwhm_ps, m.write_control.duration_fwhm_ps,
                               m.write_walkoff_ps(), 0.0) *
              m.overlap_prefactor;
  double eta = conversion_efficiency(m.fiber.gamma_per_w_m,
                                     m.write_control.peak_power_product_w2(), m.fiber.length_m,
                                     m.delta_beta());
  s.survival = m.cavity.eta_in * ov * eta;
  s.bandwidth_ghz = xpm_broadening(m.input_fwhm_ghz, m.write_control.peak_power_w(),
                                   m.xpm.write_factor, m.xpm.reference_peak_power_w,
                                   m.xpm.power_exponent);
  s.duration_fwhm_ps =
      std::max(transform_limited_fwhm_ps(s.bandwidth_ghz), m.input_duration_fwhm_ps);
  s.launch_duration_fwhm_ps = s.duration_fwhm_ps;
  s.accumulated_gdd_ps2 = 0.0;
  s.timing_offset_ps = 0.0;
  s.round_trips = 0;
  return s;
}

// One cavity cycle: lumped loss, accumulated dispersion, timing drift.
inline StoredPhotonState advance_round_trip(const StoredPhotonState& state,
                                            const MemoryModel& m) {
  StoredPhotonState s = state;
  s.survival *= m.cavity.survival_per_rt();
  if (m.dispersion_enabled) {
    s.accumulated_gdd_ps2 += gdd_per_round_trip_ps2(m.fiber, 2.0, m.quartet.lambda_t_nm);
    s.duration_fwhm_ps = std::max(
        detail::dispersed_duration_ps(s.launch_duration_fwhm_ps, s.bandwidth_ghz,
                                      s.accumulated_gdd_ps2),
        s.duration_fwhm_ps);
  }
  if (!m.cavity.mismatch_corrected) s.timing_offset_ps += m.cavity.residual_mismatch_ps;
  s.round_trips += 1;
  return s;
}

struct ReadResult {
  double probability = 0.0;       // retrieval probability out of the cavity
  double retrieved_bandwidth_ghz = 0.0;
};

// Read conversion at a chosen control delay relative to the nominal slot.
inline ReadResult read(const StoredPhotonState& state, const MemoryModel& m,
                       double read_delay_ps) {
  m.read_control.validate();
  ReadResult r;
  double ov = temporal_overlap(state.duration_fwhm_ps, m.read_control.duration_fwhm_ps,
                               m.read_walkoff_ps(), read_delay_ps - state.timing_offset_ps);
  double eta = conversion_efficiency(m.fiber.gamma_per_w_m,
                                     m.read_control.peak_power_product_w2(), m.fiber.length_m,
                                     m.delta_beta());
  r.retrieved_bandwidth_ghz =
      xpm_broadening(state.bandwidth_ghz, m.read_control.peak_power_w(), m.xpm.read_factor,
                     m.xpm.reference_peak_power_w, m.xpm.power_exponent);
  double fpass = filter_transmission(r.retrieved_bandwidth_ghz, m.filter);
  r.probability = state.survival * ov * eta * fpass;
  return r;
}

// Bright-pulse survival after each of 1..n_max cycles: pure loss, no read
// penalty. This is the dispersion-free cavity lifetime.
inline std::vector<double> ring_down(const CavitySpec& cavity, std::uint64_t n_max) {
  if (n_max < 1) throw std::invalid_argument("ring_down: n_max must be >= 1");
  cavity.validate();
  std::vector<double> out;
  out.reserve(n_max);
  double s = 1.0;
  double mult = cavity.survival_per_rt();
  for (std::uint64_t n = 0; n < n_max; ++n) {
    s *= mult;
    out.push_back(s);
  }
  return out;
}

struct DecayPoint {
  std::uint64_t round_trips = 0;
  double storage_us = 0.0;
  double retrieval_probability = 0.0;
};

inline double storage_time_us(const CavitySpec& cavity, std::uint64_t n) {
  return static_cast<double>(n) * cavity.round_trip_ns * 1e-3;
}

// Full write -> advance^N -> read pipeline per requested N. When the
// timing mismatch is corrected the read delay tracks the stored pulse
// exactly; otherwise the read stays at the nominal slot and the pulse
// drifts away underneath it.
inline std::vector<DecayPoint> decay_curve(const MemoryModel& m,
                                           const std::vector<std::uint64_t>& n_list) {
  if (n_list.empty()) throw std::invalid_argument("decay_curve: empty round-trip list");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw std::invalid_argument("decay_curve: round-trip list must be increasing");
  std::vector<DecayPoint> out;
  out.reserve(n_list.size());
  StoredPhotonState s = write(m);
  std::uint64_t n = 0;
  for (std::uint64_t target : n_list) {
    while (n < target) {
      s = advance_round_trip(s, m);
      ++n;
    }
    double delay = m.cavity.mismatch_corrected ? s.timing_offset_ps : 0.0;
    out.push_back({n, storage_time_us(m.cavity, n), read(s, m, delay).probability});
  }
  return out;
}

// Retrieval probability versus read control delay after n round trips.
inline std::vector<std::pair<double, double>> delay_scan(const MemoryModel& m,
                                                         std::uint64_t n_round_trips,
                                                         const std::vector<double>& delays_ps) {
  if (delays_ps.empty()) throw std::invalid_argument("delay_scan: empty delay grid");
  StoredPhotonState s = write(m);
  for (std::uint64_t i = 0; i < n_round_trips; ++i) s = advance_round_trip(s, m);
  std::vector<std::pair<double, double>> out;
  out.reserve(delays_ps.size());
  for (double d : delays_ps) out.emplace_back(d, read(s, m, d).probability);
  return out;
}

}  // namespace fcswift
