#pragma once

#include <cmath>
#include <stdexcept>

#include "fcswift/constants.hpp"
#include "fcswift/dispersion.hpp"

namespace fcswift {

// One pair of control pulses (p and q) for one conversion pass.
// total_energy_nj is the experiment's total control budget; it is split
// evenly between the write and read passes and between p and q, so a single
// pulse carries total/4. Peak powers are always derived from energy and
// duration, never stored.
struct ControlSpec {
  double total_energy_nj = 2.0;
  double duration_fwhm_ps = 12.0;

  void validate() const {
    if (total_energy_nj < 0.0) throw std::invalid_argument("ControlSpec: energy must be >= 0");
    if (!(duration_fwhm_ps > 0.0)) throw std::invalid_argument("ControlSpec: duration must be > 0");
  }

  double per_pulse_energy_nj() const { return total_energy_nj / 4.0; }

  // Gaussian peak power of one control pulse, W.
  double peak_power_w() const {
    return kGaussianPeakFactor * per_pulse_energy_nj() * 1e3 / duration_fwhm_ps;
  }

  // P^2 = P_p P_q with the even split, W^2.
  double peak_power_product_w2() const {
    double p = peak_power_w();
    return p * p;
  }
};

// Band-pass filter on the output signal, super-Gaussian of adjustable order.
// Order 1 is Gaussian; large orders approach a box.
struct FilterSpec {
  double center_nm = 1260.0;
  double fwhm_ghz = 245.5;
  double order = 4.0;

  void validate() const {
    if (!(fwhm_ghz > 0.0)) throw std::invalid_argument("FilterSpec: fwhm must be > 0");
    if (order < 1.0) throw std::invalid_argument("FilterSpec: order must be >= 1");
  }

  // Amplitude transmission at detuning nu (GHz) from the filter center.
  double transmission_at(double nu_ghz) const {
    double u = 2.0 * nu_ghz / fwhm_ghz;
    return std::exp(-kLn2 * std::pow(u * u, order));
  }
};

// FWHM bandwidth in GHz of a band-pass of width dlambda_nm at center_nm.
inline double bandwidth_nm_to_ghz(double dlambda_nm, double center_nm) {
  return kSpeedOfLightMps * dlambda_nm / (center_nm * center_nm) * 1e9 * 1e-9;  // GHz
}

// Frequency-translation efficiency of Bragg-scattering four-wave mixing:
//   eta = (4 g^2 P^2 / kappa^2) sin^2(kappa L),  kappa = sqrt((db/2)^2 + 4 g^2 P^2)
// with g the nonlinear coefficient and P^2 = P_p P_q.
inline double conversion_efficiency(double gamma_per_w_m, double p2_w2, double length_m,
                                    double delta_beta_per_m) {
  if (!(gamma_per_w_m > 0.0)) throw std::invalid_argument("conversion_efficiency: gamma must be > 0");
  if (p2_w2 < 0.0) throw std::invalid_argument("conversion_efficiency: P^2 must be >= 0");
  if (!(length_m > 0.0)) throw std::invalid_argument("conversion_efficiency: length must be > 0");
  double g2p2 = 4.0 * gamma_per_w_m * gamma_per_w_m * p2_w2;  // (2 gamma P)^2, 1/m^2
  double half_db = delta_beta_per_m / 2.0;
  double kappa2 = half_db * half_db + g2p2;
  if (kappa2 == 0.0) return 0.0;
  double kappa = std::sqrt(kappa2);
  double s = std::sin(kappa * length_m);
  double eta = (g2p2 / kappa2) * s * s;
  return eta < 0.0 ? 0.0 : (eta > 1.0 ? 1.0 : eta);
}

// Fraction of the signal energy that sees the control: the signal-weighted
// average of the normalized control intensity, for Gaussian envelopes. The
// control window is widened in quadrature by the walk-off accumulated over
// the conversion length; the centroid is displaced by delay_offset_ps.
inline double temporal_overlap(double signal_fwhm_ps, double control_fwhm_ps,
                               double walkoff_ps, double delay_offset_ps) {
  if (!(signal_fwhm_ps > 0.0) || !(control_fwhm_ps > 0.0))
    throw std::invalid_argument("temporal_overlap: durations must be > 0");
  double ce2 = control_fwhm_ps * control_fwhm_ps + walkoff_ps * walkoff_ps;
  double denom = signal_fwhm_ps * signal_fwhm_ps + ce2;
  return std::sqrt(ce2 / denom) *
         std::exp(-kFourLn2 * delay_offset_ps * delay_offset_ps / denom);
}

// Multiplicative spectral broadening from cross-phase modulation at one
// conversion pass. factor_at_reference is the calibrated broadening at
// reference_peak_power_w; the excess factor scales with the control peak
// power around that point and vanishes at zero power. power_exponent = 1 is
// strict proportionality; the calibration may lower it toward a saturating
// law when the power sweep demands it.
inline double xpm_broadening(double input_fwhm_ghz, double control_peak_power_w,
                             double factor_at_reference, double reference_peak_power_w,
                             double power_exponent = 1.0) {
  if (!(input_fwhm_ghz > 0.0)) throw std::invalid_argument("xpm_broadening: input must be > 0");
  if (factor_at_reference < 1.0)
    throw std::invalid_argument("xpm_broadening: factor must be >= 1 at the reference power");
  if (!(reference_peak_power_w > 0.0))
    throw std::invalid_argument("xpm_broadening: reference power must be > 0");
  if (!(power_exponent > 0.0))
    throw std::invalid_argument("xpm_broadening: exponent must be > 0");
  double scale = control_peak_power_w > 0.0
                     ? std::pow(control_peak_power_w / reference_peak_power_w, power_exponent)
                     : 0.0;
  double factor = 1.0 + (factor_at_reference - 1.0) * scale;
  return input_fwhm_ghz * factor;
}

// Energy fraction of a centered Gaussian spectrum transmitted by the filter.
// Simpson quadrature over +-8 sigma of the spectrum.
inline double filter_transmission(double spectrum_fwhm_ghz, const FilterSpec& filter) {
  if (!(spectrum_fwhm_ghz > 0.0))
    throw std::invalid_argument("filter_transmission: spectrum width must be > 0");
  filter.validate();
  double sigma = spectrum_fwhm_ghz / (2.0 * std::sqrt(2.0 * kLn2));
  const int n = 4096;  // even
  double lo = -8.0 * sigma, hi = 8.0 * sigma;
  double h = (hi - lo) / n;
  double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
  auto f = [&](double nu) {
    double g = norm * std::exp(-nu * nu / (2.0 * sigma * sigma));
    return g * filter.transmission_at(nu);
  };
  double acc = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  double t = acc * h / 3.0;
  return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

// Internal memory efficiency of the write+read sequence, excluding storage
// loss: each pass contributes its temporal overlap times its conversion
// efficiency, and the band-pass acts once on the retrieved spectrum.
inline double memory_efficiency(const ControlSpec& write, const ControlSpec& read,
                                const FiberSpec& fiber, double delta_beta_per_m,
                                double overlap_write, double overlap_read,
                                double filter_pass) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(overlap_write) || !in_unit(overlap_read) || !in_unit(filter_pass))
    throw std::invalid_argument("memory_efficiency: factors must lie in [0, 1]");
  double eta_w = conversion_efficiency(fiber.gamma_per_w_m, write.peak_power_product_w2(),
                                       fiber.length_m, delta_beta_per_m);
  double eta_r = conversion_efficiency(fiber.gamma_per_w_m, read.peak_power_product_w2(),
                                       fiber.length_m, delta_beta_per_m);
  return (overlap_write * eta_w) * (overlap_read * eta_r) * filter_pass;
}

}  // namespace fcswift
