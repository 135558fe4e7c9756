#pragma once

#include <cmath>
#include <stdexcept>

#include "fcswift/constants.hpp"

namespace fcswift {

// Cavity fiber description. Dispersion is modelled as a cubic Taylor
// expansion around the zero-dispersion angular frequency: beta2 vanishes at
// lambda_zd and grows linearly with detuning at slope beta3. This is the
// minimal model that reproduces the zero-dispersion wavelength, the pairwise
// group-velocity matching of the four mixing fields, and the measured
// per-cycle group-delay dispersion.
struct FiberSpec {
  double length_m = 5.0;
  double gamma_per_w_m = 4.0e-3;       // nonlinear coefficient, 1/(W m)
  double lambda_zd_nm = 1387.0;        // zero-dispersion wavelength
  double beta3_ps3_per_m = 3.0e-4;     // third-order dispersion at lambda_zd
  double attenuation_db_per_km = 0.9;

  void validate() const {
    if (!(length_m > 0.0)) throw std::invalid_argument("FiberSpec: length_m must be > 0");
    if (!(gamma_per_w_m > 0.0)) throw std::invalid_argument("FiberSpec: gamma must be > 0");
    if (beta3_ps3_per_m == 0.0) throw std::invalid_argument("FiberSpec: beta3 must be nonzero");
    if (attenuation_db_per_km < 0.0)
      throw std::invalid_argument("FiberSpec: attenuation must be >= 0");
  }
};

// The four mixing wavelengths: signal s, stored t, controls p and q.
// Bragg-scattering translation s -> t requires w_q - w_p = w_s - w_t.
struct WavelengthQuartet {
  double lambda_s_nm = 1260.0;
  double lambda_t_nm = 1291.5;
  double lambda_p_nm = 1548.0;
  double lambda_q_nm = 1503.0;

  // Residual of the frequency-conservation condition, in GHz.
  double frequency_mismatch_ghz() const {
    double lhs = omega_rad_per_ps(lambda_q_nm) - omega_rad_per_ps(lambda_p_nm);
    double rhs = omega_rad_per_ps(lambda_s_nm) - omega_rad_per_ps(lambda_t_nm);
    return (lhs - rhs) / (2.0 * kPi) * 1e3;  // rad/ps -> GHz
  }

  bool is_frequency_conserving(double tol_ghz = 1.0) const {
    return std::abs(frequency_mismatch_ghz()) < tol_ghz;
  }
};

// Given s, t and p, choose q so that frequency conservation holds exactly.
inline WavelengthQuartet conserving_quartet(double lambda_s_nm, double lambda_t_nm,
                                            double lambda_p_nm) {
  double omega_q = omega_rad_per_ps(lambda_p_nm) + omega_rad_per_ps(lambda_s_nm) -
                   omega_rad_per_ps(lambda_t_nm);
  WavelengthQuartet quartet;
  quartet.lambda_s_nm = lambda_s_nm;
  quartet.lambda_t_nm = lambda_t_nm;
  quartet.lambda_p_nm = lambda_p_nm;
  quartet.lambda_q_nm = 2.0 * kPi * kSpeedOfLightNmPerPs / omega_q;
  return quartet;
}

// Angular detuning from the zero-dispersion carrier, rad/ps.
inline double detuning_rad_per_ps(const FiberSpec& fiber, double lambda_nm) {
  if (!(lambda_nm > 0.0)) throw std::invalid_argument("wavelength must be > 0");
  return omega_rad_per_ps(lambda_nm) - omega_rad_per_ps(fiber.lambda_zd_nm);
}

// Propagation constant relative to the carrier, 1/m. The constant and
// linear Taylor terms cancel in every difference used downstream, so only
// the cubic term is kept: beta3 * delta^3 / 6.
inline double beta_rel(const FiberSpec& fiber, double lambda_nm) {
  double d = detuning_rad_per_ps(fiber, lambda_nm);
  return fiber.beta3_ps3_per_m * d * d * d / 6.0;
}

// Group-velocity dispersion beta2 at a wavelength, ps^2/m.
inline double beta2_ps2_per_m(const FiberSpec& fiber, double lambda_nm) {
  return fiber.beta3_ps3_per_m * detuning_rad_per_ps(fiber, lambda_nm);
}

// Phase mismatch of the Bragg-scattering process,
// dbeta = beta(w_p) - beta(w_q) + beta(w_s) - beta(w_t), in 1/m.
inline double phase_mismatch(const FiberSpec& fiber, const WavelengthQuartet& quartet,
                             double tol_ghz = 1.0) {
  if (!quartet.is_frequency_conserving(tol_ghz))
    throw std::invalid_argument("WavelengthQuartet violates frequency conservation");
  return beta_rel(fiber, quartet.lambda_p_nm) - beta_rel(fiber, quartet.lambda_q_nm) +
         beta_rel(fiber, quartet.lambda_s_nm) - beta_rel(fiber, quartet.lambda_t_nm);
}

// Group-slowness difference between two wavelengths, ps/m. Under the cubic
// model beta1_rel(delta) = beta3 * delta^2 / 2, so fields at opposite
// detunings are group-velocity matched. Factored form keeps the diagonal
// exactly zero under fused-multiply contraction.
inline double walkoff_ps_per_m(const FiberSpec& fiber, double lambda_a_nm,
                               double lambda_b_nm) {
  double da = detuning_rad_per_ps(fiber, lambda_a_nm);
  double db = detuning_rad_per_ps(fiber, lambda_b_nm);
  return fiber.beta3_ps3_per_m * (da - db) * (da + db) / 2.0;
}

// Group-delay dispersion accumulated over one cavity cycle, ps^2.
// cavity_length_factor = 2 for a linear cavity (double pass per round trip).
inline double gdd_per_round_trip_ps2(const FiberSpec& fiber, double cavity_length_factor,
                                     double lambda_nm) {
  return beta2_ps2_per_m(fiber, lambda_nm) * cavity_length_factor * fiber.length_m;
}

// Invert the GDD anchor for beta3. Rejected at the zero-dispersion
// wavelength, where beta2 vanishes identically.
inline FiberSpec calibrate_beta3(const FiberSpec& fiber, double target_gdd_ps2,
                                 double lambda_nm, double cavity_length_factor = 2.0) {
  if (target_gdd_ps2 == 0.0) throw std::invalid_argument("calibrate_beta3: target must be nonzero");
  double d = detuning_rad_per_ps(fiber, lambda_nm);
  if (d == 0.0)
    throw std::invalid_argument("calibrate_beta3: beta2 vanishes at the zero-dispersion wavelength");
  FiberSpec out = fiber;
  out.beta3_ps3_per_m = target_gdd_ps2 / (d * cavity_length_factor * fiber.length_m);
  return out;
}

}  // namespace fcswift
