#pragma once

namespace fcswift {

// Exact SI speed of light.
inline constexpr double kSpeedOfLightMps = 299792458.0;
// Same constant in nm/ps, convenient for optical wavelengths.
inline constexpr double kSpeedOfLightNmPerPs = 299792.458;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kFourLn2 = 4.0 * kLn2;

// Time-bandwidth product of a transform-limited Gaussian pulse
// (FWHM duration x FWHM bandwidth), 2 ln2 / pi.
inline constexpr double kGaussianTbp = 2.0 * kLn2 / kPi;

// Peak power of a Gaussian pulse with unit energy and unit FWHM,
// sqrt(4 ln2 / pi) = 0.9394.
inline constexpr double kGaussianPeakFactor = 0.93943727869965132755;

// Angular frequency in rad/ps of a vacuum wavelength in nm.
inline double omega_rad_per_ps(double lambda_nm) {
  return 2.0 * kPi * kSpeedOfLightNmPerPs / lambda_nm;
}

// Transform-limited Gaussian FWHM duration in ps for a FWHM bandwidth in GHz.
inline double transform_limited_fwhm_ps(double bandwidth_ghz) {
  return kGaussianTbp / (bandwidth_ghz * 1e-3);
}

}  // namespace fcswift
