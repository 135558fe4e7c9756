#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fcswift/constants.hpp"

namespace fcswift {

// Laser-locked cavity period used to convert fitted lifetimes to round trips.
inline constexpr double kRoundTripUs = 0.049938;

struct FitResult {
  std::vector<double> params;
  std::vector<double> sigmas;     // one-standard-error uncertainties
  double residual_norm = 0.0;     // weighted sum of squared residuals
  bool converged = false;
  bool singular = false;          // normal matrix not invertible; sigmas unset
  int iterations = 0;
};

using CurveModel = std::function<double(double x, std::span<const double> params)>;

namespace detail {

// Solve A x = b in place, A symmetric positive-ish, tiny dimension.
inline bool solve_normal(std::vector<double> a, std::vector<double> b,
                         std::vector<double>& x) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
    x[ri] = s / a[ri * n + ri];
  }
  return true;
}

inline bool invert_spd(const std::vector<double>& a, std::size_t n,
                       std::vector<double>& inv) {
  inv.assign(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::vector<double> e(n, 0.0), x;
    e[col] = 1.0;
    if (!solve_normal(a, e, x)) return false;
    for (std::size_t r = 0; r < n; ++r) inv[r * n + col] = x[r];
  }
  return true;
}

}  // namespace detail

// Damped (Levenberg-Marquardt) weighted least squares with forward
// finite-difference Jacobians. Minimizes sum(((y - f(x)) / yerr)^2).
// Covariance is taken from the Gauss-Newton normal matrix at the solution.
inline FitResult fit_least_squares(const CurveModel& model, std::span<const double> x,
                                   std::span<const double> y, std::span<const double> yerr,
                                   std::vector<double> init_params, int max_iterations = 200,
                                   double tol = 1e-12) {
  const std::size_t n = x.size();
  const std::size_t np = init_params.size();
  if (y.size() != n || yerr.size() != n)
    throw std::invalid_argument("fit_least_squares: array lengths differ");
  if (n < np) throw std::invalid_argument("fit_least_squares: fewer points than parameters");
  for (double e : yerr)
    if (!(e > 0.0)) throw std::invalid_argument("fit_least_squares: yerr must be > 0");

  auto chi2_of = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double r = (y[i] - model(x[i], p)) / yerr[i];
      acc += r * r;
    }
    return acc;
  };

  FitResult res;
  std::vector<double> p = std::move(init_params);
  double chi2 = chi2_of(p);
  double lambda = 1e-3;
  std::vector<double> jac(n * np), resid(n);

  int it = 0;
  for (; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = (y[i] - model(x[i], p)) / yerr[i];
    for (std::size_t j = 0; j < np; ++j) {
      double h = std::max(std::abs(p[j]) * 1e-7, 1e-10);
      std::vector<double> ph = p;
      ph[j] += h;
      for (std::size_t i = 0; i < n; ++i)
        jac[i * np + j] = (model(x[i], ph) - model(x[i], p)) / (h * yerr[i]);
    }
    // J^T J and J^T r
    std::vector<double> jtj(np * np, 0.0), jtr(np, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < np; ++a) {
        jtr[a] += jac[i * np + a] * resid[i];
        for (std::size_t b = a; b < np; ++b) jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
      }
    }
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = 0; b < a; ++b) jtj[a * np + b] = jtj[b * np + a];

    double grad_norm = 0.0;
    for (double g : jtr) grad_norm = std::max(grad_norm, std::abs(g));
    if (grad_norm < 1e-14 * (1.0 + chi2)) {
      res.converged = true;
      break;
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::vector<double> damped = jtj;
      for (std::size_t a = 0; a < np; ++a) damped[a * np + a] *= (1.0 + lambda);
      std::vector<double> step;
      if (!detail::solve_normal(damped, jtr, step)) {
        lambda *= 10.0;
        continue;
      }
      std::vector<double> trial = p;
      for (std::size_t a = 0; a < np; ++a) trial[a] += step[a];
      double trial_chi2 = chi2_of(trial);
      if (trial_chi2 <= chi2) {
        double step_norm = 0.0;
        for (std::size_t a = 0; a < np; ++a)
          step_norm = std::max(step_norm, std::abs(step[a]) / (1.0 + std::abs(p[a])));
        double drop = chi2 - trial_chi2;
        p = std::move(trial);
        chi2 = trial_chi2;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (step_norm < tol || drop < tol * (1.0 + chi2)) res.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (res.converged) break;
    if (!stepped) break;  // no downhill step found; report best-so-far
  }

  res.params = p;
  res.iterations = it;
  res.residual_norm = chi2;

  // Covariance from the undamped normal matrix at the solution.
  std::vector<double> jtj(np * np, 0.0);
  for (std::size_t j = 0; j < np; ++j) {
    double h = std::max(std::abs(p[j]) * 1e-7, 1e-10);
    std::vector<double> ph = p;
    ph[j] += h;
    for (std::size_t i = 0; i < n; ++i)
      jac[i * np + j] = (model(x[i], ph) - model(x[i], p)) / (h * yerr[i]);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < np; ++a)
      for (std::size_t b = a; b < np; ++b) jtj[a * np + b] += jac[i * np + a] * jac[i * np + b];
  for (std::size_t a = 0; a < np; ++a)
    for (std::size_t b = 0; b < a; ++b) jtj[a * np + b] = jtj[b * np + a];
  std::vector<double> cov;
  if (detail::invert_spd(jtj, np, cov)) {
    res.sigmas.resize(np);
    for (std::size_t a = 0; a < np; ++a)
      res.sigmas[a] = std::sqrt(std::max(cov[a * np + a], 0.0));
  } else {
    res.singular = true;
  }
  return res;
}

struct ExponentialFit {
  double amplitude = 0.0;
  double tau = 0.0;             // 1/e constant, units of the t axis
  double tau_round_trips = 0.0; // tau (us) / laser-locked period
  double sigma_amplitude = 0.0;
  double sigma_tau = 0.0;
  FitResult raw;
};

// y = A exp(-t / tau). t in microseconds for the round-trip conversion.
inline ExponentialFit fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                            std::span<const double> yerr) {
  if (t.size() < 2) throw std::invalid_argument("fit_exponential_decay: need >= 2 points");
  // log-linear weighted regression for the initial point
  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(y[i] > 0.0)) continue;
    double ly = std::log(y[i]);
    double w = 1.0;
    sw += w; swx += w * t[i]; swy += w * ly; swxx += w * t[i] * t[i]; swxy += w * t[i] * ly;
  }
  double denom = sw * swxx - swx * swx;
  double slope = denom != 0.0 ? (sw * swxy - swx * swy) / denom : -1.0;
  double inter = sw != 0.0 ? (swy - slope * swx) / sw : 0.0;
  if (!(slope < 0.0)) slope = -1.0 / (t.back() - t.front() + 1e-12);
  std::vector<double> init{std::exp(inter), -1.0 / slope};

  CurveModel model = [](double x, std::span<const double> p) {
    return p[0] * std::exp(-x / p[1]);
  };
  FitResult raw = fit_least_squares(model, t, y, yerr, init);
  ExponentialFit out;
  out.amplitude = raw.params[0];
  out.tau = raw.params[1];
  out.tau_round_trips = raw.params[1] / kRoundTripUs;
  if (raw.sigmas.size() == 2) {
    out.sigma_amplitude = raw.sigmas[0];
    out.sigma_tau = raw.sigmas[1];
  }
  out.raw = std::move(raw);
  return out;
}

struct GaussianFit {
  double center = 0.0;
  double fwhm = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double sigma_center = 0.0;
  double sigma_fwhm = 0.0;
  double sigma_amplitude = 0.0;
  double sigma_offset = 0.0;
  FitResult raw;
};

// y = off + A exp(-4 ln2 (x - c)^2 / fwhm^2); fwhm kept positive by fitting
// its logarithm.
inline GaussianFit fit_gaussian(std::span<const double> x, std::span<const double> y,
                                std::span<const double> yerr) {
  if (x.size() < 5) throw std::invalid_argument("fit_gaussian: need >= 5 points");
  double ymin = *std::min_element(y.begin(), y.end());
  double ymax = *std::max_element(y.begin(), y.end());
  // moment-based start: centroid and variance of (y - min)
  double m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double w = y[i] - ymin;
    m0 += w; m1 += w * x[i];
  }
  double c0 = m0 > 0 ? m1 / m0 : x[x.size() / 2];
  for (std::size_t i = 0; i < x.size(); ++i) {
    double w = y[i] - ymin;
    m2 += w * (x[i] - c0) * (x[i] - c0);
  }
  double var = m0 > 0 ? m2 / m0 : 1.0;
  double fwhm0 = var > 0 ? 2.0 * std::sqrt(2.0 * kLn2 * var) : (x.back() - x.front()) / 4.0;
  if (!(fwhm0 > 0.0)) fwhm0 = 1.0;

  CurveModel model = [](double xi, std::span<const double> p) {
    double fwhm = std::exp(p[3]);
    double d = xi - p[2];
    return p[0] + p[1] * std::exp(-kFourLn2 * d * d / (fwhm * fwhm));
  };
  std::vector<double> init{ymin, ymax - ymin, c0, std::log(fwhm0)};
  FitResult raw = fit_least_squares(model, x, y, yerr, init);
  GaussianFit out;
  out.offset = raw.params[0];
  out.amplitude = raw.params[1];
  out.center = raw.params[2];
  out.fwhm = std::exp(raw.params[3]);
  if (raw.sigmas.size() == 4) {
    out.sigma_offset = raw.sigmas[0];
    out.sigma_amplitude = raw.sigmas[1];
    out.sigma_center = raw.sigmas[2];
    out.sigma_fwhm = out.fwhm * raw.sigmas[3];  // delta method for exp(theta)
  }
  out.raw = std::move(raw);
  return out;
}

// Width of a Gaussian line after removing a Gaussian instrument response:
// sqrt(measured^2 - resolution^2).
inline double deconvolve_gaussian_fwhm(double measured_ghz, double resolution_ghz) {
  if (resolution_ghz < 0.0)
    throw std::invalid_argument("deconvolve_gaussian_fwhm: resolution must be >= 0");
  if (!(measured_ghz > resolution_ghz))
    throw std::domain_error("deconvolve_gaussian_fwhm: line not resolved (measured <= resolution)");
  return std::sqrt(measured_ghz * measured_ghz - resolution_ghz * resolution_ghz);
}

struct Sin4Fit {
  double amplitude = 0.0;
  double scale_b = 0.0;     // eta = A sin^4(b P)
  double peak_energy = 0.0; // pi / (2 b)
  double sigma_amplitude = 0.0;
  double sigma_scale_b = 0.0;
  FitResult raw;
};

// eta = A sin^4(b P). The loss surface is multimodal in b, so b is seeded by
// a grid scan before the damped iteration.
inline Sin4Fit fit_sin4(std::span<const double> p_nj, std::span<const double> eta,
                        std::span<const double> err) {
  if (p_nj.size() < 3) throw std::invalid_argument("fit_sin4: need >= 3 points");
  double pmax = *std::max_element(p_nj.begin(), p_nj.end());
  CurveModel model = [](double x, std::span<const double> pr) {
    double s = std::sin(pr[1] * x);
    double s2 = s * s;
    return pr[0] * s2 * s2;
  };
  double best_b = kPi / (2.0 * pmax), best_chi = 1e300, best_a = 0.0;
  for (int k = 1; k <= 240; ++k) {
    double b = k * kPi / (2.0 * pmax * 60.0);  // peaks from pmax/... down to pmax/2 scale
    // closed-form amplitude for fixed b
    double num = 0, den = 0;
    for (std::size_t i = 0; i < p_nj.size(); ++i) {
      double s = std::sin(b * p_nj[i]);
      double m = s * s * s * s;
      double w = 1.0 / (err[i] * err[i]);
      num += w * eta[i] * m;
      den += w * m * m;
    }
    double a = den > 0 ? num / den : 0.0;
    double chi = 0;
    for (std::size_t i = 0; i < p_nj.size(); ++i) {
      double s = std::sin(b * p_nj[i]);
      double r = (eta[i] - a * s * s * s * s) / err[i];
      chi += r * r;
    }
    if (chi < best_chi) { best_chi = chi; best_b = b; best_a = a; }
  }
  FitResult raw = fit_least_squares(model, p_nj, eta, err, {best_a, best_b});
  Sin4Fit out;
  out.amplitude = raw.params[0];
  out.scale_b = raw.params[1];
  out.peak_energy = kPi / (2.0 * raw.params[1]);
  if (raw.sigmas.size() == 2) {
    out.sigma_amplitude = raw.sigmas[0];
    out.sigma_scale_b = raw.sigmas[1];
  }
  out.raw = std::move(raw);
  return out;
}

}  // namespace fcswift
