#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fcswift/cavity.hpp"
#include "fcswift/rng.hpp"

namespace fcswift {

struct SourceSpec {
  double pair_prob_per_pulse = 8.7e-4;   // mu
  double herald_efficiency = 0.30;
  double signal_path_efficiency = 0.091; // herald -> detected, memory excluded
  double rep_rate_hz = 80.1e6;
  double trial_rate_hz = 181e3;
  bool spdc_gated = false;

  void validate() const {
    auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!unit(pair_prob_per_pulse) || !unit(herald_efficiency) || !unit(signal_path_efficiency))
      throw std::invalid_argument("SourceSpec: probabilities must lie in [0, 1]");
    if (!(trial_rate_hz > 0.0) || rep_rate_hz < trial_rate_hz)
      throw std::invalid_argument("SourceSpec: need rep_rate >= trial_rate > 0");
  }
};

struct NoiseSpec {
  double noise_mean_per_shot = 3.5e-4;  // Raman photons in the output bin
  double dark_count_prob = 0.0;

  void validate() const {
    if (noise_mean_per_shot < 0.0 || dark_count_prob < 0.0)
      throw std::invalid_argument("NoiseSpec: rates must be >= 0");
  }
};

struct CountsRecord {
  std::uint64_t n_trials = 0;
  std::uint64_t herald_counts = 0;
  std::uint64_t signal_counts = 0;
  std::uint64_t coincidence_counts = 0;

  bool operator==(const CountsRecord&) const = default;
};

struct TrialRates {
  double p_herald = 0.0;
  double p_signal = 0.0;       // unconditional signal click per trial
  double p_coincidence = 0.0;  // herald and signal in the same trial
};

// Per-trial event model distilled from a scenario at one storage setting.
struct TrialModel {
  double p_pair = 0.0;              // SPDC pair in the write-bin pulse
  double p_herald_given_pair = 0.0;
  double p_retained_given_pair = 0.0;  // path x memory retrieval
  double p_noise_click = 0.0;          // threshold click on Raman noise
  double p_uncorr_click = 0.0;         // read-bin SPDC transit (ungated pump)
  double p_dark_click = 0.0;
};

inline TrialModel make_trial_model(const SourceSpec& source, const NoiseSpec& noise,
                                   double memory_retrieval_prob) {
  source.validate();
  noise.validate();
  if (memory_retrieval_prob < 0.0 || memory_retrieval_prob > 1.0)
    throw std::invalid_argument("make_trial_model: retrieval must lie in [0, 1]");
  TrialModel m;
  m.p_pair = source.pair_prob_per_pulse;
  m.p_herald_given_pair = source.herald_efficiency;
  m.p_retained_given_pair = source.signal_path_efficiency * memory_retrieval_prob;
  m.p_noise_click = 1.0 - std::exp(-noise.noise_mean_per_shot);
  m.p_uncorr_click =
      source.spdc_gated ? 0.0 : source.pair_prob_per_pulse * source.signal_path_efficiency;
  m.p_dark_click = noise.dark_count_prob;
  return m;
}

// Exact per-trial click probabilities for threshold detectors. Background
// clicks (Raman noise, read-bin SPDC transits, darks) are independent of the
// write-bin pair; the retained-photon click requires it.
inline TrialRates analytic_rates(const TrialModel& m) {
  TrialRates r;
  double bg_miss = (1.0 - m.p_noise_click) * (1.0 - m.p_uncorr_click) * (1.0 - m.p_dark_click);
  r.p_herald = m.p_pair * m.p_herald_given_pair;
  r.p_signal = 1.0 - (1.0 - m.p_pair * m.p_retained_given_pair) * bg_miss;
  r.p_coincidence = r.p_herald * (1.0 - (1.0 - m.p_retained_given_pair) * bg_miss);
  return r;
}

inline TrialRates analytic_rates(const SourceSpec& source, const NoiseSpec& noise,
                                 double memory_retrieval_prob) {
  return analytic_rates(make_trial_model(source, noise, memory_retrieval_prob));
}

// P_acc = N_s N_h / R^2: probability that an uncorrelated signal-herald pair
// from the same pulse pair coincides.
inline double accidental_probability(double n_s_per_s, double n_h_per_s, double rep_rate_hz) {
  if (n_s_per_s < 0.0 || n_h_per_s < 0.0)
    throw std::invalid_argument("accidental_probability: rates must be >= 0");
  if (!(rep_rate_hz > 0.0))
    throw std::invalid_argument("accidental_probability: rep rate must be > 0");
  return n_s_per_s * n_h_per_s / (rep_rate_hz * rep_rate_hz);
}

struct G2Estimate {
  double value = 0.0;
  double sigma = 0.0;
  bool defined = true;  // false when a denominator count is zero
};

// g2 = (C T) / (H S) with Poissonian errors on each raw count, first-order
// propagated. C = 0 reports value 0 with the error of a single count
// substituted (C -> 1) so the bound test stays meaningful.
inline G2Estimate g2_cross(const CountsRecord& c) {
  G2Estimate g;
  if (c.herald_counts == 0 || c.signal_counts == 0 || c.n_trials == 0) {
    g.defined = false;
    return g;
  }
  double T = static_cast<double>(c.n_trials);
  double H = static_cast<double>(c.herald_counts);
  double S = static_cast<double>(c.signal_counts);
  double C = static_cast<double>(c.coincidence_counts);
  double base = T / (H * S);
  g.value = C * base;
  double ceff = C > 0.0 ? C : 1.0;
  g.sigma = ceff * base * std::sqrt(1.0 / ceff + 1.0 / H + 1.0 / S);
  return g;
}

// Expected-count sigma for an analytic scan point observed over n_trials.
inline G2Estimate g2_analytic(const TrialRates& r, double n_trials) {
  G2Estimate g;
  if (!(r.p_herald > 0.0) || !(r.p_signal > 0.0)) {
    g.defined = false;
    return g;
  }
  g.value = r.p_coincidence / (r.p_herald * r.p_signal);
  double C = std::max(r.p_coincidence * n_trials, 1.0);
  double H = r.p_herald * n_trials;
  double S = r.p_signal * n_trials;
  g.sigma = g.value > 0.0
                ? g.value * std::sqrt(1.0 / C + 1.0 / H + 1.0 / S)
                : (n_trials / (H * S)) * std::sqrt(1.0 + 1.0 / H + 1.0 / S);
  return g;
}

// One-sigma exceedance of the classical bound g2 = 2.
inline bool is_nonclassical(double g2_value, double g2_sigma) {
  if (g2_sigma < 0.0) throw std::invalid_argument("is_nonclassical: sigma must be >= 0");
  return g2_value - g2_sigma > 2.0;
}

namespace detail {

inline CountsRecord run_trials_range(const TrialModel& m, std::uint64_t begin,
                                     std::uint64_t end, std::uint64_t seed) {
  CountsRecord c;
  for (std::uint64_t i = begin; i < end; ++i) {
    TrialStream rng(seed, i);
    bool pair = rng.uniform(0) < m.p_pair;
    bool herald = pair && rng.uniform(1) < m.p_herald_given_pair;
    bool retained = pair && rng.uniform(2) < m.p_retained_given_pair;
    bool noise = rng.uniform(3) < m.p_noise_click;
    bool uncorr = rng.uniform(4) < m.p_uncorr_click;
    bool dark = rng.uniform(5) < m.p_dark_click;
    bool signal = retained || noise || uncorr || dark;
    c.herald_counts += herald;
    c.signal_counts += signal;
    c.coincidence_counts += herald && signal;
  }
  c.n_trials = end - begin;
  return c;
}

}  // namespace detail

// Sampled realization of the trial model. Each trial's variates come from a
// counter-based stream keyed by (seed, trial index), so the tally is
// bit-identical for any worker count.
inline CountsRecord monte_carlo_trials(const TrialModel& m, std::uint64_t n_trials,
                                       std::uint64_t seed, unsigned n_workers = 0) {
  if (n_trials < 1) throw std::invalid_argument("monte_carlo_trials: need >= 1 trial");
  if (n_workers == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n_workers = hw ? hw : 1;
  }
  if (n_workers > 1 && n_trials > 100000) {
    std::uint64_t chunk = (n_trials + n_workers - 1) / n_workers;
    std::vector<CountsRecord> parts(n_workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w) {
      std::uint64_t b = w * chunk;
      std::uint64_t e = std::min(n_trials, b + chunk);
      if (b >= e) break;
      pool.emplace_back([&, w, b, e] { parts[w] = detail::run_trials_range(m, b, e, seed); });
    }
    for (auto& t : pool) t.join();
    CountsRecord total;
    for (const auto& p : parts) {
      total.n_trials += p.n_trials;
      total.herald_counts += p.herald_counts;
      total.signal_counts += p.signal_counts;
      total.coincidence_counts += p.coincidence_counts;
    }
    return total;
  }
  return detail::run_trials_range(m, 0, n_trials, seed);
}

inline CountsRecord monte_carlo_trials(const SourceSpec& source, const NoiseSpec& noise,
                                       double memory_retrieval_prob, std::uint64_t n_trials,
                                       std::uint64_t seed, unsigned n_workers = 0) {
  return monte_carlo_trials(make_trial_model(source, noise, memory_retrieval_prob), n_trials,
                            seed, n_workers);
}

struct G2Point {
  std::uint64_t round_trips = 0;
  double storage_us = 0.0;
  double g2 = 0.0;
  double sigma = 0.0;
  bool nonclassical = false;
};

// g2 versus storage time. N = 0 is the input-photon reference (memory
// bypassed, unit retrieval); N >= 1 runs the storage pipeline and uses the
// internal memory efficiency as the retained-photon survival.
inline std::vector<G2Point> g2_vs_storage(const MemoryModel& model, const SourceSpec& source,
                                          const NoiseSpec& noise,
                                          const std::vector<std::uint64_t>& n_list,
                                          double trials_for_sigma) {
  if (n_list.empty()) throw std::invalid_argument("g2_vs_storage: empty round-trip list");
  std::vector<G2Point> out;
  out.reserve(n_list.size());
  std::vector<std::uint64_t> stored;
  for (std::uint64_t n : n_list)
    if (n > 0) stored.push_back(n);
  std::vector<DecayPoint> curve;
  if (!stored.empty()) curve = decay_curve(model, stored);
  std::size_t k = 0;
  for (std::uint64_t n : n_list) {
    double eta_ret;
    double t_us;
    if (n == 0) {
      eta_ret = 1.0;
      t_us = 0.0;
    } else {
      eta_ret = curve[k].retrieval_probability / model.cavity.eta_in;
      t_us = curve[k].storage_us;
      ++k;
    }
    G2Estimate g = g2_analytic(analytic_rates(source, noise, eta_ret), trials_for_sigma);
    out.push_back({n, t_us, g.value, g.sigma, is_nonclassical(g.value, g.sigma)});
  }
  return out;
}

}  // namespace fcswift
