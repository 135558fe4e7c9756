#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fcswift/stats.hpp"
#include "fixture.hpp"

using namespace fcswift;

TEST_CASE("accidental probability formula") {
  SECTION("zero rate gives zero") {
    REQUIRE(accidental_probability(0.0, 1e5, 80.1e6) == 0.0);
    REQUIRE(accidental_probability(1e5, 0.0, 80.1e6) == 0.0);
  }
  SECTION("the quoted singles rates") {
    REQUIRE(accidental_probability(1e5, 1e5, 80.1e6) == Catch::Approx(1.559e-6).epsilon(1e-3));
  }
  SECTION("bilinearity on random rates") {
    std::mt19937_64 rng(83);
    std::uniform_real_distribution<double> r(1.0, 1e6);
    for (int i = 0; i < 1000; ++i) {
      double ns = r(rng), nh = r(rng);
      double base = accidental_probability(ns, nh, 80.1e6);
      REQUIRE(accidental_probability(2 * ns, 2 * nh, 80.1e6) ==
              Catch::Approx(4.0 * base).epsilon(1e-12));
      REQUIRE(base == Catch::Approx(ns * nh / (80.1e6 * 80.1e6)).epsilon(1e-12));
    }
  }
}

TEST_CASE("g2 estimator arithmetic and edge cases") {
  SECTION("plain counts") {
    G2Estimate g = g2_cross({100000000ull, 10000ull, 10000ull, 100ull});
    REQUIRE(g.defined);
    REQUIRE(g.value == Catch::Approx(100.0).epsilon(1e-12));
  }
  SECTION("zero coincidences use the one-count substitution for sigma") {
    G2Estimate g = g2_cross({1000000ull, 1000ull, 1000ull, 0ull});
    REQUIRE(g.defined);
    REQUIRE(g.value == 0.0);
    double base = 1e6 / (1000.0 * 1000.0);
    REQUIRE(g.sigma == Catch::Approx(base * std::sqrt(1.0 + 1e-3 + 1e-3)).epsilon(1e-12));
  }
  SECTION("zero denominator is flagged, not a crash") {
    REQUIRE_FALSE(g2_cross({1000ull, 0ull, 10ull, 0ull}).defined);
    REQUIRE_FALSE(g2_cross({1000ull, 10ull, 0ull, 0ull}).defined);
  }
}

TEST_CASE("non-classicality is one-sigma exceedance of the bound") {
  REQUIRE(is_nonclassical(180.0, 20.0));
  REQUIRE_FALSE(is_nonclassical(2.0, 0.1));
  REQUIRE_FALSE(is_nonclassical(2.5, 0.6));
  REQUIRE(is_nonclassical(2.5, 0.4));
  REQUIRE_THROWS_AS(is_nonclassical(3.0, -1.0), std::invalid_argument);
}

TEST_CASE("analytic rates behave at the limits") {
  SourceSpec src;
  NoiseSpec noise;
  SECTION("ideal pair source: g2 grows without bound as mu shrinks") {
    src.spdc_gated = true;
    noise.noise_mean_per_shot = 0.0;
    double prev = 0.0;
    for (double mu : {1e-2, 1e-3, 1e-4, 1e-5}) {
      src.pair_prob_per_pulse = mu;
      double g = g2_analytic(analytic_rates(src, noise, 1.0), 1e12).value;
      REQUIRE(g > prev);
      prev = g;
    }
    REQUIRE(prev > 1e4);
  }
  SECTION("no retrieval, no background: no signal") {
    src.spdc_gated = true;
    noise.noise_mean_per_shot = 0.0;
    TrialRates r = analytic_rates(src, noise, 0.0);
    REQUIRE(r.p_signal == 0.0);
    REQUIRE(r.p_coincidence == 0.0);
  }
}

TEST_CASE("monte carlo sampling") {
  SourceSpec src;
  src.pair_prob_per_pulse = 8.7e-4;
  NoiseSpec noise;

  SECTION("no retrieval, no noise, gated source: zero coincidences") {
    SourceSpec s2 = src;
    s2.spdc_gated = true;
    NoiseSpec n0;
    n0.noise_mean_per_shot = 0.0;
    CountsRecord c = monte_carlo_trials(s2, n0, 0.0, 200000, 99);
    REQUIRE(c.coincidence_counts == 0);
    REQUIRE(c.signal_counts == 0);
    REQUIRE(c.herald_counts > 0);
  }

  SECTION("identical seeds are bit-identical for any worker count") {
    TrialModel m = make_trial_model(src, noise, 0.1);
    CountsRecord a = monte_carlo_trials(m, 1000000, 1234, 1);
    CountsRecord b = monte_carlo_trials(m, 1000000, 1234, 8);
    CountsRecord c = monte_carlo_trials(m, 1000000, 1234, 3);
    REQUIRE(a == b);
    REQUIRE(a == c);
    CountsRecord d = monte_carlo_trials(m, 1000000, 1235, 8);
    REQUIRE_FALSE(a == d);
  }

  SECTION("count bounds hold on sampled outputs") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      TrialModel m;
      m.p_pair = 0.2 * u(rng);
      m.p_herald_given_pair = u(rng);
      m.p_retained_given_pair = u(rng);
      m.p_noise_click = 0.01 * u(rng);
      m.p_uncorr_click = 0.01 * u(rng);
      CountsRecord c = monte_carlo_trials(m, 50000, 7 + i);
      REQUIRE(c.coincidence_counts <= c.herald_counts);
      REQUIRE(c.coincidence_counts <= c.signal_counts);
      REQUIRE(c.herald_counts <= c.n_trials);
      REQUIRE(c.signal_counts <= c.n_trials);
    }
  }

  SECTION("two independent Bernoulli streams give g2 = 1 within three sigma") {
    TrialModel m;
    m.p_pair = 1.0;  // herald and signal decouple into independent streams
    m.p_herald_given_pair = 0.013;
    m.p_retained_given_pair = 0.011;
    CountsRecord c = monte_carlo_trials(m, 4000000, 4242);
    G2Estimate g = g2_cross(c);
    REQUIRE(std::abs(g.value - 1.0) < 3.0 * g.sigma);
  }

  SECTION("monte carlo matches the analytic rates within three sigma") {
    const ScenarioSpec& sc = calibrated_default();
    for (double eta : {1.0, 0.1, 0.01}) {
      TrialModel m = make_trial_model(sc.source, sc.noise, eta);
      CountsRecord c = monte_carlo_trials(m, 10000000, sc.mc.seed);
      TrialRates r = analytic_rates(m);
      G2Estimate mc = g2_cross(c);
      G2Estimate an = g2_analytic(r, static_cast<double>(c.n_trials));
      REQUIRE(mc.defined);
      REQUIRE(std::abs(mc.value - an.value) < 3.0 * mc.sigma);
      // raw rates agree too
      double sh = std::sqrt(r.p_herald * c.n_trials);
      REQUIRE(std::abs(static_cast<double>(c.herald_counts) - r.p_herald * c.n_trials) <
              4.0 * sh);
    }
  }
}

TEST_CASE("g2 versus storage") {
  const ScenarioSpec& sc = calibrated_default();
  MemoryModel m = make_memory_model(sc);

  SECTION("monotone non-increasing on the calibrated scenario") {
    auto pts = g2_vs_storage(m, sc.source, sc.noise, standard_g2_grid(),
                             static_cast<double>(sc.mc.n_trials));
    for (std::size_t i = 1; i < pts.size(); ++i) REQUIRE(pts[i].g2 <= pts[i - 1].g2 + 1e-12);
  }

  SECTION("no background: non-classical wherever retrieval is nonzero") {
    SourceSpec gated = sc.source;
    gated.spdc_gated = true;
    NoiseSpec quiet;
    quiet.noise_mean_per_shot = 0.0;
    auto pts = g2_vs_storage(m, gated, quiet, standard_g2_grid(), 1e15);
    for (const auto& p : pts) {
      REQUIRE(p.g2 > 2.0);
      REQUIRE(p.nonclassical);
    }
  }
}

TEST_CASE("gating the pair source removes accidental coincidences") {
  const ScenarioSpec& sc = calibrated_default();
  // isolate the accidental channel (no retrieval, no noise) and pump hard
  // enough for a meaningful count
  NoiseSpec quiet;
  quiet.noise_mean_per_shot = 0.0;
  SourceSpec ungated = sc.source;
  ungated.pair_prob_per_pulse = 0.03;
  ungated.spdc_gated = false;
  SourceSpec gated = ungated;
  gated.spdc_gated = true;

  CountsRecord cu = monte_carlo_trials(ungated, quiet, 0.0, 10000000, 77);
  CountsRecord cg = monte_carlo_trials(gated, quiet, 0.0, 10000000, 77);
  REQUIRE(cu.coincidence_counts > 50);
  REQUIRE(cg.coincidence_counts * 10 <= cu.coincidence_counts);

  // the ungated rate reproduces N_s N_h / R^2
  double mu = ungated.pair_prob_per_pulse;
  double rate_s = mu * sc.source.signal_path_efficiency * sc.source.rep_rate_hz;
  double rate_h = mu * sc.source.herald_efficiency * sc.source.rep_rate_hz;
  double p_acc = accidental_probability(rate_s, rate_h, sc.source.rep_rate_hz);
  double expected = p_acc * static_cast<double>(cu.n_trials);
  REQUIRE(std::abs(static_cast<double>(cu.coincidence_counts) - expected) <
          3.0 * std::sqrt(expected) + 3.0);
}
