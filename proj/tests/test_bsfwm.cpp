#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fcswift/bsfwm.hpp"
#include "oracles.hpp"

using namespace fcswift;

TEST_CASE("control peak power follows the Gaussian energy/duration relation") {
  ControlSpec c{2.0, 12.0};
  // one pulse carries 0.5 nJ; peak = 0.939 E / FWHM
  REQUIRE(c.per_pulse_energy_nj() == Catch::Approx(0.5));
  REQUIRE(c.peak_power_w() == Catch::Approx(0.939 * 0.5e-9 / 12e-12).epsilon(1e-3));
  REQUIRE(c.peak_power_product_w2() == Catch::Approx(c.peak_power_w() * c.peak_power_w()));
}

TEST_CASE("conversion efficiency at the textbook points") {
  double gamma = 4e-3, L = 5.0;
  SECTION("first maximum: 2 gamma P L = pi/2, matched") {
    double p = kPi / (2.0 * 2.0 * gamma * L);
    REQUIRE(conversion_efficiency(gamma, p * p, L, 0.0) == Catch::Approx(1.0).epsilon(1e-12));
  }
  SECTION("no pump") { REQUIRE(conversion_efficiency(gamma, 0.0, L, 0.0) == 0.0); }
  SECTION("half angle gives one half") {
    double p = kPi / (4.0 * 2.0 * gamma * L);
    REQUIRE(conversion_efficiency(gamma, p * p, L, 0.0) == Catch::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("conversion efficiency agrees with the coupled-amplitude ODE oracle") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> g(1e-3, 8e-3), p(5.0, 80.0), db(-2.0, 2.0);
  for (int i = 0; i < 5; ++i) {
    double gamma = g(rng), peak = p(rng), mismatch = db(rng), L = 5.0;
    double closed = conversion_efficiency(gamma, peak * peak, L, mismatch);
    double ode = oracles::bsfwm_ode_efficiency(gamma, peak * peak, L, mismatch);
    REQUIRE(closed == Catch::Approx(ode).margin(1e-6));
  }
}

TEST_CASE("conversion efficiency stays in [0,1] over random parameter draws") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> g(1e-5, 1e-1), p2(0.0, 1e5), L(0.1, 50.0),
      db(-100.0, 100.0);
  for (int i = 0; i < 100000; ++i) {
    double eta = conversion_efficiency(g(rng), p2(rng), L(rng), db(rng));
    REQUIRE(eta >= 0.0);
    REQUIRE(eta <= 1.0);
  }
}

TEST_CASE("matched conversion is periodic in P with the first maximum at pi/2") {
  double gamma = 4e-3, L = 5.0;
  double p_star = kPi / (4.0 * gamma * L);  // 2 gamma P L = pi/2
  double prev = -1.0;
  for (double f = 0.05; f <= 1.0; f += 0.05) {
    double eta = conversion_efficiency(gamma, f * f * p_star * p_star, L, 0.0);
    REQUIRE(eta >= prev);  // increasing up to the first maximum
    prev = eta;
  }
  // periodicity: sin^2 repeats when 2 gamma P L advances by pi
  double p2 = 3.0 * p_star;  // pi/2 -> 3pi/2: same sin^2
  REQUIRE(conversion_efficiency(gamma, p2 * p2, L, 0.0) ==
          Catch::Approx(conversion_efficiency(gamma, p_star * p_star, L, 0.0)).epsilon(1e-9));
}

TEST_CASE("memory efficiency composes the two passes and the filter") {
  FiberSpec f;
  f.gamma_per_w_m = 4e-3;
  ControlSpec c{2.0, 12.0};
  SECTION("unit factors square the conversion") {
    double eta = memory_efficiency(c, c, f, 0.0, 1.0, 1.0, 1.0);
    double conv = conversion_efficiency(f.gamma_per_w_m, c.peak_power_product_w2(), f.length_m, 0.0);
    REQUIRE(eta == Catch::Approx(conv * conv).epsilon(1e-12));
  }
  SECTION("filter factor scales the result exactly") {
    double full = memory_efficiency(c, c, f, 0.0, 0.9, 0.8, 1.0);
    double cut = memory_efficiency(c, c, f, 0.0, 0.9, 0.8, 0.70);
    REQUIRE(cut / full == Catch::Approx(0.70).epsilon(1e-12));
  }
  SECTION("argmax in P coincides with the single-pass argmax") {
    double best_e_mem = 0, best_mem = -1, best_e_conv = 0, best_conv = -1;
    for (double e = 0.1; e <= 3.0; e += 0.01) {
      ControlSpec cc{e, 12.0};
      double conv =
          conversion_efficiency(f.gamma_per_w_m, cc.peak_power_product_w2(), f.length_m, 0.0);
      double mem = memory_efficiency(cc, cc, f, 0.0, 1.0, 1.0, 1.0);
      if (conv > best_conv) { best_conv = conv; best_e_conv = e; }
      if (mem > best_mem) { best_mem = mem; best_e_mem = e; }
    }
    REQUIRE(best_e_mem == Catch::Approx(best_e_conv));
  }
  SECTION("factor range is enforced") {
    REQUIRE_THROWS_AS(memory_efficiency(c, c, f, 0.0, 1.2, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("temporal overlap limits and symmetry") {
  SECTION("flat control limit") {
    REQUIRE(temporal_overlap(5.0, 1e6, 0.0, 0.0) == Catch::Approx(1.0).margin(1e-6));
  }
  SECTION("equal widths give 1/sqrt(2)") {
    REQUIRE(temporal_overlap(7.3, 7.3, 0.0, 0.0) ==
            Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  }
  SECTION("even in the delay offset") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> d(0.1, 30.0);
    for (int i = 0; i < 300; ++i) {
      double s = d(rng), c = d(rng), w = d(rng) * 0.1, off = d(rng);
      REQUIRE(temporal_overlap(s, c, w, off) ==
              Catch::Approx(temporal_overlap(s, c, w, -off)).epsilon(1e-12));
    }
  }
  SECTION("strictly increasing in the control duration") {
    double prev = 0.0;
    for (double c = 2.0; c <= 60.0; c += 0.5) {
      double v = temporal_overlap(5.45, c, 0.9, 3.0);
      REQUIRE(v > prev);
      prev = v;
    }
  }
  SECTION("matches direct quadrature") {
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> d(1.0, 25.0), off(-10.0, 10.0);
    for (int i = 0; i < 8; ++i) {
      double s = d(rng), c = d(rng), w = 0.2 * d(rng), o = off(rng);
      REQUIRE(temporal_overlap(s, c, w, o) ==
              Catch::Approx(oracles::overlap_quadrature(s, c, w, o)).margin(1e-7));
    }
  }
}

TEST_CASE("XPM broadening honors the calibration points and limits") {
  double pref = 38.0;
  SECTION("write pass at the reference power maps 81 to 130") {
    REQUIRE(xpm_broadening(81.0, pref, 130.0 / 81.0, pref) == Catch::Approx(130.0).epsilon(1e-12));
  }
  SECTION("read pass at the reference power maps 130 to 275") {
    REQUIRE(xpm_broadening(130.0, pref, 275.0 / 130.0, pref) ==
            Catch::Approx(275.0).epsilon(1e-12));
  }
  SECTION("zero control power leaves the spectrum untouched") {
    REQUIRE(xpm_broadening(81.0, 0.0, 130.0 / 81.0, pref) == Catch::Approx(81.0));
    REQUIRE(xpm_broadening(81.0, 0.0, 130.0 / 81.0, pref, 0.35) == Catch::Approx(81.0));
  }
  SECTION("monotone non-decreasing in the control power") {
    for (double expnt : {1.0, 0.5, 0.35}) {
      double prev = 0.0;
      for (double p = 0.0; p <= 2.0 * pref; p += 1.0) {
        double v = xpm_broadening(81.0, p, 130.0 / 81.0, pref, expnt);
        REQUIRE(v >= prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("filter transmission") {
  FilterSpec filt;
  filt.fwhm_ghz = 245.5;
  filt.order = 4.0;
  SECTION("narrow line passes") { REQUIRE(filter_transmission(1.0, filt) > 0.999); }
  SECTION("band-pass width conversion from 1.3 nm at 1260 nm") {
    REQUIRE(bandwidth_nm_to_ghz(1.3, 1260.0) == Catch::Approx(245.48).epsilon(2e-3));
  }
  SECTION("monotone decreasing in the spectrum width") {
    double prev = 2.0;
    for (double bw = 20.0; bw <= 600.0; bw += 20.0) {
      double t = filter_transmission(bw, filt);
      REQUIRE(t < prev);
      prev = t;
    }
  }
  SECTION("order-1 filter matches the Gaussian-times-Gaussian closed form") {
    FilterSpec g1 = filt;
    g1.order = 1.0;
    for (double bw : {50.0, 150.0, 275.0, 400.0}) {
      double closed = 1.0 / std::sqrt(1.0 + (bw / g1.fwhm_ghz) * (bw / g1.fwhm_ghz));
      REQUIRE(filter_transmission(bw, g1) == Catch::Approx(closed).margin(1e-6));
    }
  }
}
