#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "spopo/spectra.hpp"

using namespace spopo;

namespace {

constexpr double pi = std::numbers::pi;

// Direct symmetric comb sum in long double, ascending m.
double oracle_comb(double x, double mu, bool y, double theta, long m_max) {
  const long double c = x * (y ? 1.0L + mu : 1.0L - mu);
  long double s = 0.0L;
  for (long m = -m_max; m <= m_max; ++m) {
    const long double d = theta - 2.0L * std::numbers::pi_v<long double> * m;
    s += 4.0L * x * x * mu / (c * c + d * d);
  }
  return static_cast<double>(s);
}

// Infinite comb in closed form: sum_m 2c / (c^2 + (theta - 2 pi m)^2) = sinh c / (cosh c - cos theta).
double closed_comb(double x, double mu, bool y, double theta) {
  const double c = x * (y ? 1.0 + mu : 1.0 - mu);
  return 2.0 * x * x * mu / c * std::sinh(c) / (std::cosh(c) - std::cos(theta));
}

// Bound on the neglected tail for theta in [0, 2 pi].
double tail_bound(double x, double mu, long m_max) {
  return 2.0 * x * x * mu / (pi * pi * static_cast<double>(m_max - 1));
}

const std::vector<double> kLines{0.0, pi, 2 * pi};

}  // namespace

TEST_CASE("comb sum against direct summation and the closed form") {
  for (double x : {0.1, 0.03}) {
    for (double mu : {0.2, 0.9, 1.0}) {
      for (bool y : {true, false}) {
        if (!y && mu >= 1.0) continue;
        for (double theta : {0.0, 0.3, pi, 5.0, 2 * pi}) {
          for (long m : {10L, 100L, 1000L}) {
            const double got = comb_sum(x, 1.0, mu, y ? Quadrature::Y : Quadrature::X, theta, m);
            CHECK(got == doctest::Approx(oracle_comb(x, mu, y, theta, m)).epsilon(1e-13));
            CHECK(std::abs(got - closed_comb(x, mu, y, theta)) <= tail_bound(x, mu, m));
          }
        }
      }
    }
  }
}

TEST_CASE("comb sum scales with the round trip") {
  // kappa_s, T_R -> kappa_s / s, s T_R with omega -> omega / s leaves the sum unchanged up to
  // the overall kappa_s^2 / kappa_s^2 ratio
  const double a = comb_sum(0.1, 1.0, 0.7, Quadrature::Y, 0.4, 200);
  const double b = comb_sum(0.1e9, 1e-9, 0.7, Quadrature::Y, 0.4e9, 200);
  CHECK(b == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("truncation defaults and bound") {
  CHECK(default_comb_truncation(0.1) == 100);
  CHECK(default_comb_truncation(0.01) == 1000);
  CHECK(default_comb_truncation(0.3) == 34);
  CHECK(comb_truncation_bound(0.1, 100) == doctest::Approx(0.01 / (pi * pi * 100)));
  CHECK_THROWS_AS(default_comb_truncation(0.0), ParameterError);
}

TEST_CASE("short LO spectrum: frozen values") {
  const SpectrumSeries s = noise_spectrum_short_lo(1.0, 0.1, std::vector<double>{0.0, pi / 0.1, 2 * pi / 0.1}, 100);
  REQUIRE(s.values.size() == 3);
  CHECK(std::abs(s.values[0] - -0.0033109499728) <= 1e-12);
  CHECK(std::abs(s.values[1] - 0.99005336429) <= 1e-10);
  CHECK(std::abs(s.values[2] - -0.0033109479764) <= 1e-12);
  CHECK(s.has_negative);
  CHECK(s.m_max == 100);
}

TEST_CASE("short LO spectrum: squeezing at every comb line") {
  for (double x : {0.1, 0.01}) {
    std::vector<double> omega;
    for (int m = 0; m <= 2; ++m) omega.push_back(2 * pi * m);
    const SpectrumSeries s = noise_spectrum_short_lo(x, 1.0, omega);
    CHECK(s.m_max == default_comb_truncation(x));
    for (double v : s.values) CHECK(std::abs(v) <= x * x);
  }
}

TEST_CASE("short LO spectrum: comb periodicity") {
  const double x = 0.1;
  for (double theta : {0.0, 0.05, 0.3, 1.0, pi}) {
    const std::vector<double> w{theta, theta + 2 * pi};
    const SpectrumSeries s = noise_spectrum_short_lo(x, 1.0, w, 100);
    const double scale = std::max(std::abs(s.values[0]), x * x);
    CHECK(std::abs(s.values[1] - s.values[0]) <= 1e-3 * scale);
  }
}

TEST_CASE("short LO spectrum decreases monotonically with m_max") {
  const std::vector<double> w{0.0, 1.0, pi};
  std::vector<double> prev = noise_spectrum_short_lo(0.1, 1.0, w, 1).values;
  for (std::size_t m : {2, 5, 10, 50, 100, 400}) {
    const std::vector<double> cur = noise_spectrum_short_lo(0.1, 1.0, w, m).values;
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(cur[i] < prev[i]);
    prev = cur;
  }
}

TEST_CASE("delta LO full spectrum: frozen values and general short form") {
  const SpopoParams p = normalized_params(0.1, 0.9, 0.02);
  const SpectrumSeries s = noise_spectrum_full(p, delta_lo_setup(pi / 2), kLines, Quadrature::Y);
  CHECK(std::abs(s.values[0] - -0.00020997) <= 1e-8);
  CHECK(std::abs(s.values[1] - 0.99104512) <= 1e-8);
  CHECK(std::abs(s.values[2] - -0.00020996) <= 1e-8);
  const SpectrumSeries g = noise_spectrum_short_lo_general(0.1, 1.0, 0.9, Quadrature::Y, kLines);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.values[i] == doctest::Approx(s.values[i]).epsilon(1e-12));
  for (std::size_t i = 0; i < 3; ++i) {
    const double oracle = 1.0 - oracle_comb(0.1, 0.9, true, kLines[i], 100);
    CHECK(s.values[i] == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("X spectrum is amplified, Y squeezed, vacuum flat") {
  const std::vector<double> w = linear_grid(0.0, 2 * pi, 41);
  const SpopoParams p = normalized_params(0.1, 0.7, 0.02);
  const SpectrumSeries sx = noise_spectrum_full(p, delta_lo_setup(0.0), w, Quadrature::X);
  const SpectrumSeries sy = noise_spectrum_full(p, delta_lo_setup(pi / 2), w, Quadrature::Y);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(sx.values[i] > 1.0);
    CHECK(sy.values[i] < 1.0);
  }
  const SpectrumSeries vac = noise_spectrum_full(normalized_params(0.1, 0.0, 0.02), delta_lo_setup(pi / 2), w,
                                                 Quadrature::Y);
  for (double v : vac.values) CHECK(v == 1.0);
  CHECK_FALSE(vac.has_negative);
}

TEST_CASE("far from the comb lines S tends to shot noise") {
  // high finesse: midway between lines the dip contributes O(kappa_s T_R)
  const SpectrumSeries s = noise_spectrum_short_lo_general(0.001, 1.0, 0.9, Quadrature::Y, std::vector<double>{pi});
  CHECK(s.values[0] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("squeezing at zero frequency deepens with the pump") {
  double prev = 1.0;
  for (double mu = 0.05; mu < 1.0; mu += 0.05) {
    const double v = noise_spectrum_full(normalized_params(0.1, mu, 0.02), delta_lo_setup(pi / 2),
                                         std::vector<double>{0.0}, Quadrature::Y)
                         .values[0];
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("Gaussian LO spectrum is the beta^2-weighted average") {
  const SpopoParams p = normalized_params(0.1, 0.9, 0.02);
  const double tau_lo = 0.01;
  const HomodyneSetup h = gaussian_lo_setup(1.0, tau_lo, pi / 2);
  const SpectrumSeries s = noise_spectrum_full(p, h, kLines, Quadrature::Y, 400);
  // oracle: Simpson over +-8 tau_lo with the closed-form comb
  for (std::size_t i = 0; i < kLines.size(); ++i) {
    const int n = 4000;
    const double a = -8 * tau_lo, dt = 16 * tau_lo / n;
    double num = 0.0, den = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double t = a + k * dt;
      const double wgt = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      const double b2 = std::exp(-2 * t * t / (tau_lo * tau_lo));
      const double mu = 0.9 * std::exp(-t * t / (0.02 * 0.02));
      num += wgt * b2 * (1.0 - closed_comb(0.1, mu, true, kLines[i]));
      den += wgt * b2;
    }
    CHECK(s.values[i] == doctest::Approx(num / den).epsilon(5e-5));
  }
}

TEST_CASE("X spectrum refuses pumps at threshold") {
  const SpopoParams p = normalized_params(0.1, 1.2, 0.02);
  CHECK_THROWS_AS(noise_spectrum_full(p, delta_lo_setup(0.0), kLines, Quadrature::X), AboveThresholdError);
  CHECK_NOTHROW(noise_spectrum_full(p, delta_lo_setup(pi / 2), kLines, Quadrature::Y));
  CHECK_THROWS_AS(noise_spectrum_short_lo_general(0.1, 1.0, 1.0, Quadrature::X, kLines), AboveThresholdError);
}

TEST_CASE("serial and parallel evaluation agree bit for bit") {
  const SpopoParams p = normalized_params(0.1, 0.9, 0.02);
  const HomodyneSetup h = gaussian_lo_setup(1.0, 0.01, pi / 2, 0.003);
  const std::vector<double> w = linear_grid(0.0, 4 * pi, 97);
  const SpectrumSeries a = noise_spectrum_full(p, h, w, Quadrature::Y, 0, Execution::serial);
  const SpectrumSeries b = noise_spectrum_full(p, h, w, Quadrature::Y, 0, Execution::parallel);
  REQUIRE(a.values.size() == b.values.size());
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(a.values[i] == b.values[i]);
}

TEST_CASE("averaged spectrum") {
  const std::vector<double> w{0.0, 2.0, 1e9};
  const SpectrumSeries s = averaged_spectrum(1.0, w);
  CHECK(s.values[0] == 0.0);
  CHECK(s.values[1] == doctest::Approx(0.5));
  CHECK(s.values[2] == doctest::Approx(1.0));
}

TEST_CASE("Fourier transform of the near-threshold correlation") {
  const SpopoParams p = normalized_params(1.0, 0.999, 0.05);
  set_warning_handler([](const std::string&) {});
  const SmoothKernel y = near_threshold_limit(p, Quadrature::Y);
  set_warning_handler(nullptr);
  const std::vector<double> w = linear_grid(0.0, 20.0, 201);
  const SpectrumSeries ref = averaged_spectrum(p.kappa_s(), w);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(std::abs(spectrum_from_correlation(y, w[i]) - ref.values[i]) <= 1e-6);
  }
  // a generic kernel: 1 + 2 a d / (d^2 + w^2)
  const SmoothKernel k{0.7, 0.3};
  for (double omega : {0.0, 0.1, 1.0, 10.0}) {
    CHECK(spectrum_from_correlation(k, omega) ==
          doctest::Approx(1.0 + 2 * 0.7 * 0.3 / (0.09 + omega * omega)).epsilon(1e-10));
  }
}

TEST_CASE("detector response") {
  const std::vector<double> w{0.0, 1.0, 2 * pi / 0.5};
  const SpectrumSeries s = averaged_spectrum(0.2, w);
  const SpectrumSeries same = apply_detector_response(s, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(same.values[i] == s.values[i]);
  const SpectrumSeries box = apply_detector_response(s, 0.5);
  CHECK(box.values[2] == doctest::Approx(0.0).epsilon(1e-30));
  CHECK(box.detector_time == 0.5);
  const double h = std::sin(0.25) / 0.25;
  CHECK(box.values[1] == doctest::Approx(s.values[1] * h * h).epsilon(1e-14));
  CHECK(detector_gain(DetectorResponse::first_order, 0.5, 2.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(apply_detector_response(s, -1.0), ParameterError);
  // T_R << T_D << 1/kappa_s: comb lines suppressed, dip kept
  const double tr = 1.0, td = 30.0, ks = 1e-3;
  CHECK(detector_gain(DetectorResponse::boxcar, td, 2 * pi / tr) <= std::pow(tr / (pi * td), 2));
  CHECK(detector_gain(DetectorResponse::boxcar, td, ks) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("LO sweep properties") {
  const SpopoParams p = normalized_params(0.1, 0.9, 0.02);
  const HomodyneSetup tmpl = gaussian_lo_setup(1.0, 0.005, pi / 2);
  SweepSpec dur;
  dur.variable = SweepVariable::lo_duration;
  dur.values = {0.0, 1e-5, 1e-4, 0.001, 0.003, 0.01, 0.02, 0.05};
  const std::vector<SweepRow> r = lo_sweep(p, tmpl, dur);
  REQUIRE(r.size() == dur.values.size());
  const double delta = noise_spectrum_full(p, delta_lo_setup(pi / 2), std::vector<double>{0.0}, Quadrature::Y)
                           .values[0];
  CHECK(r[0].squeezed_noise == delta);
  CHECK(std::abs(r[1].squeezed_noise - delta) <= 1e-3);
  for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].squeezed_noise >= r[i - 1].squeezed_noise);

  SweepSpec del;
  del.variable = SweepVariable::lo_delay;
  del.values = {-0.03, -0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02, 0.03};
  const std::vector<SweepRow> d = lo_sweep(p, tmpl, del);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (std::abs(del.values[k]) > std::abs(del.values[i]) + 1e-15) {
        CHECK(d[k].squeezed_noise >= d[i].squeezed_noise);
      }
    }
  }
  dur.values = {-1.0};
  CHECK_THROWS_AS(lo_sweep(p, tmpl, dur), ParameterError);
}

TEST_CASE("linear grid") {
  const std::vector<double> g = linear_grid(1.0, 2.0, 5);
  CHECK(g.size() == 5);
  CHECK(g.front() == 1.0);
  CHECK(g.back() == 2.0);
  CHECK(g[2] == 1.5);
  CHECK(linear_grid(0.0, 1.0, 0).empty());
}

TEST_CASE("non-finite frequencies are rejected") {
  CHECK_THROWS_AS(averaged_spectrum(1.0, std::vector<double>{NAN}), ParameterError);
}
