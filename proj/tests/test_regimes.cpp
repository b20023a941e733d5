#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "spopo/regimes.hpp"

using namespace spopo;

namespace {

constexpr double fs = 1e-15;
constexpr double mm = 1e-3;

CrystalSpec bbo_like() {
  CrystalSpec c;
  c.length = 0.1 * mm;
  c.inv_group_velocity_pump = 5700 * fs / mm;
  c.inv_group_velocity_signal = 5500 * fs / mm;
  c.gvd_pump = 330 * fs * fs / mm;
  c.gvd_signal = 180 * fs * fs / mm;
  c.coupling = 0.106 / mm;
  c.pump_peak_amplitude = 1.0;
  c.tau_pump = 100 * fs;
  return c;
}

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

}  // namespace

TEST_CASE("threshold peak flux") {
  CHECK(threshold_peak_flux(2.0, 1.0) == 1.0);
  CHECK(threshold_peak_flux(1.0, 0.5) == 1.0);
  CHECK(threshold_peak_flux(3.0, 0.7) / threshold_peak_flux(3.0, 1.4) == doctest::Approx(4.0));
  CHECK_THROWS_AS(threshold_peak_flux(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(threshold_peak_flux(1.0, -1.0), ParameterError);
}

TEST_CASE("below threshold check") {
  CHECK(below_threshold_check(normalized_params(0.1, 0.0, 0.05)).ok);
  const ThresholdCheck ok = below_threshold_check(normalized_params(0.1, 0.9, 0.05));
  CHECK(ok.ok);
  CHECK(ok.max_mu == doctest::Approx(0.9));
  const ThresholdCheck bad = below_threshold_check(normalized_params(0.1, 1.2, 0.05));
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violation_time);
  // mu(t) = 1.2 exp(-t^2/tau^2) >= 1 for |t| <= tau sqrt(ln 1.2)
  const double edge = 0.05 * std::sqrt(std::log(1.2));
  CHECK(*bad.violation_time <= 0.0);
  CHECK(*bad.violation_time >= -edge - 1e-3);
  CHECK(*bad.violation_mu >= 1.0);
}

TEST_CASE("threshold check is translation invariant") {
  const SpopoParams p = normalized_params(0.1, 0.999, 0.01);
  for (double shift : {0.0, 0.0123, -0.2, 0.3}) {
    const SpopoParams q = p.with_pump(make_gaussian(p.pump().peak(), 0.01, shift, 1.0));
    const ThresholdCheck c = below_threshold_check(q, make_grid(1.0, 37));
    CHECK(c.ok);
    CHECK(c.max_mu == doctest::Approx(0.999));
    const SpopoParams over = q.with_pump(q.pump().scaled(1.01));
    CHECK_FALSE(below_threshold_check(over, make_grid(1.0, 37)).ok);
  }
}

TEST_CASE("mean flux closed forms") {
  const double T = 1e-8;
  // constant envelope: tabulated flat
  const PulseEnvelope flat = make_tabulated(std::vector<double>(8, 3.0), T / 8, T);
  CHECK(rel_close(mean_flux(flat, T), 9.0, 1e-12));

  // Gaussian: (1/T) int a^2 exp(-2 t^2/tau^2) = a^2 tau sqrt(pi/2) / T
  const double a = 2.0, tau = 1e-10;
  const double closed = a * a * tau * std::sqrt(std::numbers::pi / 2) / T;
  const double n512 = mean_flux(make_gaussian(a, tau, 0.0, T), T, make_grid(T, 512));
  CHECK(rel_close(n512, closed, 1e-6));
  CHECK(rel_close(mean_flux(make_gaussian(a, tau, 0.0, T), T), closed, 1e-6));

  // tau_p / T_R = 1e-5
  const double ratio = mean_flux(make_gaussian(1.0, 1e-5 * T, 0.0, T), T) / 1.0;
  CHECK(ratio == doctest::Approx(1.2533e-5).epsilon(1e-4));
}

TEST_CASE("mean flux never exceeds peak flux") {
  for (double tau : {0.01, 0.1, 0.3, 1.0}) {
    const PulseEnvelope e = make_gaussian(1.5, tau, 0.0, 1.0);
    CHECK(mean_flux(e, 1.0) < 1.5 * 1.5);
  }
}

TEST_CASE("characteristic lengths against hand arithmetic") {
  CrystalSpec c = bbo_like();
  c.inv_group_velocity_signal = c.inv_group_velocity_pump - 100 * fs / mm;
  const RegimeReport r = characteristic_lengths(c);
  const double tau = 100 * fs;
  CHECK(rel_close(r.walkoff_length, tau / (100 * fs / mm), 1e-12));
  CHECK(rel_close(r.walkoff_length, 1 * mm, 1e-12));
  CHECK(rel_close(r.dispersion_length_pump, tau * tau / (2 * 330 * fs * fs / mm), 1e-12));
  CHECK(rel_close(r.dispersion_length_signal, tau * tau / (2 * 180 * fs * fs / mm), 1e-12));
  CHECK(rel_close(r.nonlinear_length, 1.0 / (2 * 0.106 / mm), 1e-12));
  CHECK(r.nonlinear_length / mm == doctest::Approx(4.717).epsilon(1e-3));
  CHECK(rel_close(r.dispersion_time_signal, 6 * fs, 1e-12));
}

TEST_CASE("worked BBO-like crystal is in the thin-crystal regime") {
  const RegimeReport r = characteristic_lengths(bbo_like());
  CHECK(r.walkoff_length / mm == doctest::Approx(0.5));
  CHECK(r.ordering_ok);
  CHECK(r.violated.empty());
}

TEST_CASE("ordering check reports ties and violations") {
  CrystalSpec c = bbo_like();
  c.length = 1 * mm;  // l > L_GV = 0.5 mm
  RegimeReport r = characteristic_lengths(c);
  CHECK_FALSE(r.ordering_ok);
  CHECK_FALSE(r.violated.empty());

  // exact tie L_NL == L_GV on a strict inequality, with representable inputs
  CrystalSpec t;
  t.length = 0.125;
  t.inv_group_velocity_pump = 3.0;
  t.inv_group_velocity_signal = 1.0;
  t.tau_pump = 1.0;
  t.gvd_pump = 1e-3;
  t.gvd_signal = 1e-3;
  t.coupling = 1.0;
  t.pump_peak_amplitude = 1.0;
  r = characteristic_lengths(t);
  CHECK(r.walkoff_length == 0.5);
  CHECK(r.nonlinear_length == 0.5);
  CHECK_FALSE(r.ordering_ok);
  t.pump_peak_amplitude = 0.5;
  CHECK(characteristic_lengths(t).ordering_ok);

  c = bbo_like();
  c.length = characteristic_lengths(c).walkoff_length;  // l <= L_GV allows equality
  CHECK(characteristic_lengths(c).ordering_ok);
}

TEST_CASE("infinite lengths") {
  CrystalSpec c = bbo_like();
  c.inv_group_velocity_signal = c.inv_group_velocity_pump;
  c.gvd_pump = 0.0;
  c.gvd_signal = 0.0;
  c.pump_peak_amplitude = 0.0;
  const RegimeReport r = characteristic_lengths(c);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(r.walkoff_length == inf);
  CHECK(r.dispersion_length_pump == inf);
  CHECK(r.dispersion_length_signal == inf);
  CHECK(r.nonlinear_length == inf);
  CHECK(r.dispersion_time_signal == 0.0);
  // inf < inf fails the strict chain
  CHECK_FALSE(r.ordering_ok);
}

TEST_CASE("length scaling laws") {
  CrystalSpec c = bbo_like();
  const RegimeReport r1 = characteristic_lengths(c);
  c.pump_peak_amplitude *= 2;
  CHECK(characteristic_lengths(c).nonlinear_length == doctest::Approx(r1.nonlinear_length / 2));
  c = bbo_like();
  c.tau_pump *= 3;
  c.tau_signal = 3 * 100 * fs;
  const RegimeReport r3 = characteristic_lengths(c);
  CHECK(r3.dispersion_length_pump == doctest::Approx(9 * r1.dispersion_length_pump));
  CHECK(r3.dispersion_length_signal == doctest::Approx(9 * r1.dispersion_length_signal));
}

TEST_CASE("crystal validation") {
  CrystalSpec c = bbo_like();
  c.length = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = bbo_like();
  c.gvd_signal = -1.0;
  CHECK_THROWS_AS(characteristic_lengths(c), ParameterError);
  c = bbo_like();
  c.coupling = 0.0;
  CHECK_THROWS_AS(characteristic_lengths(c), ParameterError);
}
