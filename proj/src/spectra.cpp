#include "spopo/spectra.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "spopo/regimes.hpp"

namespace spopo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_omega(std::span<const double> omega) {
  for (double w : omega) {
    if (!std::isfinite(w)) throw ParameterError("frequency grid contains a non-finite value");
  }
}

SpectrumSeries make_series(std::string kind, Quadrature q, std::span<const double> omega,
                           std::size_t m_max, double kappa_s, double round_trip) {
  SpectrumSeries s;
  s.kind = std::move(kind);
  s.quadrature = q;
  s.omega.assign(omega.begin(), omega.end());
  s.values.assign(omega.size(), 0.0);
  s.m_max = m_max;
  s.kappa_s = kappa_s;
  s.round_trip = round_trip;
  return s;
}

void finish(SpectrumSeries& s) {
  s.has_negative = std::any_of(s.values.begin(), s.values.end(), [](double v) { return v < 0.0; });
}

std::size_t resolve_truncation(std::size_t m_max, double kappa_s_T_R) {
  return m_max == 0 ? default_comb_truncation(kappa_s_T_R) : m_max;
}

}  // namespace

std::size_t default_comb_truncation(double kappa_s_T_R) {
  if (!(kappa_s_T_R > 0.0)) throw ParameterError("kappa_s*T_R must be > 0");
  return static_cast<std::size_t>(std::ceil(10.0 / kappa_s_T_R));
}

double comb_truncation_bound(double kappa_s_T_R, std::size_t m_max) {
  return kappa_s_T_R * kappa_s_T_R / (std::numbers::pi * std::numbers::pi * static_cast<double>(m_max));
}

double comb_sum(double kappa_s, double round_trip, double mu, Quadrature q, double omega,
                std::size_t m_max) {
  const double rate = kappa_s * (q == Quadrature::Y ? 1.0 + mu : 1.0 - mu);
  const double r2 = rate * rate;
  const double numerator = 4.0 * kappa_s * kappa_s * mu;
  const double spacing = kTwoPi / round_trip;
  // Outermost lines first so the small terms are summed before the large ones.
  double sum = 0.0;
  for (std::size_t k = m_max; k >= 1; --k) {
    const double line = spacing * static_cast<double>(k);
    const double lo = omega - line;
    const double hi = omega + line;
    sum += numerator / (r2 + lo * lo) + numerator / (r2 + hi * hi);
  }
  sum += numerator / (r2 + omega * omega);
  return sum;
}

SpectrumSeries noise_spectrum_full(const SpopoParams& params, const HomodyneSetup& homodyne,
                                   std::span<const double> omega, Quadrature q, std::size_t m_max,
                                   Execution exec) {
  homodyne.validate();
  check_omega(omega);
  const double tr = params.round_trip();
  const double ks = params.kappa_s();
  const std::size_t truncation = resolve_truncation(m_max, ks * tr);

  // beta^2-weighted samples of mu over the LO support.
  std::vector<double> weight;
  std::vector<double> mu;
  if (homodyne.delta_lo) {
    weight.push_back(1.0);
    mu.push_back(pump_parameter(params, homodyne.delay));
  } else {
    const SampleGrid grid = lo_grid(homodyne, tr);
    for (std::size_t j = 0; j < grid.size; ++j) {
      const double t = grid.time(j);
      const double b = homodyne.beta(t);
      if (b == 0.0) continue;
      weight.push_back(b * b);
      mu.push_back(pump_parameter(params, t));
    }
  }
  double total = 0.0;
  for (double w : weight) total += w;
  if (!(total > 0.0)) throw ParameterError("LO has no weight inside the period");

  if (q == Quadrature::X) {
    for (std::size_t j = 0; j < mu.size(); ++j) {
      if (mu[j] >= 1.0) {
        throw AboveThresholdError("X-quadrature spectrum above threshold", homodyne.delay, mu[j]);
      }
    }
  }

  SpectrumSeries s = make_series("full", q, omega, truncation, ks, tr);
  const double sign = q == Quadrature::Y ? -1.0 : 1.0;
  const auto n = static_cast<std::ptrdiff_t>(omega.size());
  auto evaluate = [&](std::ptrdiff_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      acc += weight[j] * comb_sum(ks, tr, mu[j], q, omega[i], truncation);
    }
    s.values[i] = 1.0 + sign * acc / total;
  };
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) evaluate(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) evaluate(i);
  }
  finish(s);
  return s;
}

SpectrumSeries noise_spectrum_short_lo(double kappa_s, double round_trip,
                                       std::span<const double> omega, std::size_t m_max) {
  if (!(kappa_s > 0.0) || !(round_trip > 0.0)) throw ParameterError("kappa_s and T_R must be > 0");
  check_omega(omega);
  const std::size_t truncation = resolve_truncation(m_max, kappa_s * round_trip);
  SpectrumSeries s = make_series("short_lo", Quadrature::Y, omega, truncation, kappa_s, round_trip);
  // mu = 1 in the Y comb gives exactly the 4 kappa_s^2 / (4 kappa_s^2 + ...) lines.
  for (std::size_t i = 0; i < omega.size(); ++i) {
    s.values[i] = 1.0 - comb_sum(kappa_s, round_trip, 1.0, Quadrature::Y, omega[i], truncation);
  }
  finish(s);
  return s;
}

SpectrumSeries noise_spectrum_short_lo_general(double kappa_s, double round_trip, double mu0,
                                               Quadrature q, std::span<const double> omega,
                                               std::size_t m_max) {
  if (!(kappa_s > 0.0) || !(round_trip > 0.0)) throw ParameterError("kappa_s and T_R must be > 0");
  if (!(mu0 >= 0.0)) throw ParameterError("mu(0) must be >= 0");
  if (q == Quadrature::X && mu0 >= 1.0) {
    throw AboveThresholdError("X-quadrature spectrum above threshold", 0.0, mu0);
  }
  check_omega(omega);
  const std::size_t truncation = resolve_truncation(m_max, kappa_s * round_trip);
  SpectrumSeries s = make_series("short_lo_general", q, omega, truncation, kappa_s, round_trip);
  const double sign = q == Quadrature::Y ? -1.0 : 1.0;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    s.values[i] = 1.0 + sign * comb_sum(kappa_s, round_trip, mu0, q, omega[i], truncation);
  }
  finish(s);
  return s;
}

SpectrumSeries averaged_spectrum(double kappa_s, std::span<const double> omega) {
  if (!(kappa_s > 0.0)) throw ParameterError("kappa_s must be > 0");
  check_omega(omega);
  SpectrumSeries s = make_series("averaged", Quadrature::Y, omega, 0, kappa_s, 0.0);
  const double k2 = 4.0 * kappa_s * kappa_s;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    s.values[i] = 1.0 - k2 / (k2 + omega[i] * omega[i]);
  }
  finish(s);
  return s;
}

double spectrum_from_correlation(const SmoothKernel& kernel, double omega) {
  if (!(kernel.decay > 0.0)) throw ParameterError("correlation decay rate must be > 0");
  using boost::math::quadrature::gauss_kronrod;
  // exp(-60) is far below double resolution relative to the integral.
  const double horizon = 60.0 / kernel.decay;
  const auto integrand = [&](double tau) { return kernel.at(tau) * std::cos(omega * tau); };
  // Fixed 61-point panels no wider than one oscillation or one decay length;
  // the integrand is smooth on each, so no adaptivity is needed (relative
  // tolerances never converge where the integral is near zero).
  const double period = omega > 0.0 ? kTwoPi / omega : horizon;
  const double panel = std::min({horizon, period, 1.0 / kernel.decay});
  const auto n_panels = static_cast<std::size_t>(std::ceil(horizon / panel));
  double sum = 0.0;
  for (std::size_t i = 0; i < n_panels; ++i) {
    const double a = static_cast<double>(i) * panel;
    const double b = std::min(a + panel, horizon);
    sum += gauss_kronrod<double, 61>::integrate(integrand, a, b, 0);
  }
  return 1.0 + 2.0 * sum;
}

double detector_gain(DetectorResponse kind, double detector_time, double omega) {
  if (!(detector_time >= 0.0)) throw ParameterError("detector response time must be >= 0");
  if (detector_time == 0.0) return 1.0;
  const double x = omega * detector_time;
  switch (kind) {
    case DetectorResponse::boxcar: {
      const double h = 0.5 * x;
      const double sinc = std::abs(h) < 1e-8 ? 1.0 - h * h / 6.0 : std::sin(h) / h;
      return sinc * sinc;
    }
    case DetectorResponse::first_order:
      return 1.0 / (1.0 + x * x);
  }
  return 1.0;
}

SpectrumSeries apply_detector_response(const SpectrumSeries& spectrum, double detector_time,
                                       DetectorResponse kind) {
  if (!(detector_time >= 0.0)) throw ParameterError("detector response time must be >= 0");
  SpectrumSeries out = spectrum;
  out.detector_time = detector_time;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] *= detector_gain(kind, detector_time, out.omega[i]);
  }
  finish(out);
  return out;
}

std::vector<SweepRow> lo_sweep(const SpopoParams& params, const HomodyneSetup& homodyne_template,
                               const SweepSpec& sweep, std::size_t m_max) {
  const double zero = 0.0;
  std::vector<SweepRow> rows;
  rows.reserve(sweep.values.size());
  for (double v : sweep.values) {
    HomodyneSetup h = homodyne_template;
    if (sweep.variable == SweepVariable::lo_duration) {
      if (!(v >= 0.0)) throw ParameterError("swept LO duration must be >= 0");
      if (v == 0.0) {
        h.delta_lo = true;
      } else {
        h.delta_lo = false;
        h.lo = make_gaussian(1.0, v);
      }
    } else {
      h.delay = v;
    }
    const SpectrumSeries s =
        noise_spectrum_full(params, h, std::span<const double>(&zero, 1), Quadrature::Y, m_max);
    rows.push_back({v, s.values.front()});
  }
  return rows;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {lo};
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace spopo
