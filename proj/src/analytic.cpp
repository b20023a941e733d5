#include "spopo/analytic.hpp"

#include <cmath>
#include <sstream>

#include "spopo/regimes.hpp"

namespace spopo {

namespace {

[[noreturn]] void throw_above_threshold(const char* what, double t, double mu) {
  std::ostringstream os;
  os << what << ": mu(t) = " << mu << " >= 1 at t = " << t << " s (X quadrature diverges)";
  throw AboveThresholdError(os.str(), t, mu);
}

void require_x_below_threshold(const SpopoParams& params, const SampleGrid& grid) {
  const ThresholdCheck check = below_threshold_check(params, grid);
  if (!check.ok) throw_above_threshold("X-quadrature kernel", *check.violation_time, *check.violation_mu);
}

// Comb coefficient of the output quadrature, before the lag decay.
double comb_amplitude(double kappa_s_T_R, double mu, Quadrature q) {
  return q == Quadrature::X ? kappa_s_T_R * 0.5 * mu / (1.0 - mu)
                            : -kappa_s_T_R * 0.5 * mu / (1.0 + mu);
}

// Position within the pulse, in [-T_R/2, T_R/2].
double intra_pulse(double t, double period, long* pulse = nullptr) {
  const double n = std::round(t / period);
  if (pulse) *pulse = static_cast<long>(n);
  return t - n * period;
}

}  // namespace

double kernel_value(const SpopoParams& params, Quadrature q, double t, long lag) {
  const PumpRates r = pump_rates(params, t);
  if (q == Quadrature::X && r.mu >= 1.0) throw_above_threshold("X-quadrature kernel", t, r.mu);
  const double tr = params.round_trip();
  return comb_amplitude(params.kappa_s() * tr, r.mu, q) *
         std::exp(-r.decay(q) * tr * static_cast<double>(std::labs(lag)));
}

CorrelationKernel quadrature_kernel(const SpopoParams& params, Quadrature q, const SampleGrid& grid,
                                    std::size_t max_lag) {
  if (q == Quadrature::X) require_x_below_threshold(params, grid);
  CorrelationKernel k;
  k.quadrature = q;
  k.grid = grid;
  k.max_lag = max_lag;
  k.kappa_s = params.kappa_s();
  k.round_trip = params.round_trip();
  k.mu.resize(grid.size);
  k.delta.assign(grid.size, kVacuumDelta);
  k.comb.resize(grid.size * (max_lag + 1));
  for (std::size_t j = 0; j < grid.size; ++j) {
    const double t = grid.time(j);
    k.mu[j] = pump_parameter(params, t);
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      k.comb[j * (max_lag + 1) + lag] = kernel_value(params, q, t, static_cast<long>(lag));
    }
  }
  return k;
}

double correlated_pulse_count(const SpopoParams& params, Quadrature q) {
  const double t_peak = params.pump().peak_time();
  const PumpRates r = pump_rates(params, t_peak);
  if (q == Quadrature::X && r.mu >= 1.0) throw_above_threshold("correlated pulse count", t_peak, r.mu);
  return 1.0 / (r.decay(q) * params.round_trip());
}

CurrentCorrelation current_correlation(const SpopoParams& params, const HomodyneSetup& homodyne,
                                       double t, double t_prime) {
  homodyne.validate();
  const double tr = params.round_trip();
  CurrentCorrelation c;

  const double t_n = intra_pulse(t, tr);
  double beta2 = 0.0;
  if (homodyne.delta_lo) {
    if (std::abs(t_n - homodyne.delay) <= 1e-12 * tr) beta2 = homodyne.delta_weight;
  } else {
    const double b = homodyne.beta(t_n);
    beta2 = b * b;
  }
  c.delta_weight = beta2;

  const double lag_real = (t - t_prime) / tr;
  const double lag = std::round(lag_real);
  c.lag = static_cast<long>(lag);
  c.aligned = std::abs(lag_real - lag) <= 1e-9;
  if (!c.aligned || beta2 == 0.0) return c;

  const PumpRates r = pump_rates(params, t_n);
  const double dt = std::abs(t - t_prime);
  const double x = params.kappa_s() * tr;
  double comb = 0.0;
  if (homodyne.cos2() > 0.0) {
    if (r.mu >= 1.0) throw_above_threshold("current correlation", t_n, r.mu);
    comb += homodyne.cos2() * x * 2.0 * r.mu / (1.0 - r.mu) * std::exp(-r.kappa_minus * dt);
  }
  if (homodyne.sin2() > 0.0) {
    comb -= homodyne.sin2() * x * 2.0 * r.mu / (1.0 + r.mu) * std::exp(-r.kappa_plus * dt);
  }
  c.comb_weight = beta2 * comb;
  return c;
}

double SmoothKernel::at(double tau) const { return amplitude * std::exp(-decay * std::abs(tau)); }

namespace {

void check_averaging_regime(const SpopoParams& params, double detector_time) {
  const double tr = params.round_trip();
  if (!(detector_time >= 10.0 * tr && detector_time * params.kappa_s() <= 0.1)) {
    std::ostringstream os;
    os << "detector averaging assumes T_R << T_D << 1/kappa_s (T_D = " << detector_time
       << " s, T_R = " << tr << " s, 1/kappa_s = " << 1.0 / params.kappa_s() << " s)";
    warn(os.str());
  }
}

}  // namespace

AveragedCorrelation averaged_current_correlation(const SpopoParams& params,
                                                 const HomodyneSetup& homodyne, double tau) {
  homodyne.validate();
  check_averaging_regime(params, homodyne.detector_time);
  const double tr = params.round_trip();
  const double ks = params.kappa_s();
  const bool want_x = homodyne.cos2() > 0.0;

  AveragedCorrelation out;
  auto accumulate = [&](double t, double beta2) {
    const PumpRates r = pump_rates(params, t);
    out.mean_current += beta2;
    if (want_x) {
      if (r.mu >= 1.0) throw_above_threshold("averaged X correlation", t, r.mu);
      out.a_minus += beta2 * 2.0 * r.mu / (1.0 - r.mu) * std::exp(-r.kappa_minus * std::abs(tau));
    }
    out.a_plus += beta2 * 2.0 * r.mu / (1.0 + r.mu) * std::exp(-r.kappa_plus * std::abs(tau));
  };

  if (homodyne.delta_lo) {
    accumulate(homodyne.delay, homodyne.delta_weight);
  } else {
    const SampleGrid grid = lo_grid(homodyne, tr);
    for (std::size_t j = 0; j < grid.size; ++j) {
      const double t = grid.time(j);
      const double b = homodyne.beta(t);
      if (b != 0.0) accumulate(t, b * b * grid.bin_width);
    }
  }
  out.mean_current /= tr;
  out.a_minus /= tr;
  out.a_plus /= tr;
  out.smooth = ks * (homodyne.cos2() * out.a_minus - homodyne.sin2() * out.a_plus);
  return out;
}

SmoothKernel delta_lo_kernel(const SpopoParams& params, Quadrature q, double t0) {
  const PumpRates r = pump_rates(params, t0);
  const double ks = params.kappa_s();
  if (q == Quadrature::X) {
    if (r.mu >= 1.0) throw_above_threshold("delta-LO X correlation", t0, r.mu);
    return {ks * 2.0 * r.mu / (1.0 - r.mu), r.kappa_minus};
  }
  return {-ks * 2.0 * r.mu / (1.0 + r.mu), r.kappa_plus};
}

SmoothKernel near_threshold_limit(const SpopoParams& params, Quadrature q) {
  const double t0 = params.pump().peak_time();
  const double mu0 = pump_parameter(params, t0);
  const double ks = params.kappa_s();
  if (1.0 - mu0 > 0.1) {
    warn("near-threshold limit used with 1 - mu(0) = " + std::to_string(1.0 - mu0));
  }
  if (q == Quadrature::X) {
    if (mu0 >= 1.0) throw_above_threshold("near-threshold X correlation", t0, mu0);
    return {ks / (1.0 - mu0), ks * (1.0 - mu0)};
  }
  return {-ks, 2.0 * ks};
}

NearThresholdLimits near_threshold_limits(const SpopoParams& params) {
  return {near_threshold_limit(params, Quadrature::X), near_threshold_limit(params, Quadrature::Y)};
}

}  // namespace spopo
