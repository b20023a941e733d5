#include "spopo/regimes.hpp"

#include <cmath>
#include <limits>

namespace spopo {

double threshold_peak_flux(double kappa_s, double g) {
  if (!(kappa_s > 0.0)) throw ParameterError("kappa_s must be > 0");
  if (!(g > 0.0)) throw ParameterError("g must be > 0");
  return kappa_s * kappa_s / (4.0 * g * g);
}

ThresholdCheck below_threshold_check(const SpopoParams& params) {
  return below_threshold_check(params, default_grid(params.pump()));
}

ThresholdCheck below_threshold_check(const SpopoParams& params, const SampleGrid& grid) {
  ThresholdCheck result;
  const double t_peak = params.pump().peak_time();
  const double mu_peak = pump_parameter(params, t_peak);
  result.max_mu = mu_peak;
  for (std::size_t j = 0; j < grid.size; ++j) {
    const double t = grid.time(j);
    const double mu = pump_parameter(params, t);
    result.max_mu = std::max(result.max_mu, mu);
    if (mu >= 1.0 && !result.violation_time) {
      result.violation_time = t;
      result.violation_mu = mu;
    }
  }
  if (mu_peak >= 1.0 && (!result.violation_time || t_peak < *result.violation_time)) {
    result.violation_time = t_peak;
    result.violation_mu = mu_peak;
  }
  result.ok = result.max_mu < 1.0;
  return result;
}

double mean_flux(const PulseEnvelope& pump, double round_trip) {
  return mean_flux(pump, round_trip, default_grid(pump));
}

double mean_flux(const PulseEnvelope& pump, double round_trip, const SampleGrid& grid) {
  if (!(round_trip > 0.0)) throw ParameterError("T_R must be > 0");
  const double integral = integrate(grid, [&](double t) {
    const double a = pump.value(t);
    return a * a;
  });
  return integral / round_trip;
}

void CrystalSpec::validate() const {
  if (!(length > 0.0)) throw ParameterError("crystal length must be > 0");
  if (!(tau_pump > 0.0)) throw ParameterError("pump duration must be > 0");
  if (tau_signal && !(*tau_signal > 0.0)) throw ParameterError("signal duration must be > 0");
  if (!(gvd_pump >= 0.0) || !(gvd_signal >= 0.0)) throw ParameterError("GVD must be >= 0");
  if (!(coupling > 0.0)) throw ParameterError("nonlinear coupling sigma must be > 0");
  if (!(pump_peak_amplitude >= 0.0)) throw ParameterError("pump peak amplitude must be >= 0");
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dispersion_length(double tau, double gvd) {
  return gvd == 0.0 ? kInf : tau * tau / (2.0 * gvd);
}

}  // namespace

RegimeReport characteristic_lengths(const CrystalSpec& crystal) {
  crystal.validate();
  RegimeReport r;
  r.crystal_length = crystal.length;

  const double mismatch =
      std::abs(crystal.inv_group_velocity_signal - crystal.inv_group_velocity_pump);
  r.walkoff_length = mismatch == 0.0 ? kInf : crystal.tau_pump / mismatch;
  r.dispersion_length_pump = dispersion_length(crystal.tau_pump, crystal.gvd_pump);
  r.dispersion_length_signal =
      dispersion_length(crystal.tau_signal.value_or(crystal.tau_pump), crystal.gvd_signal);
  const double gain = 2.0 * crystal.coupling * std::abs(crystal.pump_peak_amplitude);
  r.nonlinear_length = gain == 0.0 ? kInf : 1.0 / gain;
  r.dispersion_time_signal = std::sqrt(2.0 * crystal.gvd_signal * crystal.length);

  // l <= L_GV < L_NL < min(L_D); strict relations fail on ties.
  const double l_d = std::min(r.dispersion_length_pump, r.dispersion_length_signal);
  if (!(crystal.length <= r.walkoff_length)) r.violated.emplace_back("l <= L_GV");
  if (!(r.walkoff_length < r.nonlinear_length)) r.violated.emplace_back("L_GV < L_NL");
  if (!(r.nonlinear_length < l_d)) r.violated.emplace_back("L_NL < L_D");
  r.ordering_ok = r.violated.empty();
  return r;
}

}  // namespace spopo
