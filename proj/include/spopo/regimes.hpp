#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spopo/model.hpp"

namespace spopo {

/// Peak pump photon flux at the oscillation threshold, kappa_s^2 / (4 g^2).
double threshold_peak_flux(double kappa_s, double g);

struct ThresholdCheck {
  bool ok = true;
  double max_mu = 0.0;
  /// Earliest time with mu >= 1 when !ok.
  std::optional<double> violation_time;
  std::optional<double> violation_mu;
};

/// ok iff mu(t) < 1 everywhere. The envelope's analytic peak time is checked
/// in addition to the grid, so the verdict does not depend on grid alignment.
ThresholdCheck below_threshold_check(const SpopoParams& params);
ThresholdCheck below_threshold_check(const SpopoParams& params, const SampleGrid& grid);

/// (1/T_R) * integral of A0(t)^2 over one period, midpoint rule.
double mean_flux(const PulseEnvelope& pump, double round_trip);
double mean_flux(const PulseEnvelope& pump, double round_trip, const SampleGrid& grid);

/// Thin-crystal inputs, SI units (m, s, s/m, s^2/m, 1/(m * amplitude)).
struct CrystalSpec {
  double length = 0.0;
  double inv_group_velocity_pump = 0.0;
  double inv_group_velocity_signal = 0.0;
  double gvd_pump = 0.0;
  double gvd_signal = 0.0;
  double coupling = 0.0;  // sigma
  double tau_pump = 0.0;
  std::optional<double> tau_signal;  // defaults to tau_pump
  double pump_peak_amplitude = 0.0;

  void validate() const;
};

/// Characteristic propagation lengths (m) and the dispersion time scale (s).
/// Infinite lengths are stored as +infinity.
struct RegimeReport {
  double walkoff_length = 0.0;        // L_GV
  double dispersion_length_pump = 0.0;    // L_D,p
  double dispersion_length_signal = 0.0;  // L_D,s
  double nonlinear_length = 0.0;      // L_NL
  double dispersion_time_signal = 0.0;  // tau_s^D
  double crystal_length = 0.0;
  bool ordering_ok = false;
  std::vector<std::string> violated;
};

RegimeReport characteristic_lengths(const CrystalSpec& crystal);

}  // namespace spopo
