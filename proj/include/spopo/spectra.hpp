#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spopo/analytic.hpp"
#include "spopo/model.hpp"

namespace spopo {

enum class Execution { serial, parallel };

/// Shot-noise-normalized photocurrent noise spectrum on a frequency grid.
struct SpectrumSeries {
  std::string kind;  // "full", "short_lo", "short_lo_general", "averaged", ...
  Quadrature quadrature = Quadrature::Y;
  std::vector<double> omega;  // rad/s
  std::vector<double> values;
  std::size_t m_max = 0;
  double kappa_s = 0.0;
  double round_trip = 0.0;
  double detector_time = 0.0;
  /// Values below zero are a property of the overlapping-Lorentzian comb
  /// form near threshold; they are reported as computed, never clamped.
  bool has_negative = false;
};

/// ceil(10 / (kappa_s T_R)).
std::size_t default_comb_truncation(double kappa_s_T_R);
/// Upper bound on the neglected comb tail, (kappa_s T_R)^2 / (pi^2 m_max).
double comb_truncation_bound(double kappa_s_T_R, std::size_t m_max);

/// sum_{m=-M..M} 4 kappa_s^2 mu / (kappa_s^2 (1 +- mu)^2 + (omega - 2 pi m / T_R)^2),
/// with (1+mu) for Y and (1-mu) for X.
double comb_sum(double kappa_s, double round_trip, double mu, Quadrature q, double omega,
                std::size_t m_max);

/// Noise spectrum for arbitrary pump and LO shapes, averaged over the pulse
/// with weight beta^2:
///   S = <1 -+ comb_sum(mu(t))>_beta^2
/// (minus for Y, plus for X). m_max = 0 selects the default truncation.
SpectrumSeries noise_spectrum_full(const SpopoParams& params, const HomodyneSetup& homodyne,
                                   std::span<const double> omega, Quadrature q,
                                   std::size_t m_max = 0, Execution exec = Execution::parallel);

/// Very short LO at threshold: 1 - sum 4 kappa_s^2 / (4 kappa_s^2 + (omega - 2 pi m/T_R)^2).
SpectrumSeries noise_spectrum_short_lo(double kappa_s, double round_trip,
                                       std::span<const double> omega, std::size_t m_max = 0);

/// Very short LO at a pump parameter mu0 below threshold.
SpectrumSeries noise_spectrum_short_lo_general(double kappa_s, double round_trip, double mu0,
                                               Quadrature q, std::span<const double> omega,
                                               std::size_t m_max = 0);

/// Detector-averaged near-threshold squeezing: 1 - 4 kappa_s^2 / (4 kappa_s^2 + omega^2).
SpectrumSeries averaged_spectrum(double kappa_s, std::span<const double> omega);

/// Numerical Fourier transform of delta(tau) + k(tau):
///   S(omega) = 1 + 2 int_0^inf k(tau) cos(omega tau) dtau.
double spectrum_from_correlation(const SmoothKernel& kernel, double omega);

enum class DetectorResponse { boxcar, first_order };

/// |H(omega)|^2 for a detector of response time T_D. Boxcar is the moving
/// average over T_D: H = sinc(omega T_D / 2).
double detector_gain(DetectorResponse kind, double detector_time, double omega);

SpectrumSeries apply_detector_response(const SpectrumSeries& spectrum, double detector_time,
                                       DetectorResponse kind = DetectorResponse::boxcar);

enum class SweepVariable { lo_duration, lo_delay };

struct SweepSpec {
  SweepVariable variable = SweepVariable::lo_duration;
  std::vector<double> values;  // seconds; lo_duration == 0 is a delta-like LO
};

struct SweepRow {
  double value = 0.0;
  double squeezed_noise = 0.0;  // S_Y(0)
};

/// Zero-frequency squeezed-quadrature noise versus LO duration or delay.
/// The template supplies the LO shape and whichever setting is not swept.
std::vector<SweepRow> lo_sweep(const SpopoParams& params, const HomodyneSetup& homodyne_template,
                               const SweepSpec& sweep, std::size_t m_max = 0);

std::vector<double> linear_grid(double lo, double hi, std::size_t n);

}  // namespace spopo
