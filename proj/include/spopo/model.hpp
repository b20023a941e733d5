#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spopo {

/// Invalid physical or numerical parameter (negative duration, empty grid, ...).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity requested for a pump at or above the oscillation threshold.
class AboveThresholdError : public std::domain_error {
public:
  AboveThresholdError(const std::string& what, double time, double mu)
      : std::domain_error(what), time_(time), mu_(mu) {}
  double time() const { return time_; }
  double mu() const { return mu_; }

private:
  double time_;
  double mu_;
};

/// Unreadable input or unwritable output.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Warnings are non-fatal diagnostics (validity-regime notes). They go to
/// stderr unless a handler is installed.
using WarningHandler = std::function<void(const std::string&)>;
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

enum class EnvelopeKind { gaussian, sech2, tabulated };

std::string to_string(EnvelopeKind kind);
EnvelopeKind envelope_kind_from_string(const std::string& name);

/// Real, nonnegative amplitude profile of one pulse within a repetition
/// period, in photon-flux-amplitude units (s^-1/2).
///
/// Gaussian: peak * exp(-(t - center)^2 / tau^2).
/// Sech2:    peak * sech^2((t - center) / tau).
/// Tabulated: piecewise constant over uniform bins covering [-T_R/2, T_R/2).
///
/// The envelope is zero outside [-T_R/2, T_R/2]; a single pulse never wraps.
class PulseEnvelope {
public:
  PulseEnvelope() = default;

  double operator()(double t) const { return value(t); }
  double value(double t) const;

  EnvelopeKind kind() const { return kind_; }
  double peak() const { return peak_; }
  double duration() const { return tau_; }
  double center() const { return center_; }
  double period() const { return period_; }
  /// Time of the maximum value.
  double peak_time() const;
  /// Half-width beyond which the envelope is negligible (< 1e-10 of peak).
  double support_halfwidth() const;

  const std::vector<double>& samples() const { return samples_; }
  double bin_width() const { return bin_width_; }

  PulseEnvelope scaled(double factor) const;
  PulseEnvelope shifted(double dt) const;

  friend PulseEnvelope make_gaussian(double peak, double tau, double center, double period);
  friend PulseEnvelope make_sech2(double peak, double tau, double center, double period);
  friend PulseEnvelope make_tabulated(std::vector<double> samples, double bin_width, double period);

private:
  EnvelopeKind kind_ = EnvelopeKind::gaussian;
  double peak_ = 0.0;
  double tau_ = 1.0;
  double center_ = 0.0;
  double period_ = 0.0;  // 0 means unbounded (no period clipping)
  std::vector<double> samples_;
  double bin_width_ = 0.0;
};

/// Gaussian pulse. `period` bounds the support to [-period/2, period/2];
/// pass 0 for an unbounded envelope.
PulseEnvelope make_gaussian(double peak, double tau, double center = 0.0, double period = 0.0);
PulseEnvelope make_sech2(double peak, double tau, double center = 0.0, double period = 0.0);
/// Samples cover [-period/2, period/2) with bin width `bin_width`; the
/// sample count times the bin width must equal the period.
PulseEnvelope make_tabulated(std::vector<double> samples, double bin_width, double period);

/// Uniform midpoint grid over one period or over a window of it.
struct SampleGrid {
  std::size_t size = 0;
  double period = 0.0;
  double start = 0.0;  // left edge of the first bin
  double bin_width = 0.0;

  double time(std::size_t j) const { return start + (static_cast<double>(j) + 0.5) * bin_width; }
  std::vector<double> times() const;
  double span() const { return bin_width * static_cast<double>(size); }
  bool windowed() const;
  /// Index of the bin containing t, or size if t lies outside the grid.
  std::size_t bin_of(double t) const;
  std::size_t nearest_bin(double t) const;
};

inline constexpr std::size_t kDefaultGridSize = 512;

SampleGrid make_grid(double period, std::size_t n);
/// Grid over [center - halfwidth, center + halfwidth] clipped to the period.
SampleGrid make_window_grid(double period, std::size_t n, double center, double halfwidth);
/// Windowed grid (+-5 durations around the envelope) when the envelope is
/// much narrower than the period, otherwise the full period. Tabulated
/// envelopes use their own bins.
SampleGrid default_grid(const PulseEnvelope& envelope, std::size_t n = kDefaultGridSize);

/// Midpoint rule of f over the grid.
double integrate(const SampleGrid& grid, const std::function<double(double)>& f);

/// Cavity and coupling constants plus the fixed classical pump envelope.
class SpopoParams {
public:
  SpopoParams(double kappa_s, double kappa_p, double g, double round_trip, PulseEnvelope pump);

  double kappa_s() const { return kappa_s_; }
  double kappa_p() const { return kappa_p_; }
  double g() const { return g_; }
  double round_trip() const { return round_trip_; }
  const PulseEnvelope& pump() const { return pump_; }
  double loss_per_round_trip() const { return kappa_s_ * round_trip_; }

  SpopoParams with_pump(PulseEnvelope pump) const;

private:
  double kappa_s_;
  double kappa_p_;
  double g_;
  double round_trip_;
  PulseEnvelope pump_;
};

/// Parameters in the dimensionless form used for reporting: kappa_s*T_R,
/// peak pump parameter mu(0), and the Gaussian pump duration in units of
/// T_R. g is fixed to 1 and the pump peak amplitude chosen to give mu(0).
SpopoParams normalized_params(double kappa_s_T_R, double mu0, double tau_p_over_T_R,
                              double round_trip = 1.0);

enum class Quadrature { X, Y };

std::string to_string(Quadrature q);
Quadrature quadrature_from_string(const std::string& name);

struct PumpRates {
  double mu;
  double kappa_minus;  // kappa_s (1 - mu): X-quadrature decay
  double kappa_plus;   // kappa_s (1 + mu): Y-quadrature decay

  double decay(Quadrature q) const { return q == Quadrature::X ? kappa_minus : kappa_plus; }
};

/// Balanced homodyne detection settings. The LO envelope is centered at 0
/// and displaced by `delay`, so beta(t) = lo(t - delay). A delta-like LO has
/// beta^2(t) = delta_weight * delta(t - delay).
struct HomodyneSetup {
  PulseEnvelope lo;
  bool delta_lo = false;
  double delta_weight = 1.0;
  double phase = 0.0;          // rad, in [0, 2 pi)
  double delay = 0.0;          // s
  double detector_time = 0.0;  // boxcar response time T_D, s

  double beta(double t) const { return delta_lo ? 0.0 : lo.value(t - delay); }
  double cos2() const;
  double sin2() const;
  void validate() const;
};

HomodyneSetup delta_lo_setup(double phase = 0.0, double delay = 0.0);
HomodyneSetup gaussian_lo_setup(double amplitude, double tau_lo, double phase = 0.0,
                                double delay = 0.0);
/// Midpoint grid covering the LO support (for integrals weighted by beta^2).
SampleGrid lo_grid(const HomodyneSetup& homodyne, double period, std::size_t n = kDefaultGridSize);

/// mu(t) = 2 g A0(t) / kappa_s.
double pump_parameter(const SpopoParams& params, double t);
PumpRates pump_rates(const SpopoParams& params, double t);

}  // namespace spopo
