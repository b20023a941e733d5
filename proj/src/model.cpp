#include "spopo/model.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace spopo {

namespace {

std::mutex g_warning_mutex;
WarningHandler g_warning_handler;

constexpr double kRelTol = 1e-9;

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warning_mutex);
  g_warning_handler = std::move(handler);
}

void warn(const std::string& message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_handler) {
    g_warning_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

std::string to_string(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::gaussian: return "gaussian";
    case EnvelopeKind::sech2: return "sech2";
    case EnvelopeKind::tabulated: return "tabulated";
  }
  return "unknown";
}

EnvelopeKind envelope_kind_from_string(const std::string& name) {
  if (name == "gaussian") return EnvelopeKind::gaussian;
  if (name == "sech2") return EnvelopeKind::sech2;
  if (name == "tabulated") return EnvelopeKind::tabulated;
  throw ParameterError("unknown envelope kind '" + name + "'");
}

std::string to_string(Quadrature q) { return q == Quadrature::X ? "X" : "Y"; }

Quadrature quadrature_from_string(const std::string& name) {
  if (name == "X" || name == "x") return Quadrature::X;
  if (name == "Y" || name == "y") return Quadrature::Y;
  throw ParameterError("unknown quadrature '" + name + "' (expected X or Y)");
}

// ---------------------------------------------------------------------------
// PulseEnvelope

double PulseEnvelope::value(double t) const {
  if (period_ > 0.0 && std::abs(t) > 0.5 * period_) return 0.0;
  switch (kind_) {
    case EnvelopeKind::gaussian: {
      const double x = (t - center_) / tau_;
      return peak_ * std::exp(-x * x);
    }
    case EnvelopeKind::sech2: {
      const double x = std::abs(t - center_) / tau_;
      if (x > 350.0) return 0.0;
      const double s = 1.0 / std::cosh(x);
      return peak_ * s * s;
    }
    case EnvelopeKind::tabulated: {
      const double u = (t - center_ + 0.5 * period_) / bin_width_;
      if (u < 0.0) return 0.0;
      const auto j = static_cast<std::size_t>(u);
      return j < samples_.size() ? samples_[j] : 0.0;
    }
  }
  return 0.0;
}

double PulseEnvelope::peak_time() const {
  if (kind_ != EnvelopeKind::tabulated) return center_;
  const auto it = std::max_element(samples_.begin(), samples_.end());
  const auto j = static_cast<double>(std::distance(samples_.begin(), it));
  return center_ - 0.5 * period_ + (j + 0.5) * bin_width_;
}

double PulseEnvelope::support_halfwidth() const {
  switch (kind_) {
    case EnvelopeKind::gaussian: return 5.0 * tau_;
    case EnvelopeKind::sech2: return 12.5 * tau_;
    case EnvelopeKind::tabulated: return 0.5 * period_;
  }
  return 0.5 * period_;
}

PulseEnvelope PulseEnvelope::scaled(double factor) const {
  if (!(factor >= 0.0)) throw ParameterError("envelope scale factor must be >= 0");
  PulseEnvelope out = *this;
  out.peak_ *= factor;
  for (double& s : out.samples_) s *= factor;
  return out;
}

PulseEnvelope PulseEnvelope::shifted(double dt) const {
  PulseEnvelope out = *this;
  out.center_ += dt;
  return out;
}

namespace {

void check_center(double center, double period) {
  if (!std::isfinite(center)) throw ParameterError("envelope center must be finite");
  if (period > 0.0 && std::abs(center) > 0.5 * period * (1.0 + kRelTol)) {
    throw ParameterError("envelope center must lie within [-T_R/2, T_R/2]");
  }
}

void validate_parametric(double peak, double tau, double center, double period) {
  if (!(peak >= 0.0) || !std::isfinite(peak)) throw ParameterError("envelope peak must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ParameterError("envelope duration must be > 0");
  if (!(period >= 0.0)) throw ParameterError("envelope period must be >= 0");
  check_center(center, period);
}

}  // namespace

PulseEnvelope make_gaussian(double peak, double tau, double center, double period) {
  validate_parametric(peak, tau, center, period);
  PulseEnvelope e;
  e.kind_ = EnvelopeKind::gaussian;
  e.peak_ = peak;
  e.tau_ = tau;
  e.center_ = center;
  e.period_ = period;
  return e;
}

PulseEnvelope make_sech2(double peak, double tau, double center, double period) {
  validate_parametric(peak, tau, center, period);
  PulseEnvelope e;
  e.kind_ = EnvelopeKind::sech2;
  e.peak_ = peak;
  e.tau_ = tau;
  e.center_ = center;
  e.period_ = period;
  return e;
}

PulseEnvelope make_tabulated(std::vector<double> samples, double bin_width, double period) {
  if (samples.empty()) throw ParameterError("tabulated envelope needs at least one sample");
  if (!(bin_width > 0.0)) throw ParameterError("tabulated bin width must be > 0");
  if (!(period > 0.0)) throw ParameterError("tabulated envelope needs a period");
  const double covered = bin_width * static_cast<double>(samples.size());
  if (std::abs(covered - period) > kRelTol * period) {
    throw ParameterError("tabulated bins must tile the period exactly (n * bin_width == T_R)");
  }
  for (double s : samples) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ParameterError("tabulated envelope values must be >= 0");
  }
  PulseEnvelope e;
  e.kind_ = EnvelopeKind::tabulated;
  e.peak_ = *std::max_element(samples.begin(), samples.end());
  e.tau_ = bin_width;
  e.center_ = 0.0;
  e.period_ = period;
  e.bin_width_ = bin_width;
  e.samples_ = std::move(samples);
  return e;
}

// ---------------------------------------------------------------------------
// SampleGrid

std::vector<double> SampleGrid::times() const {
  std::vector<double> t(size);
  for (std::size_t j = 0; j < size; ++j) t[j] = time(j);
  return t;
}

bool SampleGrid::windowed() const {
  return period > 0.0 && std::abs(span() - period) > kRelTol * period;
}

std::size_t SampleGrid::bin_of(double t) const {
  const double u = (t - start) / bin_width;
  if (u < 0.0 || u >= static_cast<double>(size)) return size;
  return static_cast<std::size_t>(u);
}

std::size_t SampleGrid::nearest_bin(double t) const {
  const double u = (t - start) / bin_width - 0.5;
  const double clamped = std::clamp(std::round(u), 0.0, static_cast<double>(size - 1));
  return static_cast<std::size_t>(clamped);
}

SampleGrid make_grid(double period, std::size_t n) {
  if (n < 2) throw ParameterError("sample grid needs at least 2 bins");
  if (!(period > 0.0) || !std::isfinite(period)) throw ParameterError("grid period must be > 0");
  return SampleGrid{n, period, -0.5 * period, period / static_cast<double>(n)};
}

SampleGrid make_window_grid(double period, std::size_t n, double center, double halfwidth) {
  if (n < 2) throw ParameterError("sample grid needs at least 2 bins");
  if (!(halfwidth > 0.0)) throw ParameterError("grid window half-width must be > 0");
  double lo = center - halfwidth;
  double hi = center + halfwidth;
  if (period > 0.0) {
    lo = std::max(lo, -0.5 * period);
    hi = std::min(hi, 0.5 * period);
    if (!(hi > lo)) throw ParameterError("grid window lies outside the period");
  }
  return SampleGrid{n, period, lo, (hi - lo) / static_cast<double>(n)};
}

SampleGrid default_grid(const PulseEnvelope& envelope, std::size_t n) {
  const double period = envelope.period();
  if (envelope.kind() == EnvelopeKind::tabulated) {
    return SampleGrid{envelope.samples().size(), period, envelope.center() - 0.5 * period,
                      envelope.bin_width()};
  }
  const double w = envelope.support_halfwidth();
  if (period > 0.0 && 2.0 * w >= 0.25 * period) return make_grid(period, n);
  return make_window_grid(period, n, envelope.center(), w);
}

double integrate(const SampleGrid& grid, const std::function<double(double)>& f) {
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.size; ++j) sum += f(grid.time(j));
  return sum * grid.bin_width;
}

// ---------------------------------------------------------------------------
// SpopoParams

SpopoParams::SpopoParams(double kappa_s, double kappa_p, double g, double round_trip,
                         PulseEnvelope pump)
    : kappa_s_(kappa_s), kappa_p_(kappa_p), g_(g), round_trip_(round_trip), pump_(std::move(pump)) {
  if (!(kappa_s > 0.0) || !std::isfinite(kappa_s)) throw ParameterError("kappa_s must be > 0");
  if (!(kappa_p >= 0.0) || !std::isfinite(kappa_p)) throw ParameterError("kappa_p must be >= 0");
  if (!(g > 0.0) || !std::isfinite(g)) throw ParameterError("g must be > 0");
  if (!(round_trip > 0.0) || !std::isfinite(round_trip)) throw ParameterError("T_R must be > 0");
  if (pump_.period() > 0.0 && std::abs(pump_.period() - round_trip) > kRelTol * round_trip) {
    throw ParameterError("pump envelope period differs from T_R");
  }
  if (kappa_s * round_trip > 0.3) {
    warn("kappa_s*T_R = " + std::to_string(kappa_s * round_trip) +
         " > 0.3: outside the high-finesse regime of the model");
  }
}

SpopoParams SpopoParams::with_pump(PulseEnvelope pump) const {
  return SpopoParams(kappa_s_, kappa_p_, g_, round_trip_, std::move(pump));
}

SpopoParams normalized_params(double kappa_s_T_R, double mu0, double tau_p_over_T_R,
                              double round_trip) {
  if (!(kappa_s_T_R > 0.0)) throw ParameterError("kappa_s*T_R must be > 0");
  if (!(mu0 >= 0.0)) throw ParameterError("mu(0) must be >= 0");
  if (!(tau_p_over_T_R > 0.0)) throw ParameterError("tau_p/T_R must be > 0");
  const double kappa_s = kappa_s_T_R / round_trip;
  const double g = 1.0;
  const double peak = mu0 * kappa_s / (2.0 * g);
  return SpopoParams(kappa_s, 0.0, g, round_trip,
                     make_gaussian(peak, tau_p_over_T_R * round_trip, 0.0, round_trip));
}

double pump_parameter(const SpopoParams& params, double t) {
  return 2.0 * params.g() * params.pump().value(t) / params.kappa_s();
}

PumpRates pump_rates(const SpopoParams& params, double t) {
  const double mu = pump_parameter(params, t);
  return PumpRates{mu, params.kappa_s() * (1.0 - mu), params.kappa_s() * (1.0 + mu)};
}

// ---------------------------------------------------------------------------
// HomodyneSetup

double HomodyneSetup::cos2() const {
  const double c = std::cos(phase);
  return c * c;
}

double HomodyneSetup::sin2() const {
  const double s = std::sin(phase);
  return s * s;
}

void HomodyneSetup::validate() const {
  constexpr double two_pi = 6.283185307179586;
  if (!(phase >= 0.0 && phase < two_pi)) throw ParameterError("LO phase must lie in [0, 2 pi)");
  if (!std::isfinite(delay)) throw ParameterError("LO delay must be finite");
  if (!(detector_time >= 0.0)) throw ParameterError("detector response time must be >= 0");
  if (delta_lo && !(delta_weight > 0.0)) throw ParameterError("delta LO weight must be > 0");
  if (!delta_lo && !(lo.peak() > 0.0)) throw ParameterError("LO envelope is identically zero");
}

HomodyneSetup delta_lo_setup(double phase, double delay) {
  HomodyneSetup h;
  h.delta_lo = true;
  h.phase = phase;
  h.delay = delay;
  return h;
}

HomodyneSetup gaussian_lo_setup(double amplitude, double tau_lo, double phase, double delay) {
  HomodyneSetup h;
  h.lo = make_gaussian(amplitude, tau_lo, 0.0, 0.0);
  h.phase = phase;
  h.delay = delay;
  return h;
}

SampleGrid lo_grid(const HomodyneSetup& homodyne, double period, std::size_t n) {
  if (homodyne.delta_lo) throw ParameterError("a delta-like LO has no integration grid");
  PulseEnvelope placed = homodyne.lo.shifted(homodyne.delay);
  const double w = placed.support_halfwidth();
  if (placed.kind() == EnvelopeKind::tabulated || 2.0 * w >= period) return make_grid(period, n);
  return make_window_grid(period, n, homodyne.delay, w);
}

}  // namespace spopo
