#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spopo/model.hpp"
#include "spopo/spectra.hpp"

namespace spopo {

/// Noise coefficients are in units where a per-bin variance v means a
/// physical variance v / dt; vacuum is 1/4.
inline constexpr double kVacuumVariance = 0.25;

/// One-round-trip transition and output map of a single bin and quadrature:
///
///   cavity: Q_n = a Q_{n-1} + c xi_n,   a = exp(-kappa T_R), c^2 = (kappa_s/kappa)(1 - a^2)
///   output: O_n = p Q_{n-1} + q xi_n
///
/// xi_n is the vacuum entering during round trip n; the output reuses the
/// same realization. p and q are chosen so that Var O = v (1 + C) and
/// Cov(O_{n+k}, O_n) = v C a^k exactly, with C = 4 K(t, 0). If C is below the
/// lowest value this map can represent, the nearest one is used and
/// `clamped` is set.
struct OutputCoupling {
  double a = 0.0;
  double c = 0.0;
  double p = 0.0;
  double q = 0.0;
  double target = 0.0;    // C requested
  double achieved = 0.0;  // C realized
  bool clamped = false;
};

OutputCoupling calibrate_output(double kappa_s_T_R, double mu, Quadrature quadrature);

struct McConfig {
  McConfig(SpopoParams params_, SampleGrid grid_) : params(std::move(params_)), grid(grid_) {}

  SpopoParams params;
  SampleGrid grid;
  std::size_t n_pulses = 5000;
  std::optional<std::size_t> n_burnin;  // default: 10 decay times of the slowest bin
  std::size_t n_traj = 100;
  std::uint64_t seed = 1;
  bool simulate_x = true;
  bool simulate_y = true;
  std::size_t max_lag = 5;
  bool cross_bin = true;         // j != j' lag products
  bool cross_quadrature = true;  // X-Y lag products on each bin
  std::optional<HomodyneSetup> homodyne;
  std::vector<double> spectrum_omega;  // rad/s; empty skips the spectrum
  std::size_t substeps = 1;            // exact sub-round-trip steps (statistically invisible)
  std::size_t chunk = 8;               // trajectories per reduction unit
  int workers = 0;                     // 0: OpenMP default
  Execution exec = Execution::parallel;
  std::string dump_path;  // raw output samples; empty disables
  /// Test-only: feed the output an independent vacuum draw instead of the
  /// realization that drove the cavity. Breaks the inter-pulse kernel.
  bool independent_output_vacuum = false;
};

/// Grid with n bins windowed around the pump pulse. Odd n puts a bin
/// center on the pump center.
SampleGrid mc_grid(const SpopoParams& params, std::size_t n);

std::size_t default_burnin(const McConfig& config);
std::vector<Quadrature> simulated_quadratures(const McConfig& config);

/// Text that identifies the configuration for digests; stable across runs.
std::string canonical_text(const McConfig& config);

struct Stat {
  double value = 0.0;
  double se = 0.0;
};

struct QuadratureEstimate {
  Quadrature quadrature = Quadrature::X;
  std::vector<double> mu;     // per bin
  std::vector<double> decay;  // kappa_-+ per bin, s^-1
  std::vector<OutputCoupling> coupling;
  std::vector<Stat> cavity_variance;    // per bin
  std::vector<Stat> cavity_lag1_ratio;  // per bin, pooled ratio of lag products
  std::vector<Stat> output_variance;    // C(0) per bin
  std::vector<Stat> delta;              // D per bin: C(0) - K(0)
  std::vector<Stat> kernel;             // K per [bin][lag], lag 0..max_lag; K(0) = C(1) / a
  std::vector<Stat> cross_bin;          // per [lag][j][j'], diagonal left at zero
  std::size_t center_bin = 0;
  Stat center_lag_ratio;                // sum_{k=2..5} K(k) / sum_{k=1..4} K(k)

  const Stat& K(std::size_t bin, std::size_t lag, std::size_t max_lag) const {
    return kernel[bin * (max_lag + 1) + lag];
  }
};

struct McEstimate {
  std::vector<QuadratureEstimate> quadratures;
  std::vector<Stat> xy_cross;  // per [bin][lag + max_lag], lag -max_lag..max_lag: <X_n Y_{n+lag}>
  std::vector<double> spectrum_omega;
  std::vector<Stat> spectrum;
  std::size_t n_traj = 0;
  std::size_t n_pulses = 0;
  std::size_t n_burnin = 0;
  std::size_t n_bins = 0;
  std::size_t max_lag = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  /// n_pulses below 10 correlated pulse counts of the slowest bin.
  bool insufficient_samples = false;
  double effective_samples = 0.0;  // n_traj * n_pulses / (1 + 2 * slowest correlated count)

  const QuadratureEstimate* find(Quadrature q) const;
};

McEstimate run_monte_carlo(const McConfig& config);

/// Retained samples of one trajectory after burn-in, [pulse][bin] per
/// simulated quadrature. Includes max_lag look-ahead pulses.
struct TrajectoryRecord {
  std::vector<Quadrature> quadratures;
  std::size_t n_pulses = 0;
  std::size_t n_bins = 0;
  std::vector<std::vector<double>> cavity;
  std::vector<std::vector<double>> noise;   // effective xi_n per round trip
  std::vector<std::vector<double>> output;

  double at(const std::vector<std::vector<double>>& field, std::size_t qi, std::size_t n,
            std::size_t j) const {
    return field[qi][n * n_bins + j];
  }
};

TrajectoryRecord record_trajectory(const McConfig& config, std::size_t index);

/// Per-pulse homodyne current sum_j beta_j (cos th X_j + sin th Y_j) for the
/// first n_pulses pulses, and the matching shot-noise level v sum_j beta_j^2.
struct CurrentSeries {
  std::vector<double> samples;
  double shot_noise = 0.0;
};

CurrentSeries synthesize_current(const TrajectoryRecord& record, const HomodyneSetup& homodyne,
                                 const SampleGrid& grid, std::size_t n_pulses);

/// Shot-noise-normalized spectrum of one current series:
///   S = 1 + [C(0) - shot + 2 sum_{k=1..L} C(k) cos(omega k T_R)] / shot
/// with unbiased lag estimates C(k) = r(k) / (N - k) from an FFT
/// autocorrelation.
std::vector<double> current_spectrum(const std::vector<double>& current, double shot_noise,
                                     const std::vector<double>& omega, double round_trip,
                                     std::size_t max_lag);

/// Raw dump layout: 8-byte magic "SPOPOMC1", then four little-endian u64
/// (n_traj, n_quadratures, n_pulses, n_bins), then f64 output samples in
/// [traj][quadrature][pulse][bin] order, quadratures X before Y.
inline constexpr char kDumpMagic[9] = "SPOPOMC1";

}  // namespace spopo
