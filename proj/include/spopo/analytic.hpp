#pragma once

#include <cstddef>
#include <vector>

#include "spopo/model.hpp"

namespace spopo {

/// Vacuum reflection term of the output quadrature correlation.
inline constexpr double kVacuumDelta = 0.25;

/// Output-quadrature pair correlation split into a delta part and a comb part:
///
///   <Q_n(t) Q_n'(t')> = D(t) d_nn' delta(t - t')
///                     + K(t, n - n') delta(t - t' - (n - n') T_R)
///
/// Only equal intra-pulse positions are ever correlated, so the kernel is
/// stored per grid bin and per pulse lag; there is no slot for t != t'.
struct CorrelationKernel {
  Quadrature quadrature = Quadrature::X;
  SampleGrid grid;
  std::size_t max_lag = 0;
  std::vector<double> mu;     // mu(t_j)
  std::vector<double> delta;  // D(t_j)
  std::vector<double> comb;   // K(t_j, lag), row-major [bin][lag]
  double kappa_s = 0.0;
  double round_trip = 0.0;

  double K(std::size_t bin, std::size_t lag) const { return comb[bin * (max_lag + 1) + lag]; }
  double D(std::size_t bin) const { return delta[bin]; }
};

/// K(t, lag) = +- kappa_s T_R (mu/2) / (1 -+ mu) exp(-kappa_-+ T_R |lag|),
/// upper signs for X. Throws AboveThresholdError for X when mu(t) >= 1.
double kernel_value(const SpopoParams& params, Quadrature q, double t, long lag);

CorrelationKernel quadrature_kernel(const SpopoParams& params, Quadrature q, const SampleGrid& grid,
                                    std::size_t max_lag = 5);

/// 1 / (kappa_-+(t_peak) T_R): the 1/e pulse lag of the inter-pulse kernel.
double correlated_pulse_count(const SpopoParams& params, Quadrature q);

/// Homodyne current correlation <i(t) i(t')> at two global times. The delta
/// weight multiplies delta(t - t'); the comb weight multiplies
/// delta(t - t' - lag T_R) and is zero unless t - t' is a whole number of
/// periods. General phases mix the quadratures as cos^2 X + sin^2 Y.
struct CurrentCorrelation {
  double delta_weight = 0.0;
  double comb_weight = 0.0;
  long lag = 0;
  bool aligned = false;
};

CurrentCorrelation current_correlation(const SpopoParams& params, const HomodyneSetup& homodyne,
                                       double t, double t_prime);

/// delta(tau) + amplitude * exp(-decay |tau|), in units of the mean current.
struct SmoothKernel {
  double amplitude = 0.0;
  double decay = 0.0;
  double at(double tau) const;
};

/// Detector-averaged current correlation for T_R << T_D << 1/kappa_s:
///   <I(t)I(t')> = <I> delta(tau) +- kappa_s A_-+(tau)
struct AveragedCorrelation {
  double mean_current = 0.0;  // <I> = (1/T_R) int beta^2
  double a_minus = 0.0;       // A_-(tau), X branch
  double a_plus = 0.0;        // A_+(tau), Y branch
  double smooth = 0.0;        // kappa_s (cos^2 A_- - sin^2 A_+)
};

AveragedCorrelation averaged_current_correlation(const SpopoParams& params,
                                                 const HomodyneSetup& homodyne, double tau);

/// Delta-like LO at the pulse position `t0`: amplitude +-kappa_s 2mu/(1-+mu),
/// decay kappa_s (1 -+ mu).
SmoothKernel delta_lo_kernel(const SpopoParams& params, Quadrature q, double t0 = 0.0);

/// Close to threshold: X -> kappa_s/(1-mu0) with decay kappa_s(1-mu0);
/// Y -> -kappa_s with decay 2 kappa_s. mu0 is the peak pump parameter.
SmoothKernel near_threshold_limit(const SpopoParams& params, Quadrature q);

struct NearThresholdLimits {
  SmoothKernel x;
  SmoothKernel y;
};

NearThresholdLimits near_threshold_limits(const SpopoParams& params);

}  // namespace spopo
