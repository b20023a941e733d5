#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spopo/analytic.hpp"
#include "spopo/montecarlo.hpp"
#include "spopo/regimes.hpp"
#include "spopo/spectra.hpp"

namespace spopo {

inline constexpr const char* kToolVersion = "1.0.0";

/// Stamped into every artifact. CSV files carry it as a leading `#` line.
struct Provenance {
  std::string experiment;
  std::string config_digest;
  std::uint64_t seed = 0;
};

// Column schemas (stable; tests pin them):
//   spectrum:      omega_rad_s,omega_T_R,S
//   kernel:        bin,t_s,t_over_T_R,mu,D,K_0..K_<max_lag>
//   sweep (long):  variable,value_s,value_over_T_R,S_Y0
//   regimes:       quantity,value,unit
//   threshold:     quantity,value
//   montecarlo:    quantity,quadrature,bin,bin2,lag,value,se
//   mc spectrum:   (rows of montecarlo with quantity=spectrum, lag=-1, bin=omega index)

std::string spectrum_csv(const SpectrumSeries& s, const Provenance& p);
std::string spectrum_json(const SpectrumSeries& s, const Provenance& p);

struct CorrelationSummary {
  CorrelationKernel kernel;
  double correlated_pulse_count = 0.0;
  SmoothKernel delta_lo;  // delta-like LO at the pump peak
  std::optional<SmoothKernel> near_threshold;
};

std::string kernel_csv(const CorrelationSummary& c, const Provenance& p);
std::string correlations_json(const CorrelationSummary& c, const Provenance& p);

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows, double round_trip,
                      const Provenance& p);
std::string sweep_json(const SweepSpec& spec, const std::vector<SweepRow>& rows, double round_trip,
                       const Provenance& p);
/// Plots the long-format sweep table `csv_name` (gnuplot syntax).
std::string sweep_gnuplot(const std::string& csv_name, SweepVariable variable);

/// Lengths in mm, times in fs; infinite lengths are written as "inf".
std::string regime_json(const RegimeReport& r, const Provenance& p);
std::string regime_csv(const RegimeReport& r, const Provenance& p);

struct ThresholdSummary {
  double threshold_peak_flux = 0.0;
  double peak_flux = 0.0;
  double mean_flux = 0.0;
  ThresholdCheck check;
};

std::string threshold_json(const ThresholdSummary& t, const Provenance& p);
std::string threshold_csv(const ThresholdSummary& t, const Provenance& p);

std::string montecarlo_json(const McEstimate& e, const Provenance& p);
std::string montecarlo_csv(const McEstimate& e, const Provenance& p);

struct Manifest {
  Provenance provenance;
  std::string config_text;
  double wall_time_s = 0.0;
  std::vector<std::string> artifacts;
};

std::string manifest_json(const Manifest& m);

/// Writes `content` to `path`, creating parent directories. Throws IoError.
void write_file(const std::string& path, const std::string& content);

}  // namespace spopo
