#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spopo/model.hpp"
#include "spopo/montecarlo.hpp"
#include "spopo/regimes.hpp"
#include "spopo/spectra.hpp"

namespace spopo {

/// Schema or syntax problem in a config file. line() is 1-based, 0 if unknown.
class ConfigError : public ParameterError {
public:
  ConfigError(const std::string& message, std::size_t line = 0, std::string field = {});
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

enum class Dimension {
  dimensionless,
  time,              // s
  rate,              // 1/s (also angular frequency, rad/s)
  length,            // m
  inverse_velocity,  // s/m
  dispersion,        // s^2/m
  amplitude,         // s^-1/2 (photon-flux amplitude; also g)
  coupling,          // s^1/2 / m (sigma)
  angle,             // rad
};

/// Factor converting a value in `unit` to base units. "T_R" (time) and
/// "1/T_R" (rate) need the round-trip time.
double unit_factor(Dimension dim, const std::string& unit, std::optional<double> round_trip = {});

/// Key-value file with [sections] and # comments. Each value may end with a
/// unit token: `tau_lo = 100 fs`. Lists are comma separated or
/// `linspace(a, b, n)`, with a single trailing unit.
struct IniEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;  // "" for keys before the first section
  std::size_t line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const;
};

struct IniDocument {
  std::vector<IniSection> sections;

  static IniDocument parse(const std::string& text);
  static IniDocument load(const std::filesystem::path& path);
  const IniSection* section(const std::string& name) const;
  std::string to_text() const;
};

enum class Experiment { spectrum, correlations, montecarlo, threshold, crystal_check, lo_sweep };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);

/// Pump and cavity. Normalized mode sets kappa_s = kappa_s_T_R / T_R, g = 1 and
/// the pump peak so that mu at the pulse center equals mu0.
struct ParamsBlock {
  bool normalized = true;
  double kappa_s_T_R = 0.1;
  double mu0 = 0.9;
  double kappa_s = 0.0;
  double kappa_p = 0.0;
  double g = 1.0;
  double round_trip = 1.0;
  EnvelopeKind pump_shape = EnvelopeKind::gaussian;
  double pump_peak = 0.0;
  double pump_duration = 0.05;
  double pump_center = 0.0;

  SpopoParams build() const;
};

struct HomodyneBlock {
  bool delta = true;
  EnvelopeKind shape = EnvelopeKind::gaussian;
  double amplitude = 1.0;
  double tau_lo = 0.0;
  double phase = 0.0;
  double delay = 0.0;
  double detector_time = 0.0;

  HomodyneSetup build() const;
};

struct GridBlock {
  std::size_t bins = kDefaultGridSize;
  std::optional<double> halfwidth;  // window around the pump center; default picks automatically

  SampleGrid build(const SpopoParams& params) const;
};

enum class SpectrumForm { full, short_lo, short_lo_general, averaged };

std::string to_string(SpectrumForm f);
SpectrumForm spectrum_form_from_string(const std::string& name);

struct SpectrumBlock {
  SpectrumForm form = SpectrumForm::full;
  Quadrature quadrature = Quadrature::Y;
  std::vector<double> omega;  // rad/s
  std::size_t m_max = 0;
};

struct CorrelationsBlock {
  Quadrature quadrature = Quadrature::X;
  std::size_t max_lag = 5;
};

struct MonteCarloBlock {
  std::size_t n_traj = 200;
  std::size_t n_pulses = 5000;
  std::optional<std::size_t> n_burnin;
  std::size_t bins = 16;
  std::optional<double> halfwidth;
  bool simulate_x = true;
  bool simulate_y = true;
  std::size_t max_lag = 5;
  bool cross_bin = true;
  bool cross_quadrature = true;
  std::vector<double> omega;  // rad/s
  std::size_t substeps = 1;
  std::size_t chunk = 8;
  int workers = 0;
  std::string dump;
};

struct SweepBlock {
  SweepVariable variable = SweepVariable::lo_duration;
  std::vector<double> values;  // s
  std::size_t m_max = 0;
  bool gnuplot = true;
};

struct RunConfig {
  Experiment experiment = Experiment::spectrum;
  std::uint64_t seed = 1;
  std::optional<ParamsBlock> params;
  std::optional<HomodyneBlock> homodyne;
  std::optional<GridBlock> grid;
  std::optional<SpectrumBlock> spectrum;
  std::optional<CorrelationsBlock> correlations;
  std::optional<MonteCarloBlock> montecarlo;
  std::optional<SweepBlock> sweep;
  std::optional<CrystalSpec> crystal;

  /// Throws ConfigError naming the first missing block for the experiment.
  void require_blocks() const;
  GridBlock grid_or_default() const { return grid.value_or(GridBlock{}); }
  McConfig mc_config() const;
};

/// `fallback` supplies the experiment when the file does not name one.
RunConfig parse_run_config(const IniDocument& doc, std::optional<Experiment> fallback = {});
RunConfig parse_run_config_text(const std::string& text, std::optional<Experiment> fallback = {});
RunConfig load_run_config(const std::filesystem::path& path, std::optional<Experiment> fallback = {});

/// Canonical text form in base units; parsing it gives back the same config.
std::string to_text(const RunConfig& config);
std::string config_digest(const RunConfig& config);

}  // namespace spopo
