#include "spopo/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "spopo/analytic.hpp"
#include "spopo/config.hpp"
#include "spopo/io.hpp"
#include "spopo/montecarlo.hpp"
#include "spopo/regimes.hpp"
#include "spopo/spectra.hpp"

namespace spopo {

namespace {

struct Options {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string format = "json";
  bool quiet = false;
};

struct Artifact {
  std::string name;
  std::string content;
};

bool json_format(const Options& o) { return o.format == "json"; }

Provenance provenance(const RunConfig& c) {
  return {to_string(c.experiment), config_digest(c), c.seed};
}

std::vector<Artifact> run_spectrum(const RunConfig& c, const Options& o) {
  const SpopoParams params = c.params->build();
  const SpectrumBlock& s = *c.spectrum;
  SpectrumSeries series;
  switch (s.form) {
    case SpectrumForm::full:
      series = noise_spectrum_full(params, c.homodyne->build(), s.omega, s.quadrature, s.m_max);
      break;
    case SpectrumForm::short_lo:
      series = noise_spectrum_short_lo(params.kappa_s(), params.round_trip(), s.omega, s.m_max);
      break;
    case SpectrumForm::short_lo_general:
      series = noise_spectrum_short_lo_general(params.kappa_s(), params.round_trip(),
                                               pump_parameter(params, params.pump().peak_time()),
                                               s.quadrature, s.omega, s.m_max);
      break;
    case SpectrumForm::averaged:
      series = averaged_spectrum(params.kappa_s(), s.omega);
      series.round_trip = params.round_trip();
      break;
  }
  if (c.homodyne && c.homodyne->detector_time > 0.0) {
    series = apply_detector_response(series, c.homodyne->detector_time);
  }
  const Provenance p = provenance(c);
  if (json_format(o)) return {{"spectrum.json", spectrum_json(series, p)}};
  return {{"spectrum.csv", spectrum_csv(series, p)}};
}

std::vector<Artifact> run_correlations(const RunConfig& c, const Options& o) {
  const SpopoParams params = c.params->build();
  const CorrelationsBlock& b = *c.correlations;
  const SampleGrid grid = c.grid_or_default().build(params);
  CorrelationSummary s;
  s.kernel = quadrature_kernel(params, b.quadrature, grid, b.max_lag);
  s.correlated_pulse_count = correlated_pulse_count(params, b.quadrature);
  const double t_peak = params.pump().peak_time();
  s.delta_lo = delta_lo_kernel(params, b.quadrature, t_peak);
  const double mu0 = pump_parameter(params, t_peak);
  if (1.0 - mu0 <= 0.1) s.near_threshold = near_threshold_limit(params, b.quadrature);
  const Provenance p = provenance(c);
  if (json_format(o)) return {{"correlations.json", correlations_json(s, p)}};
  return {{"correlations.csv", kernel_csv(s, p)}};
}

std::vector<Artifact> run_montecarlo(const RunConfig& c, const Options& o) {
  const McEstimate e = run_monte_carlo(c.mc_config());
  const Provenance p = provenance(c);
  if (json_format(o)) return {{"montecarlo.json", montecarlo_json(e, p)}};
  return {{"montecarlo.csv", montecarlo_csv(e, p)}};
}

ThresholdSummary threshold_summary(const RunConfig& c) {
  const SpopoParams params = c.params->build();
  const SampleGrid grid = c.grid_or_default().build(params);
  ThresholdSummary t;
  t.threshold_peak_flux = threshold_peak_flux(params.kappa_s(), params.g());
  const double a = params.pump().peak();
  t.peak_flux = a * a;
  t.mean_flux = mean_flux(params.pump(), params.round_trip(), grid);
  t.check = below_threshold_check(params, grid);
  return t;
}

std::vector<Artifact> run_threshold(const RunConfig& c, const Options& o) {
  const ThresholdSummary t = threshold_summary(c);
  const Provenance p = provenance(c);
  if (json_format(o)) return {{"threshold.json", threshold_json(t, p)}};
  return {{"threshold.csv", threshold_csv(t, p)}};
}

std::vector<Artifact> run_crystal(const RunConfig& c, const Options& o) {
  const RegimeReport r = characteristic_lengths(*c.crystal);
  const Provenance p = provenance(c);
  if (json_format(o)) return {{"crystal_check.json", regime_json(r, p)}};
  return {{"crystal_check.csv", regime_csv(r, p)}};
}

std::vector<Artifact> run_sweep(const RunConfig& c, const Options& o) {
  const SpopoParams params = c.params->build();
  const SweepBlock& b = *c.sweep;
  const SweepSpec spec{b.variable, b.values};
  const std::vector<SweepRow> rows = lo_sweep(params, c.homodyne->build(), spec, b.m_max);
  const Provenance p = provenance(c);
  std::vector<Artifact> out;
  if (json_format(o)) out.push_back({"lo_sweep.json", sweep_json(spec, rows, params.round_trip(), p)});
  out.push_back({"lo_sweep.csv", sweep_csv(spec, rows, params.round_trip(), p)});
  if (b.gnuplot) out.push_back({"lo_sweep.gp", sweep_gnuplot("lo_sweep.csv", b.variable)});
  return out;
}

std::vector<Artifact> run_experiment(const RunConfig& c, const Options& o) {
  switch (c.experiment) {
    case Experiment::spectrum: return run_spectrum(c, o);
    case Experiment::correlations: return run_correlations(c, o);
    case Experiment::montecarlo: return run_montecarlo(c, o);
    case Experiment::threshold: return run_threshold(c, o);
    case Experiment::crystal_check: return run_crystal(c, o);
    case Experiment::lo_sweep: return run_sweep(c, o);
  }
  return {};
}

[[noreturn]] void report_x_violation(const ThresholdCheck& check, const char* what) {
  std::ostringstream os;
  os << what << " requested above threshold";
  throw AboveThresholdError(os.str(), *check.violation_time, *check.violation_mu);
}

// Schema and physics checks without computing anything. Diagnostics are
// reported through the warning handler.
void preflight(const RunConfig& c) {
  if (c.experiment == Experiment::crystal_check) {
    c.crystal->validate();
    const RegimeReport r = characteristic_lengths(*c.crystal);
    for (const auto& v : r.violated) warn("regime ordering violated: " + v);
    return;
  }
  const SpopoParams params = c.params->build();
  if (c.homodyne) c.homodyne->build();
  const SampleGrid grid = c.grid_or_default().build(params);
  bool wants_x = false;
  const char* what = "X quadrature";
  switch (c.experiment) {
    case Experiment::spectrum:
      wants_x = c.spectrum->quadrature == Quadrature::X && c.spectrum->form != SpectrumForm::short_lo &&
                c.spectrum->form != SpectrumForm::averaged;
      what = "X-quadrature spectrum";
      break;
    case Experiment::correlations:
      wants_x = c.correlations->quadrature == Quadrature::X;
      what = "X-quadrature correlations";
      break;
    case Experiment::montecarlo: {
      const McConfig m = c.mc_config();
      wants_x = m.simulate_x;
      what = "X-quadrature simulation";
      if (wants_x) {
        const ThresholdCheck check = below_threshold_check(params, m.grid);
        if (!check.ok) report_x_violation(check, what);
      }
      // default_burnin is ten correlation times of the slowest bin.
      if (m.n_pulses < default_burnin(m)) {
        warn("n_pulses = " + std::to_string(m.n_pulses) + " is below 10 correlated pulse counts");
      }
      if (m.homodyne && c.homodyne->detector_time > 0.0 && m.spectrum_omega.empty()) {
        warn("detector_time has no effect without spectrum frequencies");
      }
      return;
    }
    default:
      break;
  }
  if (wants_x) {
    const ThresholdCheck check = below_threshold_check(params, grid);
    if (!check.ok) report_x_violation(check, what);
  }
}

Experiment experiment_of(const std::string& subcommand) { return experiment_from_string(subcommand); }

int execute(const std::string& subcommand, const Options& o, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  const bool validate = subcommand == "validate";
  const std::optional<Experiment> fallback =
      validate ? std::nullopt : std::optional<Experiment>(experiment_of(subcommand));

  std::size_t diagnostics = 0;
  set_warning_handler([&](const std::string& msg) {
    ++diagnostics;
    if (!o.quiet) err << "warning: " << msg << '\n';
  });
  struct Restore {
    ~Restore() { set_warning_handler(nullptr); }
  } restore;

  RunConfig cfg = load_run_config(o.config, fallback);
  if (o.seed) cfg.seed = *o.seed;

  if (validate) {
    preflight(cfg);
    if (!o.quiet && diagnostics == 0) out << "ok\n";
    return exit_ok;
  }

  const std::vector<Artifact> artifacts = run_experiment(cfg, o);
  if (o.out_dir.empty()) {
    out << artifacts.front().content;
    return exit_ok;
  }
  const std::filesystem::path dir(o.out_dir);
  Manifest m;
  m.provenance = provenance(cfg);
  m.config_text = to_text(cfg);
  for (const Artifact& a : artifacts) {
    write_file((dir / a.name).string(), a.content);
    m.artifacts.push_back(a.name);
  }
  m.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file((dir / "manifest.json").string(), manifest_json(m));
  if (!o.quiet) {
    for (const Artifact& a : artifacts) out << (dir / a.name).string() << '\n';
  }
  return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum-noise calculator and Monte Carlo simulator for a synchronously pumped OPO"};
  app.name(args.empty() ? "spopo" : args.front());
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"spectrum", "Homodyne noise spectrum"},
      {"correlations", "Output quadrature correlation kernel"},
      {"montecarlo", "Monte Carlo estimate of kernels and spectra"},
      {"threshold", "Threshold flux and below-threshold check"},
      {"crystal-check", "Characteristic crystal lengths and regime ordering"},
      {"lo-sweep", "Zero-frequency squeezing versus LO duration or delay"},
      {"validate", "Schema and physics preflight without computing"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Config file")->required();
    sub->add_option("--out", o.out_dir, "Output directory (default: print the result)");
    sub->add_option("--seed", o.seed, "Override the config seed");
    sub->add_option("--format", o.format, "Result format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_flag("--quiet", o.quiet, "Suppress warnings and progress output");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_config;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    return execute(subcommand, o, out, err);
  } catch (const AboveThresholdError& e) {
    err << "physics error: " << e.what() << " (t = " << e.time() << " s, mu = " << e.mu() << ")\n";
    return exit_physics;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return exit_io;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_internal;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace spopo
