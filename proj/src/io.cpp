#include "spopo/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "spopo/digest.hpp"

namespace spopo {

namespace {

using nlohmann::ordered_json;

ordered_json header(const Provenance& p) {
  ordered_json j;
  j["tool_version"] = kToolVersion;
  j["experiment"] = p.experiment;
  j["config_digest"] = p.config_digest;
  j["seed"] = p.seed;
  return j;
}

std::string comment_line(const Provenance& p) {
  return "# experiment=" + p.experiment + " config_digest=" + p.config_digest +
         " seed=" + std::to_string(p.seed) + " tool_version=" + kToolVersion + "\n";
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

// Finite values pass through; infinities become the string "inf".
ordered_json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

std::string csv_number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return exact_text(x);
}

ordered_json stat_array(const std::vector<Stat>& s) {
  ordered_json values = ordered_json::array();
  ordered_json errors = ordered_json::array();
  for (const Stat& x : s) {
    values.push_back(x.value);
    errors.push_back(x.se);
  }
  return {{"value", values}, {"se", errors}};
}

ordered_json stat_json(const Stat& s) { return {{"value", s.value}, {"se", s.se}}; }

}  // namespace

std::string spectrum_csv(const SpectrumSeries& s, const Provenance& p) {
  std::ostringstream os;
  os << comment_line(p) << "omega_rad_s,omega_T_R,S\n";
  for (std::size_t i = 0; i < s.omega.size(); ++i) {
    os << exact_text(s.omega[i]) << ',' << exact_text(s.omega[i] * s.round_trip) << ','
       << exact_text(s.values[i]) << '\n';
  }
  return os.str();
}

std::string spectrum_json(const SpectrumSeries& s, const Provenance& p) {
  ordered_json j = header(p);
  j["kind"] = s.kind;
  j["quadrature"] = to_string(s.quadrature);
  j["m_max"] = s.m_max;
  j["kappa_s"] = s.kappa_s;
  j["round_trip_s"] = s.round_trip;
  j["detector_time_s"] = s.detector_time;
  j["has_negative"] = s.has_negative;
  j["omega_rad_s"] = s.omega;
  j["S"] = s.values;
  return dump(j);
}

std::string kernel_csv(const CorrelationSummary& c, const Provenance& p) {
  const CorrelationKernel& k = c.kernel;
  std::ostringstream os;
  os << comment_line(p) << "bin,t_s,t_over_T_R,mu,D";
  for (std::size_t lag = 0; lag <= k.max_lag; ++lag) os << ",K_" << lag;
  os << '\n';
  for (std::size_t j = 0; j < k.grid.size; ++j) {
    const double t = k.grid.time(j);
    os << j << ',' << exact_text(t) << ',' << exact_text(t / k.round_trip) << ',' << exact_text(k.mu[j])
       << ',' << exact_text(k.D(j));
    for (std::size_t lag = 0; lag <= k.max_lag; ++lag) os << ',' << exact_text(k.K(j, lag));
    os << '\n';
  }
  return os.str();
}

std::string correlations_json(const CorrelationSummary& c, const Provenance& p) {
  const CorrelationKernel& k = c.kernel;
  ordered_json j = header(p);
  j["quadrature"] = to_string(k.quadrature);
  j["kappa_s"] = k.kappa_s;
  j["round_trip_s"] = k.round_trip;
  j["max_lag"] = k.max_lag;
  j["correlated_pulse_count"] = c.correlated_pulse_count;
  j["delta_lo_kernel"] = {{"amplitude", c.delta_lo.amplitude}, {"decay", c.delta_lo.decay}};
  if (c.near_threshold) {
    j["near_threshold_kernel"] = {{"amplitude", c.near_threshold->amplitude},
                                  {"decay", c.near_threshold->decay}};
  }
  j["t_s"] = k.grid.times();
  j["mu"] = k.mu;
  j["D"] = k.delta;
  ordered_json rows = ordered_json::array();
  for (std::size_t b = 0; b < k.grid.size; ++b) {
    std::vector<double> row(k.comb.begin() + static_cast<std::ptrdiff_t>(b * (k.max_lag + 1)),
                            k.comb.begin() + static_cast<std::ptrdiff_t>((b + 1) * (k.max_lag + 1)));
    rows.push_back(row);
  }
  j["K"] = rows;
  return dump(j);
}

std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows, double round_trip,
                      const Provenance& p) {
  const char* name = spec.variable == SweepVariable::lo_duration ? "tau_lo" : "delay";
  std::ostringstream os;
  os << comment_line(p) << "variable,value_s,value_over_T_R,S_Y0\n";
  for (const SweepRow& r : rows) {
    os << name << ',' << exact_text(r.value) << ',' << exact_text(r.value / round_trip) << ','
       << exact_text(r.squeezed_noise) << '\n';
  }
  return os.str();
}

std::string sweep_json(const SweepSpec& spec, const std::vector<SweepRow>& rows, double round_trip,
                       const Provenance& p) {
  ordered_json j = header(p);
  j["variable"] = spec.variable == SweepVariable::lo_duration ? "tau_lo" : "delay";
  j["round_trip_s"] = round_trip;
  ordered_json values = ordered_json::array();
  ordered_json s = ordered_json::array();
  for (const SweepRow& r : rows) {
    values.push_back(r.value);
    s.push_back(r.squeezed_noise);
  }
  j["value_s"] = values;
  j["S_Y0"] = s;
  return dump(j);
}

std::string sweep_gnuplot(const std::string& csv_name, SweepVariable variable) {
  const char* label = variable == SweepVariable::lo_duration ? "tau_LO / T_R" : "delay / T_R";
  std::ostringstream os;
  os << "set datafile separator ','\n"
     << "set key off\n"
     << "set xlabel '" << label << "'\n"
     << "set ylabel 'S_Y(0)'\n"
     << "plot '" << csv_name << "' every ::2 using 3:4 with linespoints\n";
  return os.str();
}

std::string regime_json(const RegimeReport& r, const Provenance& p) {
  ordered_json j = header(p);
  j["units"] = {{"length", "mm"}, {"time", "fs"}};
  j["crystal_length_mm"] = number_or_inf(r.crystal_length * 1e3);
  j["walkoff_length_mm"] = number_or_inf(r.walkoff_length * 1e3);
  j["dispersion_length_pump_mm"] = number_or_inf(r.dispersion_length_pump * 1e3);
  j["dispersion_length_signal_mm"] = number_or_inf(r.dispersion_length_signal * 1e3);
  j["nonlinear_length_mm"] = number_or_inf(r.nonlinear_length * 1e3);
  j["dispersion_time_signal_fs"] = number_or_inf(r.dispersion_time_signal * 1e15);
  j["ordering_ok"] = r.ordering_ok;
  j["violated"] = r.violated;
  return dump(j);
}

std::string regime_csv(const RegimeReport& r, const Provenance& p) {
  std::ostringstream os;
  os << comment_line(p) << "quantity,value,unit\n"
     << "crystal_length," << csv_number(r.crystal_length * 1e3) << ",mm\n"
     << "walkoff_length," << csv_number(r.walkoff_length * 1e3) << ",mm\n"
     << "dispersion_length_pump," << csv_number(r.dispersion_length_pump * 1e3) << ",mm\n"
     << "dispersion_length_signal," << csv_number(r.dispersion_length_signal * 1e3) << ",mm\n"
     << "nonlinear_length," << csv_number(r.nonlinear_length * 1e3) << ",mm\n"
     << "dispersion_time_signal," << csv_number(r.dispersion_time_signal * 1e15) << ",fs\n"
     << "ordering_ok," << (r.ordering_ok ? 1 : 0) << ",\n";
  return os.str();
}

std::string threshold_json(const ThresholdSummary& t, const Provenance& p) {
  ordered_json j = header(p);
  j["threshold_peak_flux"] = t.threshold_peak_flux;
  j["peak_flux"] = t.peak_flux;
  j["mean_flux"] = t.mean_flux;
  j["max_mu"] = t.check.max_mu;
  j["below_threshold"] = t.check.ok;
  if (!t.check.ok) {
    j["violation_time_s"] = *t.check.violation_time;
    j["violation_mu"] = *t.check.violation_mu;
  }
  return dump(j);
}

std::string threshold_csv(const ThresholdSummary& t, const Provenance& p) {
  std::ostringstream os;
  os << comment_line(p) << "quantity,value\n"
     << "threshold_peak_flux," << exact_text(t.threshold_peak_flux) << '\n'
     << "peak_flux," << exact_text(t.peak_flux) << '\n'
     << "mean_flux," << exact_text(t.mean_flux) << '\n'
     << "max_mu," << exact_text(t.check.max_mu) << '\n'
     << "below_threshold," << (t.check.ok ? 1 : 0) << '\n';
  if (!t.check.ok) {
    os << "violation_time_s," << exact_text(*t.check.violation_time) << '\n'
       << "violation_mu," << exact_text(*t.check.violation_mu) << '\n';
  }
  return os.str();
}

std::string montecarlo_json(const McEstimate& e, const Provenance& p) {
  ordered_json j = header(p);
  j["mc_config_digest"] = e.config_digest;
  j["n_traj"] = e.n_traj;
  j["n_pulses"] = e.n_pulses;
  j["n_burnin"] = e.n_burnin;
  j["n_bins"] = e.n_bins;
  j["max_lag"] = e.max_lag;
  j["insufficient_samples"] = e.insufficient_samples;
  j["effective_samples"] = e.effective_samples;
  ordered_json quads = ordered_json::array();
  for (const QuadratureEstimate& q : e.quadratures) {
    ordered_json x;
    x["quadrature"] = to_string(q.quadrature);
    x["mu"] = q.mu;
    x["decay"] = q.decay;
    ordered_json clamped = ordered_json::array();
    for (const auto& c : q.coupling) clamped.push_back(c.clamped);
    x["coupling_clamped"] = clamped;
    x["cavity_variance"] = stat_array(q.cavity_variance);
    x["cavity_lag1_ratio"] = stat_array(q.cavity_lag1_ratio);
    x["output_variance"] = stat_array(q.output_variance);
    x["D"] = stat_array(q.delta);
    x["K"] = stat_array(q.kernel);
    if (!q.cross_bin.empty()) x["cross_bin"] = stat_array(q.cross_bin);
    x["center_bin"] = q.center_bin;
    x["center_lag_ratio"] = stat_json(q.center_lag_ratio);
    quads.push_back(x);
  }
  j["quadratures"] = quads;
  if (!e.xy_cross.empty()) j["xy_cross"] = stat_array(e.xy_cross);
  if (!e.spectrum.empty()) {
    j["spectrum_omega_rad_s"] = e.spectrum_omega;
    j["spectrum"] = stat_array(e.spectrum);
  }
  return dump(j);
}

std::string montecarlo_csv(const McEstimate& e, const Provenance& p) {
  std::ostringstream os;
  os << comment_line(p) << "quantity,quadrature,bin,bin2,lag,value,se\n";
  auto row = [&](const char* quantity, const std::string& q, long bin, long bin2, long lag, const Stat& s) {
    os << quantity << ',' << q << ',' << bin << ',' << bin2 << ',' << lag << ',' << exact_text(s.value)
       << ',' << exact_text(s.se) << '\n';
  };
  const auto L = static_cast<long>(e.max_lag);
  const auto nb = static_cast<long>(e.n_bins);
  for (const QuadratureEstimate& q : e.quadratures) {
    const std::string name = to_string(q.quadrature);
    for (long j = 0; j < nb; ++j) {
      row("cavity_variance", name, j, -1, 0, q.cavity_variance[j]);
      row("cavity_lag1_ratio", name, j, -1, 1, q.cavity_lag1_ratio[j]);
      row("output_variance", name, j, -1, 0, q.output_variance[j]);
      row("D", name, j, -1, 0, q.delta[j]);
      for (long k = 0; k <= L; ++k) row("K", name, j, -1, k, q.kernel[j * (L + 1) + k]);
    }
    for (long k = 0; k <= L && !q.cross_bin.empty(); ++k) {
      for (long j = 0; j < nb; ++j) {
        for (long jj = 0; jj < nb; ++jj) {
          if (j != jj) row("cross_bin", name, j, jj, k, q.cross_bin[(k * nb + j) * nb + jj]);
        }
      }
    }
    row("center_lag_ratio", name, static_cast<long>(q.center_bin), -1, 1, q.center_lag_ratio);
  }
  for (long j = 0; j < nb && !e.xy_cross.empty(); ++j) {
    for (long k = -L; k <= L; ++k) row("xy_cross", "XY", j, j, k, e.xy_cross[j * (2 * L + 1) + k + L]);
  }
  for (std::size_t i = 0; i < e.spectrum.size(); ++i) {
    os << "spectrum,I," << i << ",-1,-1," << exact_text(e.spectrum[i].value) << ','
       << exact_text(e.spectrum[i].se) << '\n';
  }
  return os.str();
}

std::string manifest_json(const Manifest& m) {
  ordered_json j = header(m.provenance);
  j["wall_time_s"] = m.wall_time_s;
  j["artifacts"] = m.artifacts;
  j["config"] = m.config_text;
  return dump(j);
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path fp(path);
  std::error_code ec;
  if (fp.has_parent_path()) std::filesystem::create_directories(fp.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + fp.parent_path().string() + ": " + ec.message());
  std::ofstream out(fp, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file: " + path);
  out << content;
  if (!out) throw IoError("cannot write output file: " + path);
}

}  // namespace spopo
