#include "spopo/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "spopo/digest.hpp"

namespace spopo {

namespace {

std::string format_error(const std::string& message, std::size_t line, const std::string& field) {
  std::ostringstream os;
  if (line > 0) os << "line " << line << ": ";
  if (!field.empty()) os << "field '" << field << "': ";
  os << message;
  return os.str();
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const std::map<std::string, double>& unit_table(Dimension dim) {
  static const std::map<std::string, double> none{{"", 1.0}};
  static const std::map<std::string, double> time{
      {"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}, {"ps", 1e-12}, {"fs", 1e-15}};
  static const std::map<std::string, double> rate{
      {"1/s", 1.0},   {"rad/s", 1.0},   {"1/ms", 1e3},   {"rad/ms", 1e3},
      {"1/us", 1e6},  {"rad/us", 1e6},  {"1/ns", 1e9},   {"rad/ns", 1e9},
      {"1/ps", 1e12}, {"rad/ps", 1e12}, {"1/fs", 1e15},  {"rad/fs", 1e15}};
  static const std::map<std::string, double> length{
      {"m", 1.0}, {"cm", 1e-2}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
  static const std::map<std::string, double> inverse_velocity{
      {"s/m", 1.0}, {"ps/mm", 1e-9}, {"fs/mm", 1e-12}};
  static const std::map<std::string, double> dispersion{
      {"s^2/m", 1.0}, {"ps^2/mm", 1e-21}, {"fs^2/mm", 1e-27}};
  static const std::map<std::string, double> amplitude{
      {"1/sqrt(s)", 1.0}, {"1/sqrt(ns)", std::sqrt(1e9)}, {"1/sqrt(fs)", std::sqrt(1e15)}};
  static const std::map<std::string, double> coupling{
      {"sqrt(s)/m", 1.0}, {"sqrt(s)/mm", 1e3}, {"sqrt(fs)/mm", 1e3 * std::sqrt(1e-15)}};
  static const std::map<std::string, double> angle{{"rad", 1.0}, {"deg", std::numbers::pi / 180.0}};
  switch (dim) {
    case Dimension::dimensionless: return none;
    case Dimension::time: return time;
    case Dimension::rate: return rate;
    case Dimension::length: return length;
    case Dimension::inverse_velocity: return inverse_velocity;
    case Dimension::dispersion: return dispersion;
    case Dimension::amplitude: return amplitude;
    case Dimension::coupling: return coupling;
    case Dimension::angle: return angle;
  }
  return none;
}

const char* base_unit(Dimension dim) {
  switch (dim) {
    case Dimension::dimensionless: return "";
    case Dimension::time: return "s";
    case Dimension::rate: return "1/s";
    case Dimension::length: return "m";
    case Dimension::inverse_velocity: return "s/m";
    case Dimension::dispersion: return "s^2/m";
    case Dimension::amplitude: return "1/sqrt(s)";
    case Dimension::coupling: return "sqrt(s)/m";
    case Dimension::angle: return "rad";
  }
  return "";
}

bool parse_number(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

struct RawValues {
  std::vector<double> numbers;
  std::string unit;
};

// "1, 2, 3 fs", "linspace(0, 1, 5) T_R", "100 fs", "0.9".
RawValues split_values(const IniEntry& e) {
  const std::string v = trim(e.value);
  auto fail = [&](const std::string& why) {
    return ConfigError(why + " in '" + v + "'", e.line, e.key);
  };
  RawValues out;
  if (v.rfind("linspace(", 0) == 0) {
    const auto close = v.find(')');
    if (close == std::string::npos) throw fail("unterminated linspace(");
    out.unit = trim(v.substr(close + 1));
    std::vector<std::string> args;
    std::stringstream ss(v.substr(9, close - 9));
    for (std::string item; std::getline(ss, item, ',');) args.push_back(item);
    double a = 0, b = 0, n = 0;
    if (args.size() != 3 || !parse_number(args[0], a) || !parse_number(args[1], b) ||
        !parse_number(args[2], n) || n < 1 || n != std::floor(n)) {
      throw fail("linspace needs (start, stop, count)");
    }
    out.numbers = linear_grid(a, b, static_cast<std::size_t>(n));
    return out;
  }
  std::vector<std::string> items;
  std::stringstream ss(v);
  for (std::string item; std::getline(ss, item, ',');) items.push_back(trim(item));
  if (items.empty() || v.empty()) throw fail("empty value");
  std::string& last = items.back();
  const auto space = last.find_first_of(" \t");
  if (space != std::string::npos) {
    out.unit = trim(last.substr(space));
    last = trim(last.substr(0, space));
  }
  for (const auto& item : items) {
    double x = 0;
    if (!parse_number(item, x)) throw fail("expected a number, got '" + item + "'");
    out.numbers.push_back(x);
  }
  return out;
}

std::vector<std::string> split_names(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Typed access to one section with unknown-key detection.
class SectionReader {
public:
  SectionReader(const IniSection* section, std::optional<double> round_trip)
      : section_(section), round_trip_(round_trip) {}

  bool has(const std::string& key) const { return section_ && section_->find(key); }
  void set_round_trip(double t) { round_trip_ = t; }

  std::vector<double> list(const std::string& key, Dimension dim) {
    const IniEntry& e = entry(key);
    RawValues raw = split_values(e);
    double factor = 1.0;
    try {
      factor = unit_factor(dim, raw.unit, round_trip_);
    } catch (const ConfigError& err) {
      throw ConfigError(err.what(), e.line, e.key);
    }
    for (double& x : raw.numbers) x *= factor;
    return raw.numbers;
  }

  double quantity(const std::string& key, Dimension dim) {
    const std::vector<double> v = list(key, dim);
    if (v.size() != 1) throw error(key, "expected a single value");
    return v.front();
  }

  double quantity(const std::string& key, Dimension dim, double fallback) {
    return has(key) ? quantity(key, dim) : fallback;
  }

  std::optional<double> optional_quantity(const std::string& key, Dimension dim) {
    if (!has(key)) return std::nullopt;
    return quantity(key, dim);
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const IniEntry& e = entry(key);
    const std::string v = trim(e.value);
    char* end = nullptr;
    errno = 0;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v[0] == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
      throw ConfigError("expected a nonnegative integer, got '" + v + "'", e.line, e.key);
    }
    return x;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? static_cast<std::size_t>(unsigned_integer(key)) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const IniEntry& e = entry(key);
    const std::string v = trim(e.value);
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    throw ConfigError("expected true or false, got '" + v + "'", e.line, e.key);
  }

  std::string text(const std::string& key) { return trim(entry(key).value); }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : fallback;
  }

  template <class Fn>
  auto convert(const std::string& key, Fn fn) {
    const IniEntry& e = entry(key);
    try {
      return fn(trim(e.value));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError(ex.what(), e.line, e.key);
    }
  }

  ConfigError error(const std::string& key, const std::string& message) const {
    const IniEntry* e = section_ ? section_->find(key) : nullptr;
    return ConfigError(message, e ? e->line : (section_ ? section_->line : 0), key);
  }

  void require(const std::string& key) const {
    if (!has(key)) {
      throw ConfigError("missing required field in [" + (section_ ? section_->name : "") + "]",
                        section_ ? section_->line : 0, key);
    }
  }

  void forbid(const std::string& key, const std::string& why) {
    if (has(key)) throw error(key, why);
  }

  /// Rejects keys that were never read.
  void finish() const {
    if (!section_) return;
    for (const auto& e : section_->entries) {
      if (!used_.count(e.key)) {
        const std::string where = section_->name.empty() ? "top level" : "[" + section_->name + "]";
        throw ConfigError("unknown field in " + where, e.line, e.key);
      }
    }
  }

private:
  const IniEntry& entry(const std::string& key) {
    require(key);
    used_.insert(key);
    return *section_->find(key);
  }

  const IniSection* section_;
  std::optional<double> round_trip_;
  std::set<std::string> used_;
};

std::string quantity_text(double value, Dimension dim) {
  std::string s = exact_text(value);
  const char* unit = base_unit(dim);
  if (*unit) s += std::string(" ") + unit;
  return s;
}

std::string list_text(const std::vector<double>& values, Dimension dim) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += exact_text(values[i]);
  }
  const char* unit = base_unit(dim);
  if (*unit) s += std::string(" ") + unit;
  return s;
}

const char* bool_text(bool b) { return b ? "true" : "false"; }

std::string sweep_variable_text(SweepVariable v) {
  return v == SweepVariable::lo_duration ? "tau_lo" : "delay";
}

SweepVariable sweep_variable_from_string(const std::string& s) {
  if (s == "tau_lo") return SweepVariable::lo_duration;
  if (s == "delay") return SweepVariable::lo_delay;
  throw ParameterError("unknown sweep variable '" + s + "' (tau_lo | delay)");
}

ParamsBlock read_params(SectionReader& r) {
  ParamsBlock p;
  const std::string mode = r.text("mode", "normalized");
  if (mode != "normalized" && mode != "physical") {
    throw r.error("mode", "expected normalized or physical, got '" + mode + "'");
  }
  p.normalized = mode == "normalized";
  if (r.has("pump_shape")) {
    p.pump_shape = r.convert("pump_shape", [](const std::string& s) { return envelope_kind_from_string(s); });
    if (p.pump_shape == EnvelopeKind::tabulated) {
      throw r.error("pump_shape", "tabulated pumps are not supported in config files");
    }
  }
  p.kappa_p = r.quantity("kappa_p", Dimension::rate, 0.0);
  if (p.normalized) {
    r.forbid("kappa_s", "not allowed in normalized mode (use kappa_s_T_R)");
    r.forbid("g", "not allowed in normalized mode");
    r.forbid("pump_peak", "not allowed in normalized mode (use mu0)");
    r.require("kappa_s_T_R");
    r.require("mu0");
    p.kappa_s_T_R = r.quantity("kappa_s_T_R", Dimension::dimensionless);
    p.mu0 = r.quantity("mu0", Dimension::dimensionless);
    p.round_trip = r.quantity("round_trip", Dimension::time, 1.0);
    p.kappa_s = p.kappa_s_T_R / p.round_trip;
    p.g = 1.0;
  } else {
    for (const char* key : {"kappa_s", "g", "round_trip", "pump_peak"}) r.require(key);
    r.forbid("kappa_s_T_R", "not allowed in physical mode");
    r.forbid("mu0", "not allowed in physical mode");
    p.kappa_s = r.quantity("kappa_s", Dimension::rate);
    p.g = r.quantity("g", Dimension::amplitude);
    p.round_trip = r.quantity("round_trip", Dimension::time);
    p.pump_peak = r.quantity("pump_peak", Dimension::amplitude);
  }
  r.set_round_trip(p.round_trip);
  p.pump_center = r.quantity("pump_center", Dimension::time, 0.0);
  if (r.has("tau_p") == r.has("tau_p_over_T_R")) {
    throw r.error("tau_p", "give exactly one of tau_p and tau_p_over_T_R");
  }
  p.pump_duration = r.has("tau_p") ? r.quantity("tau_p", Dimension::time)
                                   : r.quantity("tau_p_over_T_R", Dimension::dimensionless) * p.round_trip;
  return p;
}

HomodyneBlock read_homodyne(SectionReader& r) {
  HomodyneBlock h;
  const std::string lo = r.text("lo", "delta");
  if (lo == "delta") {
    h.delta = true;
    r.forbid("tau_lo", "not allowed for a delta LO");
  } else {
    h.delta = false;
    h.shape = r.convert("lo", [](const std::string& s) { return envelope_kind_from_string(s); });
    if (h.shape == EnvelopeKind::tabulated) throw r.error("lo", "tabulated LOs are not supported");
    r.require("tau_lo");
    h.tau_lo = r.quantity("tau_lo", Dimension::time);
  }
  h.amplitude = r.quantity("amplitude", Dimension::dimensionless, 1.0);
  if (r.has("quadrature") && r.has("phase")) throw r.error("phase", "give either phase or quadrature");
  if (r.has("quadrature")) {
    const Quadrature q = r.convert("quadrature", [](const std::string& s) { return quadrature_from_string(s); });
    h.phase = q == Quadrature::X ? 0.0 : 0.5 * std::numbers::pi;
  } else {
    h.phase = r.quantity("phase", Dimension::angle, 0.0);
  }
  h.delay = r.quantity("delay", Dimension::time, 0.0);
  h.detector_time = r.quantity("detector_time", Dimension::time, 0.0);
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------

ConfigError::ConfigError(const std::string& message, std::size_t line, std::string field)
    : ParameterError(format_error(message, line, field)), line_(line), field_(std::move(field)) {}

double unit_factor(Dimension dim, const std::string& unit, std::optional<double> round_trip) {
  if (unit == "T_R" && dim == Dimension::time) {
    if (!round_trip) throw ConfigError("unit T_R needs the round-trip time from [params]");
    return *round_trip;
  }
  if (unit == "1/T_R" && dim == Dimension::rate) {
    if (!round_trip) throw ConfigError("unit 1/T_R needs the round-trip time from [params]");
    return 1.0 / *round_trip;
  }
  const auto& table = unit_table(dim);
  const auto it = table.find(unit);
  if (it != table.end()) return it->second;
  if (unit.empty()) throw ConfigError(std::string("missing unit (expected e.g. ") + base_unit(dim) + ")");
  std::string known;
  for (const auto& [name, f] : table) known += (known.empty() ? "" : ", ") + name;
  if (dim == Dimension::time) known += ", T_R";
  if (dim == Dimension::rate) known += ", 1/T_R";
  throw ConfigError("unknown unit '" + unit + "' (expected " + (known.empty() ? "none" : known) + ")");
}

const IniEntry* IniSection::find(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

IniDocument IniDocument::parse(const std::string& text) {
  IniDocument doc;
  doc.sections.push_back({"", 0, {}});
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) throw ConfigError("empty section name", line_no);
      if (doc.section(name)) throw ConfigError("duplicate section [" + name + "]", line_no);
      doc.sections.push_back({name, line_no, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key", line_no);
    if (value.empty()) throw ConfigError("empty value", line_no, key);
    IniSection& s = doc.sections.back();
    if (s.find(key)) throw ConfigError("duplicate field", line_no, key);
    s.entries.push_back({key, value, line_no});
  }
  return doc;
}

IniDocument IniDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const IniSection* IniDocument::section(const std::string& name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::string IniDocument::to_text() const {
  std::ostringstream os;
  bool first = true;
  for (const auto& s : sections) {
    if (s.name.empty() && s.entries.empty()) continue;
    if (!first) os << '\n';
    first = false;
    if (!s.name.empty()) os << '[' << s.name << "]\n";
    for (const auto& e : s.entries) os << e.key << " = " << e.value << '\n';
  }
  return os.str();
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::spectrum: return "spectrum";
    case Experiment::correlations: return "correlations";
    case Experiment::montecarlo: return "montecarlo";
    case Experiment::threshold: return "threshold";
    case Experiment::crystal_check: return "crystal-check";
    case Experiment::lo_sweep: return "lo-sweep";
  }
  return "spectrum";
}

Experiment experiment_from_string(const std::string& name) {
  for (Experiment e : {Experiment::spectrum, Experiment::correlations, Experiment::montecarlo,
                       Experiment::threshold, Experiment::crystal_check, Experiment::lo_sweep}) {
    if (to_string(e) == name) return e;
  }
  throw ParameterError("unknown experiment '" + name +
                       "' (spectrum | correlations | montecarlo | threshold | crystal-check | lo-sweep)");
}

std::string to_string(SpectrumForm f) {
  switch (f) {
    case SpectrumForm::full: return "full";
    case SpectrumForm::short_lo: return "short_lo";
    case SpectrumForm::short_lo_general: return "short_lo_general";
    case SpectrumForm::averaged: return "averaged";
  }
  return "full";
}

SpectrumForm spectrum_form_from_string(const std::string& name) {
  for (SpectrumForm f : {SpectrumForm::full, SpectrumForm::short_lo, SpectrumForm::short_lo_general,
                         SpectrumForm::averaged}) {
    if (to_string(f) == name) return f;
  }
  throw ParameterError("unknown spectrum form '" + name +
                       "' (full | short_lo | short_lo_general | averaged)");
}

SpopoParams ParamsBlock::build() const {
  const double ks = normalized ? kappa_s_T_R / round_trip : kappa_s;
  const double gg = normalized ? 1.0 : g;
  const double peak = normalized ? mu0 * ks / (2.0 * gg) : pump_peak;
  PulseEnvelope pump = pump_shape == EnvelopeKind::sech2
                           ? make_sech2(peak, pump_duration, pump_center, round_trip)
                           : make_gaussian(peak, pump_duration, pump_center, round_trip);
  return SpopoParams(ks, kappa_p, gg, round_trip, std::move(pump));
}

HomodyneSetup HomodyneBlock::build() const {
  HomodyneSetup h;
  if (delta) {
    h = delta_lo_setup(phase, delay);
  } else if (shape == EnvelopeKind::sech2) {
    h.lo = make_sech2(amplitude, tau_lo);
    h.phase = phase;
    h.delay = delay;
  } else {
    h = gaussian_lo_setup(amplitude, tau_lo, phase, delay);
  }
  if (delta) h.delta_weight = amplitude * amplitude;
  h.detector_time = detector_time;
  h.validate();
  return h;
}

SampleGrid GridBlock::build(const SpopoParams& params) const {
  if (halfwidth) return make_window_grid(params.round_trip(), bins, params.pump().center(), *halfwidth);
  return default_grid(params.pump(), bins);
}

void RunConfig::require_blocks() const {
  auto need = [&](bool present, const char* name) {
    if (!present) {
      throw ConfigError(std::string("experiment '") + to_string(experiment) + "' needs a [" + name +
                        "] section");
    }
  };
  switch (experiment) {
    case Experiment::spectrum:
      need(params.has_value(), "params");
      need(spectrum.has_value(), "spectrum");
      if (spectrum->form == SpectrumForm::full) need(homodyne.has_value(), "homodyne");
      break;
    case Experiment::correlations:
      need(params.has_value(), "params");
      need(correlations.has_value(), "correlations");
      break;
    case Experiment::montecarlo:
      need(params.has_value(), "params");
      need(montecarlo.has_value(), "montecarlo");
      if (!montecarlo->omega.empty()) need(homodyne.has_value(), "homodyne");
      break;
    case Experiment::threshold:
      need(params.has_value(), "params");
      break;
    case Experiment::crystal_check:
      need(crystal.has_value(), "crystal");
      break;
    case Experiment::lo_sweep:
      need(params.has_value(), "params");
      need(homodyne.has_value(), "homodyne");
      need(sweep.has_value(), "sweep");
      break;
  }
}

McConfig RunConfig::mc_config() const {
  if (!params || !montecarlo) throw ConfigError("montecarlo needs [params] and [montecarlo]");
  const SpopoParams p = params->build();
  const MonteCarloBlock& m = *montecarlo;
  const SampleGrid grid = m.halfwidth ? make_window_grid(p.round_trip(), m.bins, p.pump().center(), *m.halfwidth)
                                      : mc_grid(p, m.bins);
  McConfig c(p, grid);
  c.n_traj = m.n_traj;
  c.n_pulses = m.n_pulses;
  c.n_burnin = m.n_burnin;
  c.seed = seed;
  c.simulate_x = m.simulate_x;
  c.simulate_y = m.simulate_y;
  c.max_lag = m.max_lag;
  c.cross_bin = m.cross_bin;
  c.cross_quadrature = m.cross_quadrature;
  c.spectrum_omega = m.omega;
  if (homodyne) c.homodyne = homodyne->build();
  c.substeps = m.substeps;
  c.chunk = m.chunk;
  c.workers = m.workers;
  c.dump_path = m.dump;
  return c;
}

RunConfig parse_run_config(const IniDocument& doc, std::optional<Experiment> fallback) {
  static const std::set<std::string> known{"",        "params",       "homodyne", "grid",  "spectrum",
                                           "correlations", "montecarlo", "sweep",    "crystal"};
  for (const auto& s : doc.sections) {
    if (!known.count(s.name)) throw ConfigError("unknown section [" + s.name + "]", s.line);
  }

  RunConfig cfg;
  SectionReader top(doc.section(""), std::nullopt);
  if (top.has("experiment")) {
    cfg.experiment = top.convert("experiment", [](const std::string& s) { return experiment_from_string(s); });
    if (fallback && *fallback != cfg.experiment) {
      throw top.error("experiment", "config is for '" + to_string(cfg.experiment) + "' but '" +
                                        to_string(*fallback) + "' was requested");
    }
  } else if (fallback) {
    cfg.experiment = *fallback;
  } else {
    throw ConfigError("missing required field at top level", 0, "experiment");
  }
  if (top.has("seed")) cfg.seed = top.unsigned_integer("seed");
  top.finish();

  std::optional<double> round_trip;
  if (const IniSection* s = doc.section("params")) {
    SectionReader r(s, std::nullopt);
    cfg.params = read_params(r);
    r.finish();
    round_trip = cfg.params->round_trip;
  }
  if (const IniSection* s = doc.section("homodyne")) {
    SectionReader r(s, round_trip);
    cfg.homodyne = read_homodyne(r);
    r.finish();
  }
  if (const IniSection* s = doc.section("grid")) {
    SectionReader r(s, round_trip);
    GridBlock g;
    g.bins = r.count("bins", g.bins);
    g.halfwidth = r.optional_quantity("halfwidth", Dimension::time);
    r.finish();
    cfg.grid = g;
  }
  if (const IniSection* s = doc.section("spectrum")) {
    SectionReader r(s, round_trip);
    SpectrumBlock b;
    if (r.has("form")) b.form = r.convert("form", [](const std::string& v) { return spectrum_form_from_string(v); });
    if (r.has("quadrature")) {
      b.quadrature = r.convert("quadrature", [](const std::string& v) { return quadrature_from_string(v); });
    }
    r.require("omega");
    b.omega = r.list("omega", Dimension::rate);
    b.m_max = r.count("m_max", 0);
    r.finish();
    cfg.spectrum = b;
  }
  if (const IniSection* s = doc.section("correlations")) {
    SectionReader r(s, round_trip);
    CorrelationsBlock b;
    if (r.has("quadrature")) {
      b.quadrature = r.convert("quadrature", [](const std::string& v) { return quadrature_from_string(v); });
    }
    b.max_lag = r.count("max_lag", b.max_lag);
    r.finish();
    cfg.correlations = b;
  }
  if (const IniSection* s = doc.section("montecarlo")) {
    SectionReader r(s, round_trip);
    MonteCarloBlock b;
    b.n_traj = r.count("n_traj", b.n_traj);
    b.n_pulses = r.count("n_pulses", b.n_pulses);
    if (r.has("n_burnin")) b.n_burnin = r.count("n_burnin", 0);
    b.bins = r.count("bins", b.bins);
    b.halfwidth = r.optional_quantity("halfwidth", Dimension::time);
    if (r.has("quadratures")) {
      const auto names = r.convert("quadratures", [](const std::string& v) {
        std::vector<Quadrature> q;
        for (const auto& n : split_names(v)) q.push_back(quadrature_from_string(n));
        return q;
      });
      b.simulate_x = std::find(names.begin(), names.end(), Quadrature::X) != names.end();
      b.simulate_y = std::find(names.begin(), names.end(), Quadrature::Y) != names.end();
    }
    b.max_lag = r.count("max_lag", b.max_lag);
    b.cross_bin = r.boolean("cross_bin", b.cross_bin);
    b.cross_quadrature = r.boolean("cross_quadrature", b.cross_quadrature);
    if (r.has("omega")) b.omega = r.list("omega", Dimension::rate);
    b.substeps = r.count("substeps", b.substeps);
    b.chunk = r.count("chunk", b.chunk);
    b.workers = static_cast<int>(r.count("workers", 0));
    b.dump = r.text("dump", "");
    r.finish();
    cfg.montecarlo = b;
  }
  if (const IniSection* s = doc.section("sweep")) {
    SectionReader r(s, round_trip);
    SweepBlock b;
    r.require("variable");
    b.variable = r.convert("variable", [](const std::string& v) { return sweep_variable_from_string(v); });
    r.require("values");
    b.values = r.list("values", Dimension::time);
    b.m_max = r.count("m_max", 0);
    b.gnuplot = r.boolean("gnuplot", b.gnuplot);
    r.finish();
    cfg.sweep = b;
  }
  if (const IniSection* s = doc.section("crystal")) {
    SectionReader r(s, round_trip);
    CrystalSpec c;
    for (const char* key : {"length", "inv_group_velocity_pump", "inv_group_velocity_signal", "gvd_pump",
                            "gvd_signal", "coupling", "tau_pump", "pump_peak_amplitude"}) {
      r.require(key);
    }
    c.length = r.quantity("length", Dimension::length);
    c.inv_group_velocity_pump = r.quantity("inv_group_velocity_pump", Dimension::inverse_velocity);
    c.inv_group_velocity_signal = r.quantity("inv_group_velocity_signal", Dimension::inverse_velocity);
    c.gvd_pump = r.quantity("gvd_pump", Dimension::dispersion);
    c.gvd_signal = r.quantity("gvd_signal", Dimension::dispersion);
    c.coupling = r.quantity("coupling", Dimension::coupling);
    c.tau_pump = r.quantity("tau_pump", Dimension::time);
    c.tau_signal = r.optional_quantity("tau_signal", Dimension::time);
    c.pump_peak_amplitude = r.quantity("pump_peak_amplitude", Dimension::amplitude);
    r.finish();
    cfg.crystal = c;
  }
  cfg.require_blocks();
  return cfg;
}

RunConfig parse_run_config_text(const std::string& text, std::optional<Experiment> fallback) {
  return parse_run_config(IniDocument::parse(text), fallback);
}

RunConfig load_run_config(const std::filesystem::path& path, std::optional<Experiment> fallback) {
  return parse_run_config(IniDocument::load(path), fallback);
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "experiment = " << to_string(c.experiment) << "\nseed = " << c.seed << '\n';
  if (c.params) {
    const ParamsBlock& p = *c.params;
    os << "\n[params]\nmode = " << (p.normalized ? "normalized" : "physical") << '\n';
    if (p.normalized) {
      os << "kappa_s_T_R = " << exact_text(p.kappa_s_T_R) << "\nmu0 = " << exact_text(p.mu0) << '\n';
    } else {
      os << "kappa_s = " << quantity_text(p.kappa_s, Dimension::rate)
         << "\ng = " << quantity_text(p.g, Dimension::amplitude)
         << "\npump_peak = " << quantity_text(p.pump_peak, Dimension::amplitude) << '\n';
    }
    os << "kappa_p = " << quantity_text(p.kappa_p, Dimension::rate)
       << "\nround_trip = " << quantity_text(p.round_trip, Dimension::time)
       << "\npump_shape = " << to_string(p.pump_shape)
       << "\ntau_p = " << quantity_text(p.pump_duration, Dimension::time)
       << "\npump_center = " << quantity_text(p.pump_center, Dimension::time) << '\n';
  }
  if (c.homodyne) {
    const HomodyneBlock& h = *c.homodyne;
    os << "\n[homodyne]\nlo = " << (h.delta ? "delta" : to_string(h.shape)) << '\n';
    if (!h.delta) os << "tau_lo = " << quantity_text(h.tau_lo, Dimension::time) << '\n';
    os << "amplitude = " << exact_text(h.amplitude) << "\nphase = " << quantity_text(h.phase, Dimension::angle)
       << "\ndelay = " << quantity_text(h.delay, Dimension::time)
       << "\ndetector_time = " << quantity_text(h.detector_time, Dimension::time) << '\n';
  }
  if (c.grid) {
    os << "\n[grid]\nbins = " << c.grid->bins << '\n';
    if (c.grid->halfwidth) os << "halfwidth = " << quantity_text(*c.grid->halfwidth, Dimension::time) << '\n';
  }
  if (c.spectrum) {
    const SpectrumBlock& s = *c.spectrum;
    os << "\n[spectrum]\nform = " << to_string(s.form) << "\nquadrature = " << to_string(s.quadrature)
       << "\nomega = " << list_text(s.omega, Dimension::rate) << "\nm_max = " << s.m_max << '\n';
  }
  if (c.correlations) {
    os << "\n[correlations]\nquadrature = " << to_string(c.correlations->quadrature)
       << "\nmax_lag = " << c.correlations->max_lag << '\n';
  }
  if (c.montecarlo) {
    const MonteCarloBlock& m = *c.montecarlo;
    std::string quads;
    if (m.simulate_x) quads += "X";
    if (m.simulate_y) quads += quads.empty() ? "Y" : ", Y";
    os << "\n[montecarlo]\nn_traj = " << m.n_traj << "\nn_pulses = " << m.n_pulses << '\n';
    if (m.n_burnin) os << "n_burnin = " << *m.n_burnin << '\n';
    os << "bins = " << m.bins << '\n';
    if (m.halfwidth) os << "halfwidth = " << quantity_text(*m.halfwidth, Dimension::time) << '\n';
    if (!quads.empty()) os << "quadratures = " << quads << '\n';
    os << "max_lag = " << m.max_lag << "\ncross_bin = " << bool_text(m.cross_bin)
       << "\ncross_quadrature = " << bool_text(m.cross_quadrature) << '\n';
    if (!m.omega.empty()) os << "omega = " << list_text(m.omega, Dimension::rate) << '\n';
    os << "substeps = " << m.substeps << "\nchunk = " << m.chunk << "\nworkers = " << m.workers << '\n';
    if (!m.dump.empty()) os << "dump = " << m.dump << '\n';
  }
  if (c.sweep) {
    const SweepBlock& s = *c.sweep;
    os << "\n[sweep]\nvariable = " << sweep_variable_text(s.variable)
       << "\nvalues = " << list_text(s.values, Dimension::time) << "\nm_max = " << s.m_max
       << "\ngnuplot = " << bool_text(s.gnuplot) << '\n';
  }
  if (c.crystal) {
    const CrystalSpec& k = *c.crystal;
    os << "\n[crystal]\nlength = " << quantity_text(k.length, Dimension::length)
       << "\ninv_group_velocity_pump = " << quantity_text(k.inv_group_velocity_pump, Dimension::inverse_velocity)
       << "\ninv_group_velocity_signal = "
       << quantity_text(k.inv_group_velocity_signal, Dimension::inverse_velocity)
       << "\ngvd_pump = " << quantity_text(k.gvd_pump, Dimension::dispersion)
       << "\ngvd_signal = " << quantity_text(k.gvd_signal, Dimension::dispersion)
       << "\ncoupling = " << quantity_text(k.coupling, Dimension::coupling)
       << "\ntau_pump = " << quantity_text(k.tau_pump, Dimension::time) << '\n';
    if (k.tau_signal) os << "tau_signal = " << quantity_text(*k.tau_signal, Dimension::time) << '\n';
    os << "pump_peak_amplitude = " << quantity_text(k.pump_peak_amplitude, Dimension::amplitude) << '\n';
  }
  return os.str();
}

std::string config_digest(const RunConfig& config) {
  // The worker count changes scheduling only, never results.
  RunConfig c = config;
  if (c.montecarlo) c.montecarlo->workers = 0;
  return sha256_hex(to_text(c));
}

}  // namespace spopo
