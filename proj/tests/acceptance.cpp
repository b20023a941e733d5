// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spopo/analytic.hpp"
#include "spopo/cli.hpp"
#include "spopo/montecarlo.hpp"
#include "spopo/regimes.hpp"
#include "spopo/spectra.hpp"

using namespace spopo;
namespace fs = std::filesystem;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::string detail;
};

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::abs(b); }

struct Tally {
  std::size_t hits = 0;
  std::size_t total = 0;
  void add(const Stat& s, double truth, double z) {
    ++total;
    if (std::abs(s.value - truth) <= z * s.se) ++hits;
  }
  double fraction() const { return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0; }
  std::string text() const {
    std::ostringstream os;
    os << hits << "/" << total << " (" << 100.0 * fraction() << "%)";
    return os.str();
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Shared run for criteria 4-6: kappa_s T_R = 0.1, mu(0) = 0.9, N_t = 16.
const SpopoParams& reference_point() {
  static const SpopoParams p = normalized_params(0.1, 0.9, 0.05);
  return p;
}

McConfig kernel_run_config(std::uint64_t seed) {
  McConfig c(reference_point(), mc_grid(reference_point(), 16));
  c.n_traj = 2000;
  c.n_pulses = 5000;
  c.max_lag = 5;
  c.cross_bin = true;
  c.cross_quadrature = false;
  c.seed = seed;
  return c;
}

constexpr std::size_t kSeeds = 10;

const std::vector<McEstimate>& kernel_runs() {
  static const std::vector<McEstimate> runs = [] {
    std::vector<McEstimate> r;
    for (std::uint64_t s = 1; s <= kSeeds; ++s) r.push_back(run_monte_carlo(kernel_run_config(s)));
    return r;
  }();
  return runs;
}

Outcome criterion_1() {
  Outcome o;
  std::ostringstream d;
  for (auto [k, g] : {std::pair{2.0, 1.0}, {1e7, 1.0}, {0.37, 2.9}, {5e8, 3e-3}}) {
    const double closed = k * k / (4.0 * g * g);
    if (!rel_close(threshold_peak_flux(k, g), closed, 1e-12)) o.pass = false;
  }
  const double T = 1e-8;
  for (double a : {0.5, 3.0, 1e6}) {
    const double flat = mean_flux(make_tabulated(std::vector<double>(16, a), T / 16, T), T);
    if (!rel_close(flat, a * a, 1e-12)) o.pass = false;
  }
  double worst = 0.0;
  for (std::size_t n : {512u, 1024u, 4096u}) {
    for (double tau : {1e-13, 1e-11, 1e-10}) {
      const double a = 2.0;
      const double closed = a * a * tau * std::sqrt(pi / 2) / T;
      const double got = mean_flux(make_gaussian(a, tau, 0.0, T), T, make_window_grid(T, n, 0.0, 5 * tau));
      worst = std::max(worst, std::abs(got - closed) / closed);
      const double full = mean_flux(make_gaussian(a, tau, 0.0, T), T);
      worst = std::max(worst, std::abs(full - closed) / closed);
    }
  }
  if (worst > 1e-6) o.pass = false;
  d << "closed forms <= 1e-12; Gaussian mean flux worst rel err " << fmt(worst);
  o.detail = d.str();
  return o;
}

Outcome criterion_2() {
  Outcome o;
  double worst = 0.0;
  for (double x : {0.1, 0.01}) {
    const std::size_t m_max = static_cast<std::size_t>(std::ceil(10.0 / x));
    const std::vector<double> w{0.0, 2 * pi, 4 * pi};
    const SpectrumSeries s = noise_spectrum_short_lo(x, 1.0, w, m_max);
    for (double v : s.values) {
      worst = std::max(worst, std::abs(v) / (x * x));
      if (std::abs(v) > x * x) o.pass = false;
    }
  }
  o.detail = "max |S| / (kappa_s T_R)^2 = " + fmt(worst);
  return o;
}

Outcome criterion_3() {
  Outcome o;
  const SpopoParams p = normalized_params(0.1, 0.999, 0.05);
  const SmoothKernel y = near_threshold_limit(p, Quadrature::Y);
  const std::vector<double> w = linear_grid(0.0, 20.0 * p.kappa_s(), 401);
  const SpectrumSeries ref = averaged_spectrum(p.kappa_s(), w);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    worst = std::max(worst, std::abs(spectrum_from_correlation(y, w[i]) - ref.values[i]));
  }
  o.pass = worst <= 1e-6;
  o.detail = "max |FT - averaged| = " + fmt(worst) + " over 401 points";
  return o;
}

Outcome criterion_4() {
  Outcome o;
  const McEstimate& e = kernel_runs().front();
  const McConfig c = kernel_run_config(1);
  std::ostringstream d;
  for (const auto& q : e.quadratures) {
    const CorrelationKernel k = quadrature_kernel(c.params, q.quadrature, c.grid, c.max_lag);
    Tally t;
    for (std::size_t j = 0; j < e.n_bins; ++j) {
      t.add(q.delta[j], k.D(j), 3.0);
      for (std::size_t l = 0; l <= e.max_lag; ++l) t.add(q.K(j, l, e.max_lag), k.K(j, l), 3.0);
    }
    if (t.fraction() < 0.95) o.pass = false;
    d << to_string(q.quadrature) << " " << t.text() << " within 3 SE; ";
  }
  d << "n_traj 2000, n_pulses 5000, N_t 16";
  o.detail = d.str();
  return o;
}

Outcome criterion_5() {
  Outcome o;
  Tally t;
  for (const McEstimate& e : kernel_runs()) {
    const std::size_t n = e.n_bins;
    for (const auto& q : e.quadratures) {
      for (std::size_t k = 0; k <= e.max_lag; ++k) {
        for (std::size_t j = 0; j < n; ++j) {
          for (std::size_t jj = 0; jj < n; ++jj) {
            if (j != jj) t.add(q.cross_bin[(k * n + j) * n + jj], 0.0, 3.0);
          }
        }
      }
    }
  }
  o.pass = t.fraction() >= 0.99;
  o.detail = t.text() + " cross-bin cells within 3 SE of zero, " + std::to_string(kSeeds) + " seeds";
  return o;
}

Outcome criterion_6() {
  Outcome o;
  const McEstimate& e = kernel_runs().front();
  const double T = reference_point().round_trip();
  std::ostringstream d;
  for (const auto& q : e.quadratures) {
    const double expected = std::exp(-q.decay[q.center_bin] * T);
    const double rel = std::abs(q.center_lag_ratio.value - expected) / expected;
    if (rel > 0.02) o.pass = false;
    d << to_string(q.quadrature) << " ratio " << fmt(q.center_lag_ratio.value) << " vs " << fmt(expected)
      << " (" << fmt(100 * rel) << "%); ";
  }
  for (double mu0 : {0.0, 0.5, 0.9, 0.99}) {
    const SpopoParams p = normalized_params(0.1, mu0, 0.05);
    if (!rel_close(correlated_pulse_count(p, Quadrature::X), 1.0 / (0.1 * (1 - mu0)), 1e-12)) o.pass = false;
    if (!rel_close(correlated_pulse_count(p, Quadrature::Y), 1.0 / (0.1 * (1 + mu0)), 1e-12)) o.pass = false;
  }
  d << "pulse counts exact";
  o.detail = d.str();
  return o;
}

Outcome criterion_7() {
  Outcome o;
  const SpopoParams& p = reference_point();
  McConfig c(p, make_window_grid(1.0, 5, 0.0, 0.1));
  c.simulate_x = false;
  c.cross_bin = false;
  c.cross_quadrature = false;
  c.n_traj = 2000;
  c.n_pulses = 5000;
  c.seed = 77;
  c.homodyne = delta_lo_setup(pi / 2);
  c.spectrum_omega = {0.0, pi, 2 * pi};
  const McEstimate e = run_monte_carlo(c);
  const SpectrumSeries ref = noise_spectrum_full(p, *c.homodyne, c.spectrum_omega, Quadrature::Y);
  std::ostringstream d;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    const Stat& s = e.spectrum[i];
    const double z = std::abs(s.value - ref.values[i]) / s.se;
    if (z > 3.0) o.pass = false;
    d << "S(" << fmt(c.spectrum_omega[i]) << "/T_R) " << fmt(s.value) << "+-" << fmt(s.se) << " vs "
      << fmt(ref.values[i]) << "; ";
  }
  o.detail = d.str();
  return o;
}

Outcome criterion_8() {
  Outcome o;
  McConfig c(reference_point(), mc_grid(reference_point(), 5));
  c.simulate_y = false;
  c.cross_bin = false;
  c.cross_quadrature = false;
  c.n_traj = 200;
  c.n_pulses = 5000;
  c.seed = 8;
  c.independent_output_vacuum = true;
  const McEstimate e = run_monte_carlo(c);
  const QuadratureEstimate& x = *e.find(Quadrature::X);
  const std::size_t j = x.center_bin;
  const double truth = kernel_value(c.params, Quadrature::X, c.grid.time(j), 1);
  const Stat& k1 = x.K(j, 1, e.max_lag);
  const double z = std::abs(k1.value - truth) / k1.se;
  o.pass = z > 5.0;
  o.detail = "X K(1) " + fmt(k1.value) + " vs analytic " + fmt(truth) + ": " + fmt(z) + " SE";
  return o;
}

Outcome criterion_9() {
  Outcome o;
  const SpopoParams p = normalized_params(0.1, 0.9, 0.02);
  const HomodyneSetup tmpl = gaussian_lo_setup(1.0, 0.005, pi / 2);
  SweepSpec dur;
  dur.variable = SweepVariable::lo_duration;
  dur.values = {0.0, 1e-6, 1e-5, 1e-4, 3e-4, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1};
  const std::vector<SweepRow> r = lo_sweep(p, tmpl, dur);
  const double delta =
      noise_spectrum_full(p, delta_lo_setup(pi / 2), std::vector<double>{0.0}, Quadrature::Y).values[0];
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (r[i].squeezed_noise < r[i - 1].squeezed_noise) o.pass = false;
  }
  const double limit_err = std::abs(r[1].squeezed_noise - delta);
  if (limit_err > 1e-3) o.pass = false;

  SweepSpec del;
  del.variable = SweepVariable::lo_delay;
  del.values = {-0.04, -0.02, -0.01, -0.005, -0.001, 0.0, 0.001, 0.005, 0.01, 0.02, 0.04};
  const std::vector<SweepRow> d = lo_sweep(p, tmpl, del);
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (std::abs(del.values[k]) > std::abs(del.values[i]) && d[k].squeezed_noise < d[i].squeezed_noise) {
        o.pass = false;
      }
    }
  }
  o.detail = "S_Y(0) from " + fmt(r.front().squeezed_noise) + " to " + fmt(r.back().squeezed_noise) +
             ", tau_LO -> 0 error " + fmt(limit_err);
  return o;
}

Outcome criterion_10() {
  Outcome o;
  constexpr double fs = 1e-15, mm = 1e-3;
  CrystalSpec c;
  c.length = 0.1 * mm;
  c.inv_group_velocity_pump = 5700 * fs / mm;
  c.inv_group_velocity_signal = 5500 * fs / mm;
  c.gvd_pump = 330 * fs * fs / mm;
  c.gvd_signal = 180 * fs * fs / mm;
  c.coupling = 0.106 / mm;
  c.pump_peak_amplitude = 1.0;
  c.tau_pump = 100 * fs;
  c.tau_signal = 100 * fs;
  const RegimeReport r = characteristic_lengths(c);
  const double tau = 100 * fs;
  const bool hand = rel_close(r.walkoff_length, tau / (200 * fs / mm), 1e-12) &&
                    rel_close(r.dispersion_length_pump, tau * tau / (2 * 330 * fs * fs / mm), 1e-12) &&
                    rel_close(r.dispersion_length_signal, tau * tau / (2 * 180 * fs * fs / mm), 1e-12) &&
                    rel_close(r.nonlinear_length, 1.0 / (2 * 0.106 / mm), 1e-12) &&
                    rel_close(r.dispersion_time_signal, std::sqrt(2 * 180 * fs * fs / mm * 0.1 * mm), 1e-12);
  const double lgv = r.walkoff_length / mm, ldp = r.dispersion_length_pump / mm;
  const double lds = r.dispersion_length_signal / mm, lnl = r.nonlinear_length / mm;
  const bool ranges = lgv >= 0.25 && lgv <= 1.0 && ldp >= 10 && ldp <= 20 && lds >= 20 && lds <= 30 &&
                      std::abs(lnl - 4.7) <= 0.05 * 4.7;
  const bool six_fs = rel_close(r.dispersion_time_signal, 6 * fs, 1e-12);
  o.pass = hand && ranges && six_fs && r.ordering_ok;
  o.detail = "L_GV " + fmt(lgv) + " mm, L_D,p " + fmt(ldp) + " mm, L_D,s " + fmt(lds) + " mm, L_NL " + fmt(lnl) +
             " mm, tau_s^D " + fmt(r.dispersion_time_signal / fs) + " fs, ordering " +
             (r.ordering_ok ? "ok" : "violated");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion_11() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / ("spopo_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = "experiment = montecarlo\nseed = 2024\n[params]\nkappa_s_T_R = 0.1\nmu0 = 0.9\n"
                           "tau_p = 0.05 T_R\n[homodyne]\nquadrature = Y\n[montecarlo]\nn_traj = 64\n"
                           "n_pulses = 2000\nbins = 8\nhalfwidth = 0.1 T_R\nmax_lag = 5\n"
                           "omega = 0, 3.14159, 6.28318 1/T_R\ndump = " +
                           (dir / "raw.bin").string() + "\n";
  std::vector<std::string> outputs;
  std::vector<std::string> dumps;
  for (int workers : {1, 2, 4, 1, 3}) {
    const fs::path cfg = dir / ("w" + std::to_string(workers) + ".ini");
    std::ofstream(cfg) << base << "workers = " << workers << "\n";
    for (const char* format : {"csv", "json"}) {
      std::ostringstream out, err;
      const int code =
          run_cli({"spopo", "montecarlo", "--config", cfg.string(), "--format", format, "--quiet"}, out, err);
      if (code != exit_ok) o.pass = false;
      outputs.push_back(std::string(format) + out.str());
      dumps.push_back(slurp(dir / "raw.bin"));
      fs::remove(dir / "raw.bin");
    }
  }
  std::size_t identical = 0;
  for (std::size_t i = 2; i < outputs.size(); ++i) {
    if (outputs[i] == outputs[i % 2] && dumps[i] == dumps[i % 2]) ++identical;
  }
  if (identical != outputs.size() - 2 || dumps.front().empty()) o.pass = false;
  fs::remove_all(dir);
  o.detail = std::to_string(outputs.size() / 2) + " runs at workers {1,2,4,1,3}, csv/json and raw dump " +
             (o.pass ? "byte-identical" : "differ");
  return o;
}

}  // namespace

int main() {
  set_warning_handler([](const std::string&) {});
  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3,  criterion_4,
                                                       criterion_5, criterion_6, criterion_7,  criterion_8,
                                                       criterion_9, criterion_10, criterion_11};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %2zu: %s  %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed ? 1 : 0;
}
