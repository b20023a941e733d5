#include "spopo/montecarlo.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <exception>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "spopo/analytic.hpp"
#include "spopo/digest.hpp"
#include "spopo/regimes.hpp"

namespace spopo {

namespace {

// --- coupling calibration -------------------------------------------------

struct CouplingCurve {
  double A;
  double value(double w) const { return A * w * w - w * std::sqrt(1.0 + 0.25 * w * w); }
  double slope(double w) const {
    const double r = std::sqrt(1.0 + 0.25 * w * w);
    return 2.0 * A * w - r - 0.25 * w * w / r;
  }
};

template <class F>
double bisect(F f, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// --- streaming statistics -------------------------------------------------

struct Moments {
  double n = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double d = o.mean - mean;
    mean += d * o.n / total;
    m2 += o.m2 + d * d * n * o.n / total;
    n = total;
  }
  Stat stat() const { return {mean, std::sqrt(m2 / (n - 1.0) / n)}; }
};

// Ratio of two means with a delta-method standard error.
struct CoMoments {
  double n = 0.0;
  double ma = 0.0;
  double mb = 0.0;
  double caa = 0.0;
  double cbb = 0.0;
  double cab = 0.0;

  void add(double a, double b) {
    n += 1.0;
    const double da = a - ma;
    const double db = b - mb;
    ma += da / n;
    mb += db / n;
    caa += da * (a - ma);
    cbb += db * (b - mb);
    cab += da * (b - mb);
  }
  void merge(const CoMoments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double da = o.ma - ma;
    const double db = o.mb - mb;
    const double f = n * o.n / total;
    caa += o.caa + da * da * f;
    cbb += o.cbb + db * db * f;
    cab += o.cab + da * db * f;
    ma += da * o.n / total;
    mb += db * o.n / total;
    n = total;
  }
  Stat ratio() const {
    const double r = ma / mb;
    const double var = (caa - 2.0 * r * cab + r * r * cbb) / (n - 1.0) / (mb * mb);
    return {r, std::sqrt(std::max(var, 0.0) / n)};
  }
};

template <class T>
void merge_all(std::vector<T>& into, const std::vector<T>& from) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i].merge(from[i]);
}

std::vector<Stat> stats(const std::vector<Moments>& m) {
  std::vector<Stat> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i].stat();
  return out;
}

// --- engine ---------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trajectory_seed(std::uint64_t master, std::size_t index) {
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(index)));
}

struct BinModel {
  OutputCoupling out;
  double stationary_sd = 0.0;
  double a_sub = 0.0;
  double c_sub = 0.0;
};

struct Engine {
  std::vector<Quadrature> quads;
  std::size_t nq = 0;
  std::size_t nb = 0;
  std::size_t L = 0;
  std::size_t N = 0;
  std::size_t B = 0;
  std::size_t S = 1;
  std::uint64_t seed = 0;
  bool independent_vacuum = false;
  std::vector<BinModel> bins;  // [qi][j]
  std::vector<double> mu;
  int x_index = -1;
  int y_index = -1;

  // spectrum
  bool spectrum = false;
  std::vector<double> beta;
  double cmix = 0.0;
  double smix = 0.0;
  double shot = 0.0;
  std::size_t spectrum_lags = 0;
  double detector_time = 0.0;
  std::vector<double> omega;
  double round_trip = 0.0;

  const BinModel& bin(std::size_t qi, std::size_t j) const { return bins[qi * nb + j]; }
};

Engine build_engine(const McConfig& cfg) {
  const SpopoParams& params = cfg.params;
  const SampleGrid& grid = cfg.grid;
  if (grid.size == 0) throw ParameterError("simulation grid is empty");
  if (cfg.n_pulses < 2) throw ParameterError("n_pulses must be >= 2");
  if (cfg.n_traj < 2) throw ParameterError("n_traj must be >= 2 for standard errors");
  if (cfg.max_lag < 1 || cfg.max_lag >= cfg.n_pulses) {
    throw ParameterError("max_lag must lie in [1, n_pulses)");
  }
  if (cfg.substeps < 1) throw ParameterError("substeps must be >= 1");
  if (cfg.chunk < 1) throw ParameterError("chunk must be >= 1");

  Engine e;
  e.quads = simulated_quadratures(cfg);
  if (e.quads.empty()) throw ParameterError("no quadrature selected for simulation");
  e.nq = e.quads.size();
  e.nb = grid.size;
  e.L = cfg.max_lag;
  e.N = cfg.n_pulses;
  e.B = cfg.n_burnin.value_or(0);
  e.S = cfg.substeps;
  e.seed = cfg.seed;
  e.independent_vacuum = cfg.independent_output_vacuum;
  e.round_trip = params.round_trip();

  if (cfg.simulate_x) {
    const ThresholdCheck check = below_threshold_check(params, grid);
    if (!check.ok) {
      std::ostringstream os;
      os << "X-quadrature simulation above threshold: mu(t) = " << *check.violation_mu
         << " at t = " << *check.violation_time << " s";
      throw AboveThresholdError(os.str(), *check.violation_time, *check.violation_mu);
    }
  }

  const double tr = params.round_trip();
  const double x = params.kappa_s() * tr;
  e.mu.resize(e.nb);
  for (std::size_t j = 0; j < e.nb; ++j) e.mu[j] = pump_parameter(params, grid.time(j));
  e.bins.resize(e.nq * e.nb);
  for (std::size_t qi = 0; qi < e.nq; ++qi) {
    const Quadrature q = e.quads[qi];
    if (q == Quadrature::X) e.x_index = static_cast<int>(qi);
    if (q == Quadrature::Y) e.y_index = static_cast<int>(qi);
    for (std::size_t j = 0; j < e.nb; ++j) {
      BinModel& b = e.bins[qi * e.nb + j];
      b.out = calibrate_output(x, e.mu[j], q);
      const double decay_T = x * (q == Quadrature::X ? 1.0 - e.mu[j] : 1.0 + e.mu[j]);
      const double ratio = x / decay_T;  // kappa_s / kappa
      b.stationary_sd = std::sqrt(kVacuumVariance * ratio);
      b.a_sub = std::exp(-decay_T / static_cast<double>(e.S));
      b.c_sub = std::sqrt(ratio * (1.0 - b.a_sub * b.a_sub));
    }
  }
  if (!cfg.n_burnin) e.B = default_burnin(cfg);

  if (!cfg.spectrum_omega.empty()) {
    if (!cfg.homodyne) throw ParameterError("spectrum estimation needs a homodyne setup");
    const HomodyneSetup& h = *cfg.homodyne;
    h.validate();
    if (!h.delta_lo && 2.0 * h.lo.support_halfwidth() > tr) {
      throw ParameterError("unsupported configuration: LO support exceeds one period T_R");
    }
    e.spectrum = true;
    e.omega = cfg.spectrum_omega;
    e.detector_time = h.detector_time;
    e.cmix = std::cos(h.phase);
    e.smix = std::sin(h.phase);
    if (std::abs(e.cmix) < 1e-12) e.cmix = 0.0;
    if (std::abs(e.smix) < 1e-12) e.smix = 0.0;
    if (e.cmix != 0.0 && e.x_index < 0) throw ParameterError("LO phase needs the X quadrature simulated");
    if (e.smix != 0.0 && e.y_index < 0) throw ParameterError("LO phase needs the Y quadrature simulated");
    e.beta.assign(e.nb, 0.0);
    if (h.delta_lo) {
      e.beta[grid.nearest_bin(h.delay)] = std::sqrt(h.delta_weight);
    } else {
      for (std::size_t j = 0; j < e.nb; ++j) e.beta[j] = h.beta(grid.time(j));
    }
    double w = 0.0;
    double slowest = INFINITY;
    for (std::size_t j = 0; j < e.nb; ++j) {
      if (e.beta[j] == 0.0) continue;
      w += e.beta[j] * e.beta[j];
      if (e.cmix != 0.0) slowest = std::min(slowest, x * (1.0 - e.mu[j]));
      if (e.smix != 0.0) slowest = std::min(slowest, x * (1.0 + e.mu[j]));
    }
    if (!(w > 0.0)) throw ParameterError("LO has no weight on the simulation grid");
    e.shot = kVacuumVariance * w;
    const auto window = static_cast<std::size_t>(std::ceil(30.0 / slowest));
    e.spectrum_lags = std::clamp<std::size_t>(window, 1, e.N / 2);
  }
  return e;
}

// Per-trajectory raw sums.
struct TrajectorySums {
  TrajectorySums(const Engine& e, bool cross, bool with_xy)
      : cross(cross), xy_on(with_xy && e.x_index >= 0 && e.y_index >= 0) {
    const std::size_t per_lag = cross ? e.nb * e.nb : e.nb;
    cav_a.assign(e.nq * e.nb, 0.0);
    cav_b.assign(e.nq * e.nb, 0.0);
    lag.assign(e.nq * (e.L + 1) * per_lag, 0.0);
    if (xy_on) xy.assign(e.nb * (2 * e.L + 1), 0.0);
    ring.assign((e.L + 1) * e.nq * e.nb, 0.0);
    if (e.spectrum) current.assign(e.N, 0.0);
  }

  bool cross;
  bool xy_on;
  std::vector<double> cav_a;  // sum X_{n} X_{n+1}, n < N
  std::vector<double> cav_b;  // sum X_n^2, n < N
  std::vector<double> lag;    // [qi][k][j][j'] or [qi][k][j]
  std::vector<double> xy;     // [j][lag + L]
  std::vector<double> ring;   // [(m mod L+1)][qi][j]
  std::vector<double> current;
  std::vector<double>* dump = nullptr;  // [qi][n][j], n < N

  void pulse(const Engine& e, std::size_t m, const double* prev, const double* cav,
             const double* out) {
    const std::size_t nb = e.nb;
    const std::size_t width = e.nq * nb;
    const std::size_t slots = e.L + 1;
    double* slot = ring.data() + (m % slots) * width;
    std::copy(out, out + width, slot);

    if (m < e.N) {
      for (std::size_t i = 0; i < width; ++i) cav_b[i] += cav[i] * cav[i];
    }
    if (m >= 1 && m - 1 < e.N) {
      for (std::size_t i = 0; i < width; ++i) cav_a[i] += prev[i] * cav[i];
    }

    const std::size_t per_lag = cross ? nb * nb : nb;
    const std::size_t kmax = std::min(m, e.L);
    for (std::size_t k = 0; k <= kmax; ++k) {
      const std::size_t n = m - k;
      if (n >= e.N) continue;
      const double* early = ring.data() + (n % slots) * width;
      for (std::size_t qi = 0; qi < e.nq; ++qi) {
        const double* o_n = early + qi * nb;
        const double* o_m = out + qi * nb;
        double* acc = lag.data() + (qi * (e.L + 1) + k) * per_lag;
        if (cross) {
          for (std::size_t j = 0; j < nb; ++j) {
            const double v = o_n[j];
            double* row = acc + j * nb;
            for (std::size_t jj = 0; jj < nb; ++jj) row[jj] += v * o_m[jj];
          }
        } else {
          for (std::size_t j = 0; j < nb; ++j) acc[j] += o_n[j] * o_m[j];
        }
      }
      if (xy_on) {
        const double* x_n = early + static_cast<std::size_t>(e.x_index) * nb;
        const double* y_n = early + static_cast<std::size_t>(e.y_index) * nb;
        const double* x_m = out + static_cast<std::size_t>(e.x_index) * nb;
        const double* y_m = out + static_cast<std::size_t>(e.y_index) * nb;
        const std::size_t span = 2 * e.L + 1;
        for (std::size_t j = 0; j < nb; ++j) {
          xy[j * span + e.L + k] += x_n[j] * y_m[j];
          if (k > 0) xy[j * span + e.L - k] += y_n[j] * x_m[j];
        }
      }
    }

    if (m < e.N) {
      if (e.spectrum) {
        double i_m = 0.0;
        for (std::size_t j = 0; j < nb; ++j) {
          if (e.beta[j] == 0.0) continue;
          double mix = 0.0;
          if (e.cmix != 0.0) mix += e.cmix * out[static_cast<std::size_t>(e.x_index) * nb + j];
          if (e.smix != 0.0) mix += e.smix * out[static_cast<std::size_t>(e.y_index) * nb + j];
          i_m += e.beta[j] * mix;
        }
        current[m] = i_m;
      }
      if (dump) {
        for (std::size_t qi = 0; qi < e.nq; ++qi) {
          std::copy(out + qi * nb, out + (qi + 1) * nb, dump->data() + (qi * e.N + m) * nb);
        }
      }
    }
  }
};

// Evolves one trajectory and reports every retained pulse m >= 0 to `sink`.
template <class Sink>
void run_trajectory(const Engine& e, std::size_t index, Sink&& sink) {
  std::mt19937_64 rng(trajectory_seed(e.seed, index));
  std::normal_distribution<double> normal(0.0, std::sqrt(kVacuumVariance));
  const std::size_t width = e.nq * e.nb;
  std::vector<double> cav(width), prev(width), xi(width), out(width);
  for (std::size_t i = 0; i < width; ++i) cav[i] = e.bins[i].stationary_sd * normal(rng);

  const std::size_t total = e.B + e.N + e.L;
  for (std::size_t step = 0; step < total; ++step) {
    for (std::size_t i = 0; i < width; ++i) {
      const BinModel& b = e.bins[i];
      double noise;
      if (e.S == 1) {
        noise = normal(rng);
      } else {
        double innovation = 0.0;
        for (std::size_t s = 0; s < e.S; ++s) innovation = b.a_sub * innovation + b.c_sub * normal(rng);
        noise = innovation / b.out.c;
      }
      const double vacuum = e.independent_vacuum ? normal(rng) : noise;
      prev[i] = cav[i];
      cav[i] = b.out.a * prev[i] + b.out.c * noise;
      out[i] = b.out.p * prev[i] + b.out.q * vacuum;
      xi[i] = noise;
    }
    if (step >= e.B) sink(step - e.B, prev.data(), cav.data(), xi.data(), out.data());
  }
}

struct QuadratureAcc {
  std::vector<Moments> cav_var;
  std::vector<CoMoments> cav_lag1;
  std::vector<Moments> out_var;
  std::vector<Moments> delta;
  std::vector<Moments> kernel;
  std::vector<Moments> cross;
  CoMoments center_ratio;

  void merge(const QuadratureAcc& o) {
    merge_all(cav_var, o.cav_var);
    merge_all(cav_lag1, o.cav_lag1);
    merge_all(out_var, o.out_var);
    merge_all(delta, o.delta);
    merge_all(kernel, o.kernel);
    merge_all(cross, o.cross);
    center_ratio.merge(o.center_ratio);
  }
};

struct Accumulator {
  std::vector<QuadratureAcc> q;
  std::vector<Moments> xy;
  std::vector<Moments> spectrum;

  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < q.size(); ++i) q[i].merge(o.q[i]);
    merge_all(xy, o.xy);
    merge_all(spectrum, o.spectrum);
  }
};

Accumulator make_accumulator(const Engine& e, const McConfig& cfg) {
  Accumulator acc;
  acc.q.resize(e.nq);
  for (auto& q : acc.q) {
    q.cav_var.resize(e.nb);
    q.cav_lag1.resize(e.nb);
    q.out_var.resize(e.nb);
    q.delta.resize(e.nb);
    q.kernel.resize(e.nb * (e.L + 1));
    if (cfg.cross_bin) q.cross.resize((e.L + 1) * e.nb * e.nb);
  }
  if (cfg.cross_quadrature && e.x_index >= 0 && e.y_index >= 0) acc.xy.resize(e.nb * (2 * e.L + 1));
  if (e.spectrum) acc.spectrum.resize(e.omega.size());
  return acc;
}

void reduce_trajectory(const Engine& e, const TrajectorySums& t, std::size_t center, Accumulator& acc) {
  const double inv_n = 1.0 / static_cast<double>(e.N);
  const std::size_t nb = e.nb;
  const std::size_t per_lag = t.cross ? nb * nb : nb;
  auto c_at = [&](std::size_t qi, std::size_t k, std::size_t j) {
    const std::size_t off = t.cross ? j * nb + j : j;
    return t.lag[(qi * (e.L + 1) + k) * per_lag + off] * inv_n;
  };
  for (std::size_t qi = 0; qi < e.nq; ++qi) {
    QuadratureAcc& q = acc.q[qi];
    for (std::size_t j = 0; j < nb; ++j) {
      const std::size_t i = qi * nb + j;
      q.cav_var[j].add(t.cav_b[i] * inv_n);
      q.cav_lag1[j].add(t.cav_a[i] * inv_n, t.cav_b[i] * inv_n);
      const double c0 = c_at(qi, 0, j);
      const double k0 = c_at(qi, 1, j) / e.bin(qi, j).out.a;
      q.out_var[j].add(c0);
      q.delta[j].add(c0 - k0);
      q.kernel[j * (e.L + 1)].add(k0);
      for (std::size_t k = 1; k <= e.L; ++k) q.kernel[j * (e.L + 1) + k].add(c_at(qi, k, j));
    }
    if (t.cross) {
      for (std::size_t k = 0; k <= e.L; ++k) {
        const double* src = t.lag.data() + (qi * (e.L + 1) + k) * per_lag;
        Moments* dst = q.cross.data() + k * nb * nb;
        for (std::size_t j = 0; j < nb; ++j) {
          for (std::size_t jj = 0; jj < nb; ++jj) {
            if (j != jj) dst[j * nb + jj].add(src[j * nb + jj] * inv_n);
          }
        }
      }
    }
    if (e.L >= 2) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t k = 2; k <= e.L; ++k) num += c_at(qi, k, center);
      for (std::size_t k = 1; k < e.L; ++k) den += c_at(qi, k, center);
      q.center_ratio.add(num, den);
    }
  }
  if (!acc.xy.empty()) {
    for (std::size_t i = 0; i < acc.xy.size(); ++i) acc.xy[i].add(t.xy[i] * inv_n);
  }
  if (e.spectrum) {
    const std::vector<double> s =
        current_spectrum(t.current, e.shot, e.omega, e.round_trip, e.spectrum_lags);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double gain = detector_gain(DetectorResponse::boxcar, e.detector_time, e.omega[i]);
      acc.spectrum[i].add(s[i] * gain);
    }
  }
}

void write_dump_header(const std::string& path, const Engine& e, std::size_t n_traj) {
  if constexpr (std::endian::native != std::endian::little) {
    throw IoError("raw dump requires a little-endian host");
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open dump file: " + path);
  f.write(kDumpMagic, 8);
  const std::uint64_t shape[4] = {n_traj, e.nq, e.N, e.nb};
  f.write(reinterpret_cast<const char*>(shape), sizeof shape);
  if (!f) throw IoError("cannot write dump file: " + path);
  f.close();
  const auto payload = static_cast<std::uintmax_t>(n_traj) * e.nq * e.N * e.nb * sizeof(double);
  std::filesystem::resize_file(path, 8 + sizeof shape + payload);
}

void write_dump_block(const std::string& path, std::size_t index,
                      const std::vector<double>& block) {
  std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
  if (!f) throw IoError("cannot reopen dump file: " + path);
  const auto offset = static_cast<std::streamoff>(8 + 4 * sizeof(std::uint64_t) +
                                                  index * block.size() * sizeof(double));
  f.seekp(offset);
  f.write(reinterpret_cast<const char*>(block.data()),
          static_cast<std::streamsize>(block.size() * sizeof(double)));
  if (!f) throw IoError("cannot write dump file: " + path);
}

}  // namespace

OutputCoupling calibrate_output(double kappa_s_T_R, double mu, Quadrature quadrature) {
  if (!(kappa_s_T_R > 0.0) || !std::isfinite(mu) || mu < 0.0) {
    throw ParameterError("output coupling needs kappa_s*T_R > 0 and mu >= 0");
  }
  const double factor = quadrature == Quadrature::X ? 1.0 - mu : 1.0 + mu;
  if (!(factor > 0.0)) throw AboveThresholdError("X-quadrature output above threshold", 0.0, mu);
  OutputCoupling oc;
  const double decay_T = kappa_s_T_R * factor;
  oc.a = std::exp(-decay_T);
  const double one_minus_a2 = -std::expm1(-2.0 * decay_T);
  oc.c = std::sqrt(one_minus_a2 / factor);
  oc.target = (quadrature == Quadrature::X ? 2.0 : -2.0) * kappa_s_T_R * mu / factor;

  const CouplingCurve curve{oc.a * oc.a / one_minus_a2 + 0.5};
  const double w0 = 1.0 / std::sqrt(curve.A * curve.A - 0.25);
  const double w_min = bisect([&](double w) { return curve.slope(w); }, 0.0, w0);
  double w;
  if (oc.target <= curve.value(w_min)) {
    w = w_min;
    oc.clamped = oc.target < curve.value(w_min);
  } else {
    double hi = std::max(w0, 2.0 * w_min);
    while (curve.value(hi) < oc.target) hi *= 2.0;
    w = bisect([&](double v) { return curve.value(v) - oc.target; }, w_min, hi);
  }
  oc.achieved = curve.value(w);
  oc.q = 0.5 * w - std::sqrt(0.25 * w * w + 1.0);
  oc.p = w * oc.a / oc.c;
  return oc;
}

SampleGrid mc_grid(const SpopoParams& params, std::size_t n) {
  return default_grid(params.pump(), n);
}

std::vector<Quadrature> simulated_quadratures(const McConfig& config) {
  std::vector<Quadrature> q;
  if (config.simulate_x) q.push_back(Quadrature::X);
  if (config.simulate_y) q.push_back(Quadrature::Y);
  return q;
}

std::size_t default_burnin(const McConfig& config) {
  const double x = config.params.kappa_s() * config.params.round_trip();
  double slowest = INFINITY;
  for (std::size_t j = 0; j < config.grid.size; ++j) {
    const double mu = pump_parameter(config.params, config.grid.time(j));
    if (config.simulate_x) slowest = std::min(slowest, x * (1.0 - mu));
    if (config.simulate_y) slowest = std::min(slowest, x * (1.0 + mu));
  }
  if (config.simulate_x) {
    const double mu_peak = pump_parameter(config.params, config.params.pump().peak_time());
    slowest = std::min(slowest, x * (1.0 - mu_peak));
  }
  if (!(slowest > 0.0) || !std::isfinite(slowest)) {
    throw ParameterError("burn-in undefined: non-positive decay rate");
  }
  return static_cast<std::size_t>(std::ceil(10.0 / slowest));
}

std::string canonical_text(const McConfig& c) {
  std::ostringstream os;
  const SpopoParams& p = c.params;
  const PulseEnvelope& pump = p.pump();
  os << "kappa_s=" << exact_text(p.kappa_s()) << "\nkappa_p=" << exact_text(p.kappa_p())
     << "\ng=" << exact_text(p.g()) << "\nround_trip=" << exact_text(p.round_trip())
     << "\npump.kind=" << to_string(pump.kind()) << "\npump.peak=" << exact_text(pump.peak())
     << "\npump.duration=" << exact_text(pump.duration())
     << "\npump.center=" << exact_text(pump.center()) << "\npump.period=" << exact_text(pump.period())
     << "\npump.bin_width=" << exact_text(pump.bin_width()) << "\npump.samples=";
  for (double s : pump.samples()) os << exact_text(s) << ',';
  os << "\ngrid=" << c.grid.size << ',' << exact_text(c.grid.start) << ','
     << exact_text(c.grid.bin_width) << ',' << exact_text(c.grid.period)
     << "\nn_pulses=" << c.n_pulses << "\nn_burnin="
     << (c.n_burnin ? std::to_string(*c.n_burnin) : "default") << "\nn_traj=" << c.n_traj
     << "\nseed=" << c.seed << "\nx=" << c.simulate_x << "\ny=" << c.simulate_y
     << "\nmax_lag=" << c.max_lag << "\ncross_bin=" << c.cross_bin
     << "\ncross_quadrature=" << c.cross_quadrature << "\nsubsteps=" << c.substeps
     << "\nchunk=" << c.chunk << "\nindependent_vacuum=" << c.independent_output_vacuum;
  if (c.homodyne) {
    const HomodyneSetup& h = *c.homodyne;
    os << "\nlo.delta=" << h.delta_lo << "\nlo.weight=" << exact_text(h.delta_weight)
       << "\nlo.kind=" << to_string(h.lo.kind()) << "\nlo.peak=" << exact_text(h.lo.peak())
       << "\nlo.duration=" << exact_text(h.lo.duration()) << "\nlo.phase=" << exact_text(h.phase)
       << "\nlo.delay=" << exact_text(h.delay) << "\nlo.detector_time=" << exact_text(h.detector_time);
  }
  os << "\nomega=";
  for (double w : c.spectrum_omega) os << exact_text(w) << ',';
  os << '\n';
  return os.str();
}

const QuadratureEstimate* McEstimate::find(Quadrature q) const {
  for (const auto& e : quadratures) {
    if (e.quadrature == q) return &e;
  }
  return nullptr;
}

std::vector<double> current_spectrum(const std::vector<double>& current, double shot_noise,
                                     const std::vector<double>& omega, double round_trip,
                                     std::size_t max_lag) {
  const std::size_t n = current.size();
  if (n < 2) throw ParameterError("current series too short for a spectrum");
  if (!(shot_noise > 0.0)) throw ParameterError("shot-noise level must be > 0");
  const std::size_t lags = std::min(max_lag, n - 1);
  const std::size_t m = 2 * n;

  double* in = fftw_alloc_real(m);
  fftw_complex* freq = fftw_alloc_complex(m / 2 + 1);
  fftw_plan forward;
  fftw_plan backward;
#pragma omp critical(spopo_fftw_plan)
  {
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, freq, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(m), freq, in, FFTW_ESTIMATE);
  }
  std::copy(current.begin(), current.end(), in);
  std::fill(in + n, in + m, 0.0);
  fftw_execute(forward);
  for (std::size_t i = 0; i <= m / 2; ++i) {
    freq[i][0] = freq[i][0] * freq[i][0] + freq[i][1] * freq[i][1];
    freq[i][1] = 0.0;
  }
  fftw_execute(backward);
  std::vector<double> c(lags + 1);
  for (std::size_t k = 0; k <= lags; ++k) {
    c[k] = in[k] / static_cast<double>(m) / static_cast<double>(n - k);
  }
#pragma omp critical(spopo_fftw_plan)
  {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
  fftw_free(in);
  fftw_free(freq);

  std::vector<double> s(omega.size());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    double smooth = c[0] - shot_noise;
    for (std::size_t k = 1; k <= lags; ++k) {
      smooth += 2.0 * c[k] * std::cos(omega[i] * round_trip * static_cast<double>(k));
    }
    s[i] = 1.0 + smooth / shot_noise;
  }
  return s;
}

McEstimate run_monte_carlo(const McConfig& cfg) {
  const Engine e = build_engine(cfg);
  const std::size_t center = [&] {
    const std::size_t b = cfg.grid.bin_of(cfg.params.pump().peak_time());
    return b < cfg.grid.size ? b : cfg.grid.size / 2;
  }();

  const bool dumping = !cfg.dump_path.empty();
  if (dumping) write_dump_header(cfg.dump_path, e, cfg.n_traj);

  const std::size_t n_chunks = (cfg.n_traj + cfg.chunk - 1) / cfg.chunk;
  std::vector<Accumulator> chunks(n_chunks, make_accumulator(e, cfg));
  std::exception_ptr failure;

  auto run_chunk = [&](std::size_t c) {
    const std::size_t first = c * cfg.chunk;
    const std::size_t last = std::min(cfg.n_traj, first + cfg.chunk);
    std::vector<double> block;
    for (std::size_t t = first; t < last; ++t) {
      TrajectorySums sums(e, cfg.cross_bin, cfg.cross_quadrature);
      if (dumping) {
        block.assign(e.nq * e.N * e.nb, 0.0);
        sums.dump = &block;
      }
      run_trajectory(e, t, [&](std::size_t m, const double* prev, const double* cav, const double*,
                               const double* out) { sums.pulse(e, m, prev, cav, out); });
      reduce_trajectory(e, sums, center, chunks[c]);
      if (dumping) write_dump_block(cfg.dump_path, t, block);
    }
  };

  const auto count = static_cast<std::ptrdiff_t>(n_chunks);
  if (cfg.exec == Execution::parallel) {
    const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::ptrdiff_t c = 0; c < count; ++c) {
      try {
        run_chunk(static_cast<std::size_t>(c));
      } catch (...) {
#pragma omp critical(spopo_mc_failure)
        if (!failure) failure = std::current_exception();
      }
    }
  } else {
    for (std::ptrdiff_t c = 0; c < count; ++c) run_chunk(static_cast<std::size_t>(c));
  }
  if (failure) std::rethrow_exception(failure);

  Accumulator total = chunks.front();
  for (std::size_t c = 1; c < n_chunks; ++c) total.merge(chunks[c]);

  McEstimate est;
  est.n_traj = cfg.n_traj;
  est.n_pulses = e.N;
  est.n_burnin = e.B;
  est.n_bins = e.nb;
  est.max_lag = e.L;
  est.seed = cfg.seed;
  est.config_digest = sha256_hex(canonical_text(cfg));

  const double x = cfg.params.kappa_s() * cfg.params.round_trip();
  double slowest_count = 0.0;
  for (std::size_t qi = 0; qi < e.nq; ++qi) {
    const QuadratureAcc& a = total.q[qi];
    QuadratureEstimate q;
    q.quadrature = e.quads[qi];
    q.mu = e.mu;
    q.center_bin = center;
    for (std::size_t j = 0; j < e.nb; ++j) {
      const double factor = q.quadrature == Quadrature::X ? 1.0 - e.mu[j] : 1.0 + e.mu[j];
      q.decay.push_back(cfg.params.kappa_s() * factor);
      q.coupling.push_back(e.bin(qi, j).out);
      q.cavity_lag1_ratio.push_back(a.cav_lag1[j].ratio());
      slowest_count = std::max(slowest_count, 1.0 / (x * factor));
    }
    q.cavity_variance = stats(a.cav_var);
    q.output_variance = stats(a.out_var);
    q.delta = stats(a.delta);
    q.kernel = stats(a.kernel);
    if (cfg.cross_bin) q.cross_bin = stats(a.cross);
    if (e.L >= 2) q.center_lag_ratio = a.center_ratio.ratio();
    est.quadratures.push_back(std::move(q));
  }
  est.xy_cross = stats(total.xy);
  est.spectrum_omega = e.omega;
  est.spectrum = stats(total.spectrum);
  est.insufficient_samples = static_cast<double>(e.N) < 10.0 * slowest_count;
  if (est.insufficient_samples) {
    warn("n_pulses = " + std::to_string(e.N) + " is below 10 correlated pulse counts (" +
         std::to_string(10.0 * slowest_count) + "); estimates are noisy");
  }
  est.effective_samples =
      static_cast<double>(cfg.n_traj) * static_cast<double>(e.N) / (1.0 + 2.0 * slowest_count);
  return est;
}

TrajectoryRecord record_trajectory(const McConfig& cfg, std::size_t index) {
  const Engine e = build_engine(cfg);
  TrajectoryRecord r;
  r.quadratures = e.quads;
  r.n_pulses = e.N + e.L;
  r.n_bins = e.nb;
  const std::size_t size = r.n_pulses * e.nb;
  r.cavity.assign(e.nq, std::vector<double>(size));
  r.noise.assign(e.nq, std::vector<double>(size));
  r.output.assign(e.nq, std::vector<double>(size));
  run_trajectory(e, index, [&](std::size_t m, const double*, const double* cav, const double* xi,
                               const double* out) {
    for (std::size_t qi = 0; qi < e.nq; ++qi) {
      for (std::size_t j = 0; j < e.nb; ++j) {
        const std::size_t src = qi * e.nb + j;
        r.cavity[qi][m * e.nb + j] = cav[src];
        r.noise[qi][m * e.nb + j] = xi[src];
        r.output[qi][m * e.nb + j] = out[src];
      }
    }
  });
  return r;
}

CurrentSeries synthesize_current(const TrajectoryRecord& record, const HomodyneSetup& homodyne,
                                 const SampleGrid& grid, std::size_t n_pulses) {
  homodyne.validate();
  if (grid.size != record.n_bins) throw ParameterError("grid does not match the trajectory record");
  if (n_pulses > record.n_pulses) throw ParameterError("record holds fewer pulses than requested");
  int xi = -1;
  int yi = -1;
  for (std::size_t i = 0; i < record.quadratures.size(); ++i) {
    (record.quadratures[i] == Quadrature::X ? xi : yi) = static_cast<int>(i);
  }
  double cmix = std::cos(homodyne.phase);
  double smix = std::sin(homodyne.phase);
  if (std::abs(cmix) < 1e-12) cmix = 0.0;
  if (std::abs(smix) < 1e-12) smix = 0.0;
  if ((cmix != 0.0 && xi < 0) || (smix != 0.0 && yi < 0)) {
    throw ParameterError("LO phase needs a quadrature missing from the record");
  }
  std::vector<double> beta(grid.size, 0.0);
  if (homodyne.delta_lo) {
    beta[grid.nearest_bin(homodyne.delay)] = std::sqrt(homodyne.delta_weight);
  } else {
    for (std::size_t j = 0; j < grid.size; ++j) beta[j] = homodyne.beta(grid.time(j));
  }
  CurrentSeries out;
  out.samples.assign(n_pulses, 0.0);
  for (std::size_t n = 0; n < n_pulses; ++n) {
    double i_n = 0.0;
    for (std::size_t j = 0; j < grid.size; ++j) {
      if (beta[j] == 0.0) continue;
      double mix = 0.0;
      if (cmix != 0.0) mix += cmix * record.at(record.output, static_cast<std::size_t>(xi), n, j);
      if (smix != 0.0) mix += smix * record.at(record.output, static_cast<std::size_t>(yi), n, j);
      i_n += beta[j] * mix;
    }
    out.samples[n] = i_n;
  }
  for (double b : beta) out.shot_noise += kVacuumVariance * b * b;
  return out;
}

}  // namespace spopo
