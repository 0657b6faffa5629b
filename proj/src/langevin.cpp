#include "nfield/langevin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nfield/errors.hpp"
#include "nfield/observables.hpp"
#include "nfield/parallel.hpp"

namespace nfield {
namespace {

constexpr Scalar kNaN = std::numeric_limits<Scalar>::quiet_NaN();

// Raw power sums in extended precision; increments are small so raw-moment
// arithmetic loses nothing.
struct PowerSums {
  long double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  long n = 0;
  void add(Scalar x) {
    const long double v = x;
    s1 += v;
    s2 += v * v;
    s3 += v * v * v;
    s4 += v * v * v * v;
    ++n;
  }
  MomentEstimate finish(Scalar dt_est) const {
    MomentEstimate out;
    out.n = n;
    if (n < 2) return out;
    const long double mean = s1 / n;
    const long double r2 = s2 / n;
    const long double r3 = s3 / n;
    const long double r4 = s4 / n;
    const long double m2 = std::max<long double>(r2 - mean * mean, 0);
    const long double m4 = r4 - 4 * mean * r3 + 6 * mean * mean * r2 -
                           3 * mean * mean * mean * mean;
    out.mu = static_cast<Scalar>(mean / dt_est);
    out.mu_se = static_cast<Scalar>(std::sqrt(m2 / n) / dt_est);
    out.d = static_cast<Scalar>(m2 / (2 * dt_est));
    const long double var_m2 = std::max<long double>(m4 - m2 * m2, 0) / n;
    out.d_se = static_cast<Scalar>(std::sqrt(var_m2) / (2 * dt_est));
    return out;
  }
  // Mean of the squared samples with its standard error (for lag fits of
  // <dv^2> against the lag).
  std::pair<Scalar, Scalar> mean_sq() const {
    const long double r2 = s2 / n;
    const long double r4 = s4 / n;
    const long double var = std::max<long double>(r4 - r2 * r2, 0);
    return {static_cast<Scalar>(r2), static_cast<Scalar>(std::sqrt(var / n))};
  }
  std::pair<Scalar, Scalar> mean_val() const {
    const long double mean = s1 / n;
    const long double m2 = std::max<long double>(s2 / n - mean * mean, 0);
    return {static_cast<Scalar>(mean), static_cast<Scalar>(std::sqrt(m2 / n))};
  }
};

long lag_steps_of(Scalar lag, Scalar step, const char* what) {
  const Scalar ratio = lag / step;
  const long k = std::lround(ratio);
  if (k < 1 || std::abs(ratio - static_cast<Scalar>(k)) > 1e-9 * ratio) {
    throw ConfigError(std::string(what) + ": must be a positive multiple of the sampling step");
  }
  return k;
}

// mu and D from per-lag power sums, either single-lag or by fitting the
// first two moments linearly against the lag.
MomentEstimate combine_lags(const std::vector<PowerSums>& per_lag,
                            const EstimationWindow& window) {
  if (!window.lag_fit) return per_lag[0].finish(window.dt_est);
  const int nl = static_cast<int>(per_lag.size());
  Vector lags(nl), m1(nl), m1_se(nl), msq(nl), msq_se(nl);
  for (int l = 0; l < nl; ++l) {
    lags[l] = EstimationWindow::kFitLags[l];
    std::tie(m1[l], m1_se[l]) = per_lag[l].mean_val();
    std::tie(msq[l], msq_se[l]) = per_lag[l].mean_sq();
  }
  const auto [mu, mu_se] = weighted_slope(lags, m1, m1_se);
  const auto [slope2, slope2_se] = weighted_slope(lags, msq, msq_se);
  MomentEstimate out;
  out.n = per_lag[0].n;
  out.mu = mu;
  out.mu_se = mu_se;
  out.d = slope2 / 2;
  out.d_se = slope2_se / 2;
  return out;
}

}  // namespace

void EstimationWindow::validate() const {
  if (!(burst_duration > 0)) throw ConfigError("burst_duration: must be > 0");
  if (!(discard >= 0 && discard < burst_duration)) {
    throw ConfigError("discard: must satisfy 0 <= discard < burst_duration");
  }
  const Scalar avail = burst_duration - discard;
  if (!(dt_est > 0 && dt_est <= avail)) {
    throw ConfigError("dt_est: must satisfy 0 < dt_est <= burst_duration - discard");
  }
  if (lag_fit && kFitLags[3] > avail) {
    throw ConfigError("burst_duration: lag fitting needs burst_duration - discard >= 8");
  }
}

DriftDiffusionCurve DriftDiffusionCurve::occupied_run() const {
  Index best_lo = 0, best_len = 0;
  Index lo = 0;
  const Index m = v_grid.size();
  while (lo < m) {
    if (missing[lo]) {
      ++lo;
      continue;
    }
    Index hi = lo;
    while (hi < m && !missing[hi]) ++hi;
    if (hi - lo > best_len) {
      best_len = hi - lo;
      best_lo = lo;
    }
    lo = hi;
  }
  DriftDiffusionCurve out;
  out.method = method;
  out.v_grid = v_grid.segment(best_lo, best_len);
  out.mu = mu.segment(best_lo, best_len);
  out.mu_se = mu_se.segment(best_lo, best_len);
  out.d = d.segment(best_lo, best_len);
  out.d_se = d_se.segment(best_lo, best_len);
  out.n_samples.assign(n_samples.begin() + best_lo,
                       n_samples.begin() + best_lo + best_len);
  out.missing.assign(best_len, 0);
  return out;
}

MomentEstimate moments_from_increments(const std::vector<Scalar>& dv,
                                       Scalar dt_est) {
  PowerSums ps;
  for (Scalar x : dv) ps.add(x);
  return ps.finish(dt_est);
}

MomentEstimate combine_lag_increments(
    const std::vector<std::vector<Scalar>>& per_lag,
    const EstimationWindow& window) {
  const size_t expect = window.lag_fit ? 4 : 1;
  if (per_lag.size() != expect) {
    throw ConfigError("per-lag increment lists do not match the window mode");
  }
  std::vector<PowerSums> acc(per_lag.size());
  for (size_t l = 0; l < per_lag.size(); ++l) {
    for (Scalar x : per_lag[l]) acc[l].add(x);
  }
  if (acc[0].n < 2) throw EstimationError("too few increments for moment estimation");
  return combine_lags(acc, window);
}

std::pair<Scalar, Scalar> weighted_slope(const Vector& x, const Vector& y,
                                         const Vector& se_y) {
  const Index n = x.size();
  Vector w(n);
  bool all_pos = true;
  for (Index i = 0; i < n; ++i) all_pos = all_pos && se_y[i] > 0;
  for (Index i = 0; i < n; ++i) w[i] = all_pos ? 1.0 / (se_y[i] * se_y[i]) : 1.0;
  const Scalar sw = w.sum();
  const Scalar sx = (w.array() * x.array()).sum();
  const Scalar sy = (w.array() * y.array()).sum();
  const Scalar sxx = (w.array() * x.array() * x.array()).sum();
  const Scalar sxy = (w.array() * x.array() * y.array()).sum();
  const Scalar det = sw * sxx - sx * sx;
  if (!(det > 0)) throw EstimationError("degenerate abscissa in slope fit");
  const Scalar slope = (sw * sxy - sx * sy) / det;
  const Scalar slope_se = std::sqrt(sw / det);
  return {slope, slope_se};
}

DriftDiffusionCurve estimate_database(const VSeries& series,
                                      const Vector& v_grid,
                                      const EstimationWindow& window,
                                      Scalar h_bin, long n_min) {
  window.validate();
  if (!(h_bin > 0)) throw ConfigError("h_bin: must be > 0");
  if (v_grid.size() < 1) throw ConfigError("v_grid: empty");
  for (Index j = 1; j < v_grid.size(); ++j) {
    if (!(v_grid[j] > v_grid[j - 1])) throw ConfigError("v_grid: must be strictly increasing");
  }
  const Scalar step = series.dt_sample;
  if (!(step > 0)) throw ConfigError("series: missing sampling step");

  const int n_lags = window.lag_fit ? 4 : 1;
  std::vector<long> lag_idx(n_lags);
  long max_lag_idx = 0;
  for (int l = 0; l < n_lags; ++l) {
    const Scalar lag = window.lag_fit ? EstimationWindow::kFitLags[l] : window.dt_est;
    lag_idx[l] = lag_steps_of(lag, step, "dt_est");
    max_lag_idx = std::max(max_lag_idx, lag_idx[l]);
  }

  const Index nbins = v_grid.size();
  std::vector<std::vector<PowerSums>> acc(nbins, std::vector<PowerSums>(n_lags));
  std::vector<Scalar> last_t(nbins, -std::numeric_limits<Scalar>::infinity());

  const long n = static_cast<long>(series.v.size());
  const Scalar* vg = v_grid.data();
  for (long i = 0; i + max_lag_idx < n; ++i) {
    const Scalar v = series.v[i];
    const Scalar t = series.times[i];
    // grid points whose half-width window contains v
    const Scalar* lo = std::lower_bound(vg, vg + nbins, v - h_bin);
    for (const Scalar* p = lo; p < vg + nbins && *p <= v + h_bin; ++p) {
      const Index j = p - vg;
      if (t - last_t[j] < window.burst_duration - 1e-9) continue;
      last_t[j] = t;
      for (int l = 0; l < n_lags; ++l) {
        acc[j][l].add(wrap_angle(series.v[i + lag_idx[l]] - v));
      }
    }
  }

  DriftDiffusionCurve out;
  out.method = DDMethod::database;
  out.v_grid = v_grid;
  out.mu = Vector::Constant(nbins, kNaN);
  out.mu_se = Vector::Constant(nbins, kNaN);
  out.d = Vector::Constant(nbins, kNaN);
  out.d_se = Vector::Constant(nbins, kNaN);
  out.n_samples.assign(nbins, 0);
  out.missing.assign(nbins, 1);
  for (Index j = 0; j < nbins; ++j) {
    out.n_samples[j] = acc[j][0].n;
    if (acc[j][0].n < n_min) continue;
    const MomentEstimate m = combine_lags(acc[j], window);
    out.mu[j] = m.mu;
    out.mu_se[j] = m.mu_se;
    out.d[j] = std::max<Scalar>(m.d, 0);
    out.d_se[j] = m.d_se;
    out.missing[j] = 0;
  }
  return out;
}

MomentEstimate estimate_burst(Scalar v0, long n_bursts,
                              const EstimationWindow& window,
                              const ModelParams& params, const NoiseSpec& spec,
                              const ReferenceBump& ref, uint64_t seed,
                              uint32_t stream_a, int workers, Scalar dt) {
  window.validate();
  if (n_bursts < 1) throw ConfigError("n_bursts: must be >= 1");

  // Record V on the coarsest grid that resolves every lag in use.
  const Scalar rec = window.lag_fit ? 1.0 : window.dt_est;
  const long rec_steps = lag_steps_of(rec, dt, "dt_est");
  const long discard_steps =
      window.discard > 0 ? lag_steps_of(window.discard, dt, "discard") : 0;
  const long total_steps = lag_steps_of(window.burst_duration, dt, "burst_duration");

  const int n_lags = window.lag_fit ? 4 : 1;
  std::vector<long> lag_rec(n_lags);
  long max_lag_rec = 0;
  for (int l = 0; l < n_lags; ++l) {
    const Scalar lag = window.lag_fit ? EstimationWindow::kFitLags[l] : window.dt_est;
    lag_rec[l] = lag_steps_of(lag, rec, "dt_est");
    max_lag_rec = std::max(max_lag_rec, lag_rec[l]);
  }
  const long n_rec = (total_steps - discard_steps) / rec_steps + 1;

  const FieldState start = lift_v(v0, ref);
  const Matrix coupling = coupling_matrix(params);

  // Per-burst increment lists keep aggregation order fixed regardless of
  // which worker ran which burst.
  std::vector<std::vector<std::vector<Scalar>>> per_burst(n_bursts);
  std::vector<char> burst_dropped(n_bursts, 0);

  parallel_for(n_bursts, workers, [&](long b) {
    Rng rng = make_rng(seed, StreamTag::burst, stream_a, static_cast<uint32_t>(b));
    Stepper stepper(params, spec, coupling);
    FieldState state = start;
    NoiseState ns = NoiseState::initial(spec, params.nodes, rng);
    std::vector<Scalar> vrec;
    vrec.reserve(n_rec);
    try {
      for (long s = 0; s < discard_steps; ++s) stepper.step(state, ns, dt, rng);
      vrec.push_back(coarse_v(state.u, state.a));
      long s = discard_steps;
      while (s + rec_steps <= total_steps) {
        for (long k = 0; k < rec_steps; ++k) stepper.step(state, ns, dt, rng);
        s += rec_steps;
        vrec.push_back(coarse_v(state.u, state.a));
      }
    } catch (const IntegrationBlowup&) {
      burst_dropped[b] = 1;
      return;
    }
    auto& mine = per_burst[b];
    mine.resize(n_lags);
    for (int l = 0; l < n_lags; ++l) {
      // In lag-fit mode restrict to bases where every lag fits, so all four
      // moment curves share the same occurrence set.
      const long last_base = static_cast<long>(vrec.size()) - 1 - max_lag_rec;
      const long stride = window.lag_fit ? 1 : lag_rec[0];
      for (long i = 0; i <= last_base; i += stride) {
        mine[l].push_back(wrap_angle(vrec[i + lag_rec[l]] - vrec[i]));
      }
    }
  });

  std::vector<PowerSums> acc(n_lags);
  long dropped = 0;
  for (long b = 0; b < n_bursts; ++b) {
    if (burst_dropped[b]) {
      ++dropped;
      continue;
    }
    for (int l = 0; l < n_lags; ++l) {
      for (Scalar x : per_burst[b][l]) acc[l].add(x);
    }
  }
  if (acc[0].n < 2) throw EstimationError("burst ensemble produced too few increments");
  MomentEstimate out = combine_lags(acc, window);
  out.dropped = dropped;
  return out;
}

PotentialCurve potential_fp_integral(const DriftDiffusionCurve& curve) {
  const DriftDiffusionCurve run = curve.occupied_run();
  const Index m = run.v_grid.size();
  if (m < 2) throw EstimationError("drift-diffusion curve has fewer than 2 usable points");
  for (Index j = 0; j < m; ++j) {
    if (!(run.d[j] > 0)) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "nonpositive diffusion at v = %.6g", run.v_grid[j]);
      throw EstimationError(buf);
    }
  }
  PotentialCurve out;
  out.method = PotentialMethod::fp_integral;
  out.v_grid = run.v_grid;
  out.g.resize(m);
  out.missing.assign(m, 0);
  Scalar cum = 0;
  out.g[0] = std::log(run.d[0]);
  for (Index j = 1; j < m; ++j) {
    const Scalar f0 = -run.mu[j - 1] / run.d[j - 1];
    const Scalar f1 = -run.mu[j] / run.d[j];
    cum += 0.5 * (f0 + f1) * (run.v_grid[j] - run.v_grid[j - 1]);
    out.g[j] = cum + std::log(run.d[j]);
  }
  out.g.array() -= out.g.minCoeff();
  return out;
}

PotentialCurve potential_histogram(const std::vector<Scalar>& v_samples,
                                   int bins) {
  if (v_samples.size() < 10000) {
    throw EstimationError("potential_histogram needs at least 10^4 samples");
  }
  if (bins < 2) throw ConfigError("bins: must be >= 2");
  const auto [lo_it, hi_it] = std::minmax_element(v_samples.begin(), v_samples.end());
  const Scalar lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw EstimationError("all samples identical; no density to invert");
  const Scalar width = (hi - lo) / bins;

  std::vector<long> counts(bins, 0);
  for (Scalar v : v_samples) {
    long b = static_cast<long>((v - lo) / width);
    b = std::clamp<long>(b, 0, bins - 1);
    ++counts[b];
  }

  PotentialCurve out;
  out.method = PotentialMethod::histogram;
  out.v_grid.resize(bins);
  out.g = Vector::Constant(bins, kNaN);
  out.missing.assign(bins, 1);
  int nonempty = 0;
  Scalar gmin = std::numeric_limits<Scalar>::infinity();
  const Scalar n = static_cast<Scalar>(v_samples.size());
  for (int b = 0; b < bins; ++b) {
    out.v_grid[b] = lo + (b + 0.5) * width;
    if (counts[b] == 0) continue;
    out.g[b] = -std::log(counts[b] / (n * width));
    out.missing[b] = 0;
    gmin = std::min(gmin, out.g[b]);
    ++nonempty;
  }
  if (nonempty < 2) throw EstimationError("histogram has fewer than 2 nonempty bins");
  for (int b = 0; b < bins; ++b) {
    if (!out.missing[b]) out.g[b] -= gmin;
  }
  return out;
}

}  // namespace nfield
