#include "nfield/kramers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "nfield/errors.hpp"
#include "nfield/lifting.hpp"

namespace nfield {
namespace {

// Quadratic y = a + b(x-x0) + c(x-x0)^2 over indices [i-5, i+5] clipped to
// the array; returns {a, b, c} about x0 = x[i].
std::array<Scalar, 3> local_quadratic(const Vector& x, const Vector& y,
                                      Index i) {
  const Index lo = std::max<Index>(0, i - 5);
  const Index hi = std::min<Index>(x.size() - 1, i + 5);
  const Index n = hi - lo + 1;
  if (n < 3) throw EstimationError("too few grid points for curvature fit");
  Matrix X(n, 3);
  Vector b(n);
  for (Index k = 0; k < n; ++k) {
    const Scalar dx = x[lo + k] - x[i];
    X(k, 0) = 1;
    X(k, 1) = dx;
    X(k, 2) = dx * dx;
    b[k] = y[lo + k];
  }
  const Vector coef = X.colPivHouseholderQr().solve(b);
  return {coef[0], coef[1], coef[2]};
}

// Linear interpolation on a sorted grid, clamped at the ends.
Scalar interp(const Vector& x, const Vector& y, Scalar at) {
  if (at <= x[0]) return y[0];
  if (at >= x[x.size() - 1]) return y[y.size() - 1];
  const Scalar* lo = std::upper_bound(x.data(), x.data() + x.size(), at) - 1;
  const Index i = lo - x.data();
  const Scalar t = (at - x[i]) / (x[i + 1] - x[i]);
  return (1 - t) * y[i] + t * y[i + 1];
}

WellSide fit_side(const Vector& v, const Vector& g, Index argmin) {
  const auto [a, b, c] = local_quadratic(v, g, argmin);
  WellSide side;
  if (c > 0) {
    side.v_min = v[argmin] - b / (2 * c);  // vertex of the local fit
    side.g_min = a - b * b / (4 * c);
  } else {
    side.v_min = v[argmin];
    side.g_min = a;
  }
  side.curvature = 2 * c;
  return side;
}

}  // namespace

WellGeometry well_geometry(const PotentialCurve& potential,
                           const DriftDiffusionCurve& dd) {
  // Work on the contiguous usable stretch containing V = 0.
  const Index m = potential.v_grid.size();
  Index zero = 0;
  for (Index i = 1; i < m; ++i) {
    if (std::abs(potential.v_grid[i]) < std::abs(potential.v_grid[zero])) zero = i;
  }
  if (potential.missing[zero]) throw NoBarrier("no potential estimate near V = 0");
  Index lo = zero, hi = zero;
  while (lo > 0 && !potential.missing[lo - 1]) --lo;
  while (hi + 1 < m && !potential.missing[hi + 1]) ++hi;
  const Index n = hi - lo + 1;
  const Vector v = potential.v_grid.segment(lo, n);
  const Vector g = potential.g.segment(lo, n);
  zero -= lo;
  if (zero == 0 || zero == n - 1) throw NoBarrier("V = 0 is at the edge of the estimated range");

  Index arg_left = 0, arg_right = zero;
  for (Index i = 0; i < zero; ++i) {
    if (g[i] < g[arg_left]) arg_left = i;
  }
  for (Index i = zero; i < n; ++i) {
    if (g[i] < g[arg_right]) arg_right = i;
  }
  // A genuine barrier needs both minima strictly inside their half-ranges.
  if (arg_left == zero - 1 || arg_right == zero || arg_left == 0 || arg_right == n - 1) {
    throw NoBarrier("potential is single-welled over the estimated range");
  }

  WellGeometry geom;
  geom.left = fit_side(v, g, arg_left);
  geom.right = fit_side(v, g, arg_right);
  const auto [ba, bb, bc] = local_quadratic(v, g, zero);
  // barrier height evaluated at V = 0 exactly
  const Scalar dv0 = 0.0 - v[zero];
  geom.g_barrier = ba + bb * dv0 + bc * dv0 * dv0;
  geom.curvature_barrier = 2 * bc;
  geom.v_min = 0.5 * (std::abs(geom.left.v_min) + std::abs(geom.right.v_min));
  geom.g_min = 0.5 * (geom.left.g_min + geom.right.g_min);
  geom.curvature_min = 0.5 * (geom.left.curvature + geom.right.curvature);
  if (!(geom.curvature_min > 0) || !(geom.curvature_barrier < 0)) {
    throw NoBarrier("well curvatures do not describe a double well");
  }
  if (geom.g_barrier < geom.g_min) {
    throw NoBarrier("barrier value below well minimum");
  }

  const DriftDiffusionCurve run = dd.occupied_run();
  if (run.v_grid.size() < 2) throw EstimationError("diffusion curve too sparse for d_bar");
  const Scalar d0 = interp(run.v_grid, run.d, 0.0);
  const Scalar dwell = 0.5 * (interp(run.v_grid, run.d, -geom.v_min) +
                              interp(run.v_grid, run.d, geom.v_min));
  geom.d_bar = 0.5 * (d0 + dwell);
  return geom;
}

Scalar kramers_time(const WellGeometry& geom) {
  const Scalar product = -geom.curvature_min * geom.curvature_barrier;
  if (!(product > 0)) throw EstimationError("nonpositive curvature product in switching-time formula");
  if (!(geom.d_bar > 0)) throw EstimationError("nonpositive averaged diffusion");
  const Scalar dg = geom.g_barrier - geom.g_min;
  return kTwoPi * std::exp(dg) / (geom.d_bar * std::sqrt(product));
}

SwitchRecord detect_switches(const std::vector<Scalar>& times,
                             const std::vector<Scalar>& v,
                             Scalar v_min_magnitude,
                             Scalar hysteresis_fraction) {
  if (times.size() != v.size()) throw ConfigError("switch series: mismatched lengths");
  if (!(v_min_magnitude > 0)) throw ConfigError("v_min_magnitude: must be > 0");
  if (!(hysteresis_fraction > 0)) throw ConfigError("hysteresis_fraction: must be > 0");
  SwitchRecord rec;
  rec.threshold = hysteresis_fraction * v_min_magnitude;
  int state = 0;
  for (size_t i = 0; i < v.size(); ++i) {
    const int target = v[i] > rec.threshold ? 1 : (v[i] < -rec.threshold ? -1 : 0);
    if (target == 0 || target == state) continue;
    if (state != 0) rec.switch_times.push_back(times[i]);
    state = target;
  }
  for (size_t i = 1; i < rec.switch_times.size(); ++i) {
    rec.waiting.push_back(rec.switch_times[i] - rec.switch_times[i - 1]);
  }
  return rec;
}

KramersConfig::KramersConfig() {
  v_grid.resize(29);
  for (int i = 0; i < 29; ++i) v_grid[i] = -0.28 + 0.02 * i;
}

DriftDiffusionCurve burst_curve(const Vector& v_grid, const ModelParams& params,
                                const NoiseSpec& noise,
                                const KramersConfig& cfg,
                                uint32_t stream_base) {
  const ReferenceBump ref = make_reference(params);
  const Index n = v_grid.size();
  DriftDiffusionCurve out;
  out.method = DDMethod::burst;
  out.v_grid = v_grid;
  out.mu.resize(n);
  out.mu_se.resize(n);
  out.d.resize(n);
  out.d_se.resize(n);
  out.n_samples.assign(n, 0);
  out.missing.assign(n, 0);
  for (Index i = 0; i < n; ++i) {
    const MomentEstimate m = estimate_burst(
        v_grid[i], cfg.n_bursts, cfg.window, params, noise, ref, cfg.seed,
        stream_base + static_cast<uint32_t>(i), cfg.workers, cfg.dt);
    out.mu[i] = m.mu;
    out.mu_se[i] = m.mu_se;
    out.d[i] = std::max<Scalar>(m.d, 0);
    out.d_se[i] = m.d_se;
    out.n_samples[i] = m.n;
  }
  return out;
}

std::vector<TauCurveRow> tau_curve(TauParameter which, const Vector& grid,
                                   const ModelParams& base,
                                   const NoiseSpec& noise,
                                   const KramersConfig& cfg) {
  std::vector<TauCurveRow> rows;
  rows.reserve(grid.size());
  for (Index g = 0; g < grid.size(); ++g) {
    TauCurveRow row;
    row.parameter = grid[g];
    ModelParams params = base;
    NoiseSpec spec = noise;
    if (which == TauParameter::adaptation_strength) {
      params.adaptation_strength = grid[g];
    } else {
      if (spec.kind != NoiseSpec::Kind::white) {
        throw ConfigError("tau_curve: eta sweep needs noise.variant = white");
      }
      spec.eta = grid[g];
    }
    try {
      const uint32_t stream_base = static_cast<uint32_t>(g) * 1024u;
      const DriftDiffusionCurve dd = burst_curve(cfg.v_grid, params, spec, cfg, stream_base);
      const PotentialCurve pot = potential_fp_integral(dd);
      row.geom = well_geometry(pot, dd);
      row.tau = kramers_time(row.geom);
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nfield
