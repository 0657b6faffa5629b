#include "nfield/bifurcation.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

#include "nfield/errors.hpp"

namespace nfield {
namespace {

// Generic small weighted LS: columns of X evaluated at v. Returns
// coefficients and their standard errors from (X^T W X)^-1.
std::pair<Vector, Vector> wls(const Matrix& X, const Vector& y,
                              const Vector& se) {
  const Index n = X.rows(), p = X.cols();
  Vector w(n);
  bool all_pos = true;
  for (Index i = 0; i < n; ++i) all_pos = all_pos && se[i] > 0;
  for (Index i = 0; i < n; ++i) w[i] = all_pos ? 1.0 / (se[i] * se[i]) : 1.0;
  const Vector sw = w.cwiseSqrt();
  const Matrix Xw = sw.asDiagonal() * X;
  const Vector yw = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
  if (qr.rank() < p) throw EstimationError("rank-deficient fit design");
  const Vector coef = qr.solve(yw);
  const Matrix cov = (Xw.transpose() * Xw).inverse();
  Vector coef_se(p);
  for (Index j = 0; j < p; ++j) coef_se[j] = std::sqrt(std::max<Scalar>(cov(j, j), 0));
  return {coef, coef_se};
}

long distinct_count(const Vector& v) {
  std::set<Scalar> s(v.data(), v.data() + v.size());
  return static_cast<long>(s.size());
}

// Real roots of c0 + c1 x + c2 x^2 + c3 x^3, degenerate degrees handled.
std::vector<Scalar> real_roots(Scalar c0, Scalar c1, Scalar c2, Scalar c3) {
  const Scalar scale = std::max({std::abs(c0), std::abs(c1), std::abs(c2), std::abs(c3)});
  std::vector<Scalar> roots;
  if (scale == 0) return roots;
  const Scalar tiny = 1e-12 * scale;
  if (std::abs(c3) > tiny) {
    Matrix companion = Matrix::Zero(3, 3);
    companion(1, 0) = 1;
    companion(2, 1) = 1;
    companion(0, 2) = -c0 / c3;
    companion(1, 2) = -c1 / c3;
    companion(2, 2) = -c2 / c3;
    Eigen::EigenSolver<Matrix> es(companion);
    for (Index i = 0; i < 3; ++i) {
      const auto z = es.eigenvalues()[i];
      if (std::abs(z.imag()) <= 1e-8 * (1 + std::abs(z.real()))) {
        roots.push_back(z.real());
      }
    }
  } else if (std::abs(c2) > tiny) {
    const Scalar disc = c1 * c1 - 4 * c2 * c0;
    if (disc >= 0) {
      const Scalar q = -0.5 * (c1 + std::copysign(std::sqrt(disc), c1));
      roots.push_back(q / c2);
      if (q != 0) roots.push_back(c0 / q);
      else roots.push_back(0.0);
    }
  } else if (std::abs(c1) > tiny) {
    roots.push_back(-c0 / c1);
  }
  std::sort(roots.begin(), roots.end());
  // collapse numerically repeated roots
  std::vector<Scalar> out;
  for (Scalar r : roots) {
    if (out.empty() || std::abs(r - out.back()) > 1e-9 * (1 + std::abs(r))) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<BranchPoint> classify(const std::vector<Scalar>& roots,
                                  const CubicDrift& g, RootKind kind) {
  std::vector<BranchPoint> out;
  for (Scalar r : roots) {
    if (!(r > -kPi && r < kPi)) continue;
    BranchPoint bp;
    bp.root = r;
    bp.slope = g.deriv(r);
    bp.stability = bp.slope < 0 ? Stability::stable : Stability::unstable;
    bp.kind = kind;
    out.push_back(bp);
  }
  return out;
}

}  // namespace

CubicDrift fit_cubic(const Vector& v, const Vector& mu, const Vector& mu_se,
                     bool symmetric_mode) {
  const Index n = v.size();
  if (n != mu.size() || n != mu_se.size()) {
    throw ConfigError("mu_samples: mismatched lengths");
  }
  const long need = symmetric_mode ? 2 : 4;
  if (distinct_count(v) < need) {
    throw ConfigError("mu_samples: need at least 4 distinct V values (2 in symmetric mode)");
  }
  CubicDrift out;
  out.symmetric_mode = symmetric_mode;
  if (symmetric_mode) {
    Matrix X(n, 2);
    for (Index i = 0; i < n; ++i) {
      X(i, 0) = v[i];
      X(i, 1) = v[i] * v[i] * v[i];
    }
    const auto [coef, se] = wls(X, mu, mu_se);
    out.c1 = coef[0];
    out.c3 = coef[1];
    out.se.setZero();
    out.se[1] = se[0];
    out.se[3] = se[1];
  } else {
    Matrix X(n, 4);
    for (Index i = 0; i < n; ++i) {
      X(i, 0) = 1;
      X(i, 1) = v[i];
      X(i, 2) = v[i] * v[i];
      X(i, 3) = v[i] * v[i] * v[i];
    }
    const auto [coef, se] = wls(X, mu, mu_se);
    out.c0 = coef[0];
    out.c1 = coef[1];
    out.c2 = coef[2];
    out.c3 = coef[3];
    out.se = se;
  }
  Scalar ss = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar r = mu[i] - out.eval(v[i]);
    ss += r * r;
  }
  out.residual = std::sqrt(ss / n);
  return out;
}

std::vector<BranchPoint> cubic_zeros(const CubicDrift& cubic) {
  return classify(real_roots(cubic.c0, cubic.c1, cubic.c2, cubic.c3), cubic,
                  RootKind::drift_zero);
}

SweepConfig::SweepConfig() {
  design_v.resize(4);
  design_v << -0.15, -0.05, 0.05, 0.15;
}

std::vector<SweepRow> sweep(SweepParameter which, const Vector& grid,
                            const ModelParams& base, const NoiseSpec& noise,
                            const SweepConfig& cfg) {
  if (cfg.n_bursts < 1) throw ConfigError("n_bursts: must be >= 1");
  if (which == SweepParameter::noise_eta && noise.kind != NoiseSpec::Kind::white) {
    throw ConfigError("sweep: eta sweep needs noise.variant = white");
  }
  if (which == SweepParameter::noise_lambda && noise.kind != NoiseSpec::Kind::coloured) {
    throw ConfigError("sweep: lambda sweep needs noise.variant = coloured");
  }
  Vector design = cfg.design_v;
  if (cfg.symmetric_mode) {
    std::vector<Scalar> pos;
    for (Index i = 0; i < design.size(); ++i) {
      if (design[i] > 0) pos.push_back(design[i]);
    }
    design = Eigen::Map<Vector>(pos.data(), pos.size());
  }
  if (design.size() < 2) throw ConfigError("design_v: too few design points");

  // The reference depends only on the deterministic parameters, so noise
  // sweeps share one.
  ReferenceBump shared_ref;
  const bool per_point_ref = which == SweepParameter::adaptation_strength;
  if (!per_point_ref) shared_ref = make_reference(base);

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (Index g = 0; g < grid.size(); ++g) {
    SweepRow row;
    row.parameter = grid[g];
    ModelParams params = base;
    NoiseSpec spec = noise;
    switch (which) {
      case SweepParameter::adaptation_strength:
        params.adaptation_strength = grid[g];
        break;
      case SweepParameter::noise_eta:
        spec.eta = grid[g];
        break;
      case SweepParameter::noise_lambda:
        spec.lambda = grid[g];
        break;
    }
    try {
      const ReferenceBump ref = per_point_ref ? make_reference(params) : shared_ref;
      const Index nd = design.size();
      Vector mu(nd), mu_se(nd), d(nd), d_se(nd);
      for (Index i = 0; i < nd; ++i) {
        const uint32_t stream = static_cast<uint32_t>(g) * 64u + static_cast<uint32_t>(i);
        const MomentEstimate m =
            estimate_burst(design[i], cfg.n_bursts, cfg.window, params, spec,
                           ref, cfg.seed, stream, cfg.workers, cfg.dt);
        row.design_moments.push_back(m);
        mu[i] = m.mu;
        mu_se[i] = m.mu_se;
        d[i] = m.d;
        d_se[i] = m.d_se;
      }
      row.cubic = fit_cubic(design, mu, mu_se, cfg.symmetric_mode);
      row.roots = cubic_zeros(row.cubic);
      for (auto& bp : row.roots) bp.parameter = grid[g];

      if (cfg.density_extrema) {
        // Density extrema solve mu(V) = D'(V); fit D quadratically first.
        Vector dc;
        if (cfg.symmetric_mode) {
          Matrix X(nd, 2);
          for (Index i = 0; i < nd; ++i) {
            X(i, 0) = 1;
            X(i, 1) = design[i] * design[i];
          }
          const auto [coef, se] = wls(X, d, d_se);
          dc = Vector::Zero(3);
          dc << coef[0], 0.0, coef[1];
        } else {
          Matrix X(nd, 3);
          for (Index i = 0; i < nd; ++i) {
            X(i, 0) = 1;
            X(i, 1) = design[i];
            X(i, 2) = design[i] * design[i];
          }
          const auto [coef, se] = wls(X, d, d_se);
          dc = coef;
        }
        CubicDrift gfun = row.cubic;
        gfun.c0 -= dc[1];
        gfun.c1 -= 2 * dc[2];
        auto extrema = classify(real_roots(gfun.c0, gfun.c1, gfun.c2, gfun.c3),
                                gfun, RootKind::density_extremum);
        for (auto& bp : extrema) bp.parameter = grid[g];
        row.roots.insert(row.roots.end(), extrema.begin(), extrema.end());
      }
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

PitchforkFit fit_pitchfork(const std::vector<SweepRow>& rows) {
  std::vector<Scalar> roots, params;
  for (const auto& row : rows) {
    if (row.failed) continue;
    std::vector<Scalar> dz;
    for (const auto& bp : row.roots) {
      if (bp.kind == RootKind::drift_zero) dz.push_back(bp.root);
    }
    if (dz.size() != 3) continue;
    const auto [lo, hi] = std::minmax_element(dz.begin(), dz.end());
    roots.push_back(*lo);
    params.push_back(row.parameter);
    roots.push_back(*hi);
    params.push_back(row.parameter);
  }
  if (roots.size() < 4) {
    throw EstimationError("pitchfork fit needs at least 4 supercritical branch points");
  }
  const Index n = static_cast<Index>(roots.size());
  Matrix X(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    X(i, 0) = 1;
    X(i, 1) = roots[i] * roots[i];
    y[i] = params[i];
  }
  const auto [coef, se] = wls(X, y, Vector::Zero(n));
  PitchforkFit fit;
  fit.onset = coef[0];
  fit.a2 = coef[1];
  fit.n_points = n;
  const Scalar mean = y.mean();
  Scalar ss_tot = 0, ss_res = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar pred = coef[0] + coef[1] * X(i, 1);
    ss_tot += (y[i] - mean) * (y[i] - mean);
    ss_res += (y[i] - pred) * (y[i] - pred);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res < 1e-20 ? 1.0 : 0.0);
  return fit;
}

}  // namespace nfield
