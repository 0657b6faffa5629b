#pragma once

#include <string>
#include <vector>

#include "nfield/langevin.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Cubic surrogate for the effective drift, mu(V) ~ c0 + c1 V + c2 V^2 + c3 V^3.
struct CubicDrift {
  Scalar c0 = 0, c1 = 0, c2 = 0, c3 = 0;
  Vector se = Vector::Zero(4);  // coefficient standard errors (fit order)
  Scalar residual = 0;          // rms misfit at the sample points
  bool symmetric_mode = false;  // forces c0 = c2 = 0

  Scalar eval(Scalar v) const { return c0 + v * (c1 + v * (c2 + v * c3)); }
  Scalar deriv(Scalar v) const { return c1 + v * (2 * c2 + v * 3 * c3); }
};

enum class Stability { stable, unstable };

// Root provenance: zeros of the drift itself, or extrema of the stationary
// density (zeros of mu - D'), which differ under state-dependent diffusion.
enum class RootKind { drift_zero, density_extremum };

struct BranchPoint {
  Scalar parameter = 0;
  Scalar root = 0;
  Stability stability = Stability::stable;
  Scalar slope = 0;  // derivative of the defining function at the root
  RootKind kind = RootKind::drift_zero;
};

// Weighted least squares on [1, V, V^2, V^3] (or [V, V^3] in symmetric
// mode); exact interpolation when the sample count equals the unknowns.
CubicDrift fit_cubic(const Vector& v, const Vector& mu, const Vector& mu_se,
                     bool symmetric_mode = false);

// All real roots in (-pi, pi) with stability from the local slope
// (stable iff mu'(root) < 0). Degenerate leading coefficients fall back to
// quadratic/linear rules.
std::vector<BranchPoint> cubic_zeros(const CubicDrift& cubic);

enum class SweepParameter { adaptation_strength, noise_eta, noise_lambda };

struct SweepConfig {
  Vector design_v;  // default +-0.05, +-0.15 (positive pair in symmetric mode)
  long n_bursts = 10000;
  bool symmetric_mode = false;
  EstimationWindow window;
  uint64_t seed = 0;
  int workers = 1;
  Scalar dt = 0.05;
  // Also locate stationary-density extrema: zeros of mu(V) - D'(V) with D
  // fitted quadratically over the design points.
  bool density_extrema = false;

  SweepConfig();
};

struct SweepRow {
  Scalar parameter = 0;
  CubicDrift cubic;
  std::vector<MomentEstimate> design_moments;  // one per design point
  std::vector<BranchPoint> roots;
  bool failed = false;
  std::string error;
};

// Burst-estimates mu at the design points for every parameter value, fits
// the cubic, and emits its zeros. Estimation failures mark the row instead
// of aborting the sweep.
std::vector<SweepRow> sweep(SweepParameter which, const Vector& grid,
                            const ModelParams& base, const NoiseSpec& noise,
                            const SweepConfig& cfg);

struct PitchforkFit {
  Scalar onset = 0;  // a0 of parameter = a0 + a2 V^2
  Scalar a2 = 0;
  Scalar r2 = 0;
  long n_points = 0;
};

// Quadratic fit of the swept parameter against the outer (extreme) roots of
// rows with three drift zeros. Needs at least 4 such points.
PitchforkFit fit_pitchfork(const std::vector<SweepRow>& rows);

}  // namespace nfield
