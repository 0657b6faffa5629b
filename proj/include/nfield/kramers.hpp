#pragma once

#include <string>
#include <vector>

#include "nfield/langevin.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Double-well geometry of G = beta*Phi, with curvatures from local quadratic
// fits. The headline numbers average the two wells (the well is symmetric up
// to estimation noise); per-side values are kept for diagnostics.
struct WellSide {
  Scalar v_min = 0;
  Scalar g_min = 0;
  Scalar curvature = 0;
};

struct WellGeometry {
  Scalar v_min = 0;       // mean |location| of the two minima
  Scalar g_min = 0;       // mean well depth value
  Scalar g_barrier = 0;   // G at V = 0
  Scalar curvature_min = 0;
  Scalar curvature_barrier = 0;
  Scalar d_bar = 0;       // [D(0) + D(v_min)] / 2
  WellSide left, right;
};

struct SwitchRecord {
  std::vector<Scalar> switch_times;
  std::vector<Scalar> waiting;  // inter-switch intervals, size = switches - 1
  Scalar threshold = 0;
};

// Locates the two minima and the barrier of a double-well potential using
// quadratic fits over +-5 grid points; d_bar interpolated from the
// drift-diffusion curve. Throws NoBarrier for single-well input.
WellGeometry well_geometry(const PotentialCurve& potential,
                           const DriftDiffusionCurve& dd);

// Mean switching time 2*pi*exp(dG) / (d_bar*sqrt(-c_min*c_barrier)).
Scalar kramers_time(const WellGeometry& geom);

// Two-state hysteresis automaton: flips right when V > +theta, left when
// V < -theta, theta = hysteresis_fraction * v_min_magnitude. Fewer than two
// flips yields an empty record (callers decide whether to warn).
SwitchRecord detect_switches(const std::vector<Scalar>& times,
                             const std::vector<Scalar>& v,
                             Scalar v_min_magnitude,
                             Scalar hysteresis_fraction = 0.5);

struct KramersConfig {
  Vector v_grid;  // default: 29 points spanning [-0.28, 0.28]
  long n_bursts = 2000;
  EstimationWindow window;
  uint64_t seed = 0;
  int workers = 1;
  Scalar dt = 0.05;

  KramersConfig();
};

enum class TauParameter { adaptation_strength, noise_eta };

struct TauCurveRow {
  Scalar parameter = 0;
  WellGeometry geom;
  Scalar tau = 0;
  bool failed = false;  // single-well or estimation failure at this point
  std::string error;
};

// Kramers switching time across a parameter grid: burst-estimate mu and D on
// the V grid, integrate the potential, extract the well geometry.
std::vector<TauCurveRow> tau_curve(TauParameter which, const Vector& grid,
                                   const ModelParams& base,
                                   const NoiseSpec& noise,
                                   const KramersConfig& cfg);

// The burst-estimated drift-diffusion curve used by tau_curve, exposed for
// reuse (potential reconstruction at a single parameter point).
DriftDiffusionCurve burst_curve(const Vector& v_grid, const ModelParams& params,
                                const NoiseSpec& noise,
                                const KramersConfig& cfg,
                                uint32_t stream_base = 0);

}  // namespace nfield
