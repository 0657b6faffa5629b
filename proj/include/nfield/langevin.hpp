#pragma once

#include <vector>

#include "nfield/lifting.hpp"
#include "nfield/model.hpp"
#include "nfield/rng.hpp"
#include "nfield/sim.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Moment-estimation window for the coarse variable. Defaults follow the
// burst protocol: 14 time units per burst, 2 discarded for healing, moments
// at a single lag of 2.
struct EstimationWindow {
  Scalar burst_duration = 14;
  Scalar dt_est = 2.0;
  Scalar discard = 2.0;
  // When set, fit <dV> and <dV^2> linearly over lags {1,2,4,8} and take the
  // slopes instead of the single-lag moments; guards against finite-lag bias.
  bool lag_fit = false;

  void validate() const;
  static constexpr Scalar kFitLags[4] = {1, 2, 4, 8};
};

enum class DDMethod { database, burst };

// Drift and diffusion of V on a grid; points with too few occurrences are
// flagged missing (NaN entries) rather than fabricated.
struct DriftDiffusionCurve {
  Vector v_grid;
  Vector mu, mu_se;
  Vector d, d_se;
  std::vector<long> n_samples;
  std::vector<char> missing;
  DDMethod method = DDMethod::database;

  // Longest contiguous run of usable points (for integration downstream).
  DriftDiffusionCurve occupied_run() const;
};

struct MomentEstimate {
  Scalar mu = 0, mu_se = 0;
  Scalar d = 0, d_se = 0;
  long n = 0;
  long dropped = 0;  // bursts lost to integration blowup
};

// Single-lag moments: mu = mean(dv)/dt, D = population-variance(dv)/(2 dt);
// standard errors from the sample's second and fourth moments.
MomentEstimate moments_from_increments(const std::vector<Scalar>& dv,
                                       Scalar dt_est);

// Pooled increments per lag (one list in single-lag mode, four in lag-fit
// mode, ordered as kFitLags) reduced to a moment estimate per the window.
MomentEstimate combine_lag_increments(
    const std::vector<std::vector<Scalar>>& per_lag,
    const EstimationWindow& window);

// Weighted least-squares slope of y against x (with intercept); se_y are
// per-point standard errors. Returns {slope, slope_se}.
std::pair<Scalar, Scalar> weighted_slope(const Vector& x, const Vector& y,
                                         const Vector& se_y);

// Conditional moments from a long recorded series: occurrences of each grid
// value (bin half-width h_bin, successive occurrences separated by at least
// burst_duration) contribute forward increments over dt_est.
DriftDiffusionCurve estimate_database(const VSeries& series,
                                      const Vector& v_grid,
                                      const EstimationWindow& window,
                                      Scalar h_bin = 0.01, long n_min = 20);

// Ensemble moments at one prescribed v0: n_bursts short simulations started
// from lifted states, increments collected after the discard window.
// stream_a tags the seed stream so different grid points draw independent
// noise; bursts are independent and may run on several workers.
MomentEstimate estimate_burst(Scalar v0, long n_bursts,
                              const EstimationWindow& window,
                              const ModelParams& params, const NoiseSpec& spec,
                              const ReferenceBump& ref, uint64_t seed,
                              uint32_t stream_a = 0, int workers = 1,
                              Scalar dt = 0.05);

enum class PotentialMethod { histogram, fp_integral };

struct PotentialCurve {
  Vector v_grid;
  Vector g;  // beta*Phi, additive constant fixed so the minimum is 0
  std::vector<char> missing;
  PotentialMethod method = PotentialMethod::fp_integral;
};

// beta*Phi(V) = -integral_0^V mu/D ds + log D(V) + const (trapezoid on the
// curve's occupied run). Throws when D <= 0 at a usable point, naming it.
PotentialCurve potential_fp_integral(const DriftDiffusionCurve& curve);

// beta*Phi from the stationary law: -ln(histogram density) + const.
PotentialCurve potential_histogram(const std::vector<Scalar>& v_samples,
                                   int bins);

}  // namespace nfield
