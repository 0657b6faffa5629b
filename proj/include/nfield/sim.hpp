#pragma once

#include <vector>

#include "nfield/model.hpp"
#include "nfield/rng.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Per-node stochastic forcing state. Only the coloured (Ornstein-Uhlenbeck)
// variant evolves; for white noise the values stay zero and just fix the
// node count.
struct NoiseState {
  Vector values;

  // Coloured values are drawn from the stationary N(0, 2*epsilon) law.
  static NoiseState initial(const NoiseSpec& spec, int nodes, Rng& rng);
};

// Draws the additive forcing increment for one step of size dt and advances
// the noise state. White: sqrt(2*eta*dt)*N(0,1) per node. Coloured: exact OU
// update with stationary variance 2*epsilon, then increment = values*dt.
void noise_step(NoiseState& ns, const NoiseSpec& spec, Scalar dt, Rng& rng,
                Vector& increment);

// One Euler-Maruyama step. Throws IntegrationBlowup on non-finite output.
struct Stepper {
  Stepper(const ModelParams& params, const NoiseSpec& spec);
  // Reuses a precomputed coupling matrix (burst ensembles build many steppers).
  Stepper(const ModelParams& params, const NoiseSpec& spec, Matrix coupling);

  void step(FieldState& state, NoiseState& ns, Scalar dt, Rng& rng);

  const ModelParams params;
  const NoiseSpec spec;
  Matrix coupling;

 private:
  Vector du_, da_, incr_;
  Scalar t_ = 0;
};

struct TrajectoryRecord {
  std::vector<Scalar> times;
  std::vector<FieldState> snapshots;
  std::vector<Scalar> v_series;  // optional; empty unless requested
};

// Coarse time series of the peak observables; cheaper than full snapshots
// for long runs.
struct VSeries {
  Scalar dt_sample = 0;
  std::vector<Scalar> times;
  std::vector<Scalar> peak_u;
  std::vector<Scalar> peak_a;
  std::vector<Scalar> v;
  FieldState final_state;
};

struct SimOptions {
  Scalar duration = 1000;
  Scalar sample_interval = 1.0;
  Scalar dt = 0.05;

  void validate() const;  // interval must divide duration, dt the interval
};

// Integrates the field and records a snapshot at every multiple of
// sample_interval (including t=0). Deterministic given the rng seed.
TrajectoryRecord simulate(const FieldState& initial, const ModelParams& params,
                          const NoiseSpec& spec, const SimOptions& opts,
                          Rng& rng);

// As simulate(), but records only the peak/phase observables.
VSeries simulate_vseries(const FieldState& initial, const ModelParams& params,
                         const NoiseSpec& spec, const SimOptions& opts,
                         Rng& rng);

}  // namespace nfield
