#pragma once

#include <vector>

#include "nfield/dmap.hpp"
#include "nfield/langevin.hpp"
#include "nfield/rng.hpp"

namespace nfield {

// Simulated-annealing schedule for lifting to a diffusion-map coordinate.
struct SAConfig {
  Scalar lambda_obj = 1.0;   // objective weight on (phi2 - target)^2
  Scalar t_init = 1e-4;      // initial temperature, objective units
  Scalar cooling = 0.95;     // geometric factor per epoch
  int steps_per_epoch = 40;
  Scalar move_scale = 0.02;  // per-node RMS amplitude of proposal fields
  int max_epochs = 200;
  // Success when objective <= success_tol * lambda_obj (|dPhi2| <= 1e-2 at
  // the default).
  Scalar success_tol = 1e-4;

  void validate() const;
};

struct LiftResult {
  FieldState state;  // snapshot convention: u-part max is 1, aligned frame
  Scalar achieved_phi2 = 0;
  Scalar objective = 0;
  long iterations = 0;
  long accepted = 0;
  bool success = false;
  Index seed_index = 0;     // dataset row the chain started from
  Scalar kernel_mass = 0;   // of the returned state's restriction
  std::vector<Scalar> trace;  // best objective at each epoch
};

// Anneals a preprocessed state toward the target phi2 by smooth circular
// perturbations of the seed snapshot. Never throws on a near-miss: a result
// with success=false carries the best objective reached.
LiftResult lift_phi2(Scalar target, const DiffusionMapModel& model,
                     const SAConfig& sa, Rng& rng);

// Maps a snapshot-convention state back to physical amplitude using the
// normalization recorded for a dataset row (the lift's seed).
FieldState to_physical(const FieldState& snapshot_state,
                       const DiffusionMapModel& model, Index row);

// Burst moments of the phi2 coordinate: every burst starts from the lifted
// state (fresh noise), snapshots are restricted through the model, and the
// increments feed the standard moment estimators.
MomentEstimate estimate_mu_d_phi2(Scalar target, const DiffusionMapModel& model,
                                  long n_bursts, const EstimationWindow& window,
                                  const ModelParams& params,
                                  const NoiseSpec& spec, const SAConfig& sa,
                                  uint64_t seed, int workers = 1,
                                  Scalar dt = 0.05);

// Long run recorded directly in the restricted coordinate: integrates in
// bounded-memory chunks and maps every snapshot through the model. The
// returned series carries phi2 in .v (not the peak-phase difference); noise
// state is continuous across chunks.
VSeries simulate_phi2_series(const FieldState& initial,
                             const ModelParams& params, const NoiseSpec& spec,
                             Scalar duration, Scalar spacing, Scalar dt,
                             const DiffusionMapModel& model, Rng& rng);

}  // namespace nfield
