#include "nfield/dmap_lift.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "nfield/errors.hpp"
#include "nfield/observables.hpp"
#include "nfield/parallel.hpp"
#include "nfield/sim.hpp"

namespace nfield {
namespace {

// Smooth circular perturbation: first 8 Fourier modes with independent
// Gaussian coefficients, normalized so `scale` is the per-node RMS of the
// whole field. Low-pass moves keep trials near the snapshot manifold;
// per-node jitter would strand the kernel row.
Vector smooth_field(int m, Scalar scale, Rng& rng) {
  std::normal_distribution<Scalar> gauss(0.0, scale / std::sqrt(8.0));
  Vector out = Vector::Zero(m);
  for (int k = 1; k <= 8; ++k) {
    const Scalar ck = gauss(rng), sk = gauss(rng);
    for (int i = 0; i < m; ++i) {
      const Scalar x = grid_point(m, i);
      out[i] += ck * std::cos(k * x) + sk * std::sin(k * x);
    }
  }
  return out;
}

struct Eval {
  Scalar objective;
  Scalar phi2;
  Scalar kernel_mass;
  Vector row;  // preprocessed snapshot
  bool valid;
};

Eval evaluate(const FieldState& trial, Scalar target, Scalar lambda_obj,
              const DiffusionMapModel& model) {
  Eval ev;
  try {
    ev.row = preprocess_one(trial, model.reference_u);
  } catch (const DegenerateProfile&) {
    ev.valid = false;
    ev.objective = std::numeric_limits<Scalar>::infinity();
    return ev;
  }
  const RestrictResult rr = nystrom_restrict(ev.row, model);
  ev.phi2 = rr.phi[0];
  ev.kernel_mass = rr.kernel_mass;
  ev.objective = lambda_obj * (ev.phi2 - target) * (ev.phi2 - target);
  ev.valid = true;
  return ev;
}

}  // namespace

void SAConfig::validate() const {
  if (!(lambda_obj > 0)) throw ConfigError("lambda_obj: must be > 0");
  if (!(t_init > 0)) throw ConfigError("t_init: must be > 0");
  if (!(cooling > 0 && cooling < 1)) throw ConfigError("cooling: must be in (0, 1)");
  if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch: must be >= 1");
  if (!(move_scale > 0)) throw ConfigError("move_scale: must be > 0");
  if (max_epochs < 1) throw ConfigError("max_epochs: must be >= 1");
  if (!(success_tol > 0)) throw ConfigError("success_tol: must be > 0");
}

LiftResult lift_phi2(Scalar target, const DiffusionMapModel& model,
                     const SAConfig& sa, Rng& rng) {
  sa.validate();
  const auto phi2 = model.phi.col(1);
  if (target < phi2.minCoeff() || target > phi2.maxCoeff()) {
    throw ConfigError("target: outside the dataset phi2 range");
  }
  const Scalar threshold = sa.success_tol * sa.lambda_obj;
  const Index m = model.data.cols() / 2;

  Index seed_index = 0;
  (phi2.array() - target).abs().minCoeff(&seed_index);

  FieldState current;
  current.u = model.data.row(seed_index).head(m);
  current.a = model.data.row(seed_index).tail(m);
  Eval cur = evaluate(current, target, sa.lambda_obj, model);

  FieldState best_state = current;
  Eval best = cur;
  LiftResult out;
  out.seed_index = seed_index;

  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  if (best.objective > threshold) {
    for (int epoch = 0; epoch < sa.max_epochs; ++epoch) {
      const Scalar temp = sa.t_init * std::pow(sa.cooling, epoch);
      for (int step = 0; step < sa.steps_per_epoch; ++step) {
        FieldState trial;
        trial.u = current.u + smooth_field(static_cast<int>(m), sa.move_scale, rng);
        trial.a = current.a + smooth_field(static_cast<int>(m), sa.move_scale, rng);
        ++out.iterations;
        const Eval ev = evaluate(trial, target, sa.lambda_obj, model);
        if (!ev.valid) continue;
        const Scalar delta = ev.objective - cur.objective;
        if (delta <= 0 || unif(rng) < std::exp(-delta / temp)) {
          current = std::move(trial);
          cur = ev;
          ++out.accepted;
          if (cur.objective < best.objective) {
            best = cur;
            best_state = current;
          }
        }
      }
      out.trace.push_back(best.objective);
      if (best.objective <= threshold) break;
    }
  }

  out.state.u = best.row.head(m);
  out.state.a = best.row.tail(m);
  out.achieved_phi2 = best.phi2;
  out.objective = best.objective;
  out.kernel_mass = best.kernel_mass;
  out.success = best.objective <= threshold;
  return out;
}

FieldState to_physical(const FieldState& snapshot_state,
                       const DiffusionMapModel& model, Index row) {
  if (row < 0 || row >= model.size()) throw ConfigError("row: outside the dataset");
  const SnapshotNorm& nm = model.norms[row];
  FieldState out;
  out.u = circshift(snapshot_state.u, -nm.shift) * nm.u_scale;
  out.a = circshift(snapshot_state.a, -nm.shift) * nm.a_scale;
  return out;
}

MomentEstimate estimate_mu_d_phi2(Scalar target, const DiffusionMapModel& model,
                                  long n_bursts, const EstimationWindow& window,
                                  const ModelParams& params,
                                  const NoiseSpec& spec, const SAConfig& sa,
                                  uint64_t seed, int workers, Scalar dt) {
  window.validate();
  if (n_bursts < 1) throw ConfigError("n_bursts: must be >= 1");

  Rng lift_rng = make_rng(seed, StreamTag::annealing);
  const LiftResult lifted = lift_phi2(target, model, sa, lift_rng);
  if (!lifted.success) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "lift to phi2 target failed: best objective %.3g after %ld trials",
                  lifted.objective, lifted.iterations);
    throw LiftError(buf);
  }
  const FieldState start = to_physical(lifted.state, model, lifted.seed_index);

  SimOptions sim;
  sim.duration = window.burst_duration;
  sim.sample_interval = window.lag_fit ? 1.0 : window.dt_est;
  sim.dt = dt;
  sim.validate();
  const Scalar rec = sim.sample_interval;
  const long discard_idx = std::lround(window.discard / rec);
  if (std::abs(window.discard - discard_idx * rec) > 1e-9) {
    throw ConfigError("discard: must be a multiple of the recording interval");
  }

  const int n_lags = window.lag_fit ? 4 : 1;
  std::vector<long> lag_rec(n_lags);
  long max_lag_rec = 0;
  for (int l = 0; l < n_lags; ++l) {
    const Scalar lag = window.lag_fit ? EstimationWindow::kFitLags[l] : window.dt_est;
    lag_rec[l] = std::lround(lag / rec);
    max_lag_rec = std::max(max_lag_rec, lag_rec[l]);
  }

  std::vector<std::vector<std::vector<Scalar>>> per_burst(n_bursts);
  std::vector<char> dropped(n_bursts, 0);
  parallel_for(n_bursts, workers, [&](long b) {
    Rng rng = make_rng(seed, StreamTag::burst, 0, static_cast<uint32_t>(b));
    TrajectoryRecord rec_traj;
    try {
      rec_traj = simulate(start, params, spec, sim, rng);
    } catch (const IntegrationBlowup&) {
      dropped[b] = 1;
      return;
    }
    const long nkeep = static_cast<long>(rec_traj.snapshots.size()) - discard_idx;
    Matrix rows(nkeep, model.data.cols());
    for (long i = 0; i < nkeep; ++i) {
      rows.row(i) = preprocess_one(rec_traj.snapshots[discard_idx + i],
                                   model.reference_u)
                        .transpose();
    }
    const Matrix coords = restrict_rows(rows, model);
    auto& mine = per_burst[b];
    mine.resize(n_lags);
    const long last_base = nkeep - 1 - max_lag_rec;
    const long stride = window.lag_fit ? 1 : lag_rec[0];
    for (int l = 0; l < n_lags; ++l) {
      for (long i = 0; i <= last_base; i += stride) {
        mine[l].push_back(coords(i + lag_rec[l], 0) - coords(i, 0));
      }
    }
  });

  std::vector<std::vector<Scalar>> pooled(n_lags);
  long n_dropped = 0;
  for (long b = 0; b < n_bursts; ++b) {
    if (dropped[b]) {
      ++n_dropped;
      continue;
    }
    for (int l = 0; l < n_lags; ++l) {
      pooled[l].insert(pooled[l].end(), per_burst[b][l].begin(), per_burst[b][l].end());
    }
  }
  MomentEstimate out = combine_lag_increments(pooled, window);
  out.dropped = n_dropped;
  return out;
}

VSeries simulate_phi2_series(const FieldState& initial,
                             const ModelParams& params, const NoiseSpec& spec,
                             Scalar duration, Scalar spacing, Scalar dt,
                             const DiffusionMapModel& model, Rng& rng) {
  SimOptions probe;
  probe.dt = dt;
  probe.sample_interval = spacing;
  probe.duration = duration;
  probe.validate();
  if (initial.size() != params.nodes) {
    throw ConfigError("initial state size does not match M");
  }

  const long per_sample = std::lround(spacing / dt);
  const long n_samples = std::lround(duration / spacing);

  Stepper stepper(params, spec);
  FieldState state = initial;
  NoiseState ns = NoiseState::initial(spec, params.nodes, rng);

  VSeries out;
  out.dt_sample = spacing;
  out.times.reserve(n_samples + 1);
  out.peak_u.reserve(n_samples + 1);
  out.peak_a.reserve(n_samples + 1);
  out.v.reserve(n_samples + 1);

  // Snapshots are restricted in fixed-size chunks so a multi-day run never
  // holds more than one chunk of rows.
  const long chunk = 1024;
  Matrix rows(chunk, model.data.cols());
  long filled = 0;
  auto flush = [&] {
    if (filled == 0) return;
    const Matrix coords = restrict_rows(rows.topRows(filled), model);
    for (long i = 0; i < filled; ++i) out.v.push_back(coords(i, 0));
    filled = 0;
  };
  auto push = [&](Scalar t) {
    rows.row(filled) = preprocess_one(state, model.reference_u).transpose();
    const PeakPhase pu = peak_phase(state.u);
    const PeakPhase pa = peak_phase(state.a);
    out.times.push_back(t);
    out.peak_u.push_back(pu.phase);
    out.peak_a.push_back(pa.phase);
    ++filled;
    if (filled == chunk) flush();
  };

  push(0.0);
  for (long s = 1; s <= n_samples; ++s) {
    for (long k = 0; k < per_sample; ++k) stepper.step(state, ns, dt, rng);
    push(static_cast<Scalar>(s) * spacing);
  }
  flush();
  out.final_state = state;
  return out;
}

}  // namespace nfield
