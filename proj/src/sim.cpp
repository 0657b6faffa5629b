#include "nfield/sim.hpp"

#include <cmath>
#include <random>

#include "nfield/errors.hpp"
#include "nfield/observables.hpp"

namespace nfield {
namespace {

// steps = interval / dt, required to be an integer to within rounding noise
long steps_in(Scalar interval, Scalar dt, const char* what) {
  const Scalar ratio = interval / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<Scalar>(n)) > 1e-9 * ratio) {
    throw ConfigError(std::string(what) + ": must be a positive integer multiple of the step below it");
  }
  return n;
}

}  // namespace

NoiseState NoiseState::initial(const NoiseSpec& spec, int nodes, Rng& rng) {
  NoiseState ns;
  ns.values = Vector::Zero(nodes);
  if (spec.kind == NoiseSpec::Kind::coloured) {
    std::normal_distribution<Scalar> gauss(0.0, std::sqrt(2.0 * spec.epsilon));
    for (int i = 0; i < nodes; ++i) ns.values[i] = gauss(rng);
  }
  return ns;
}

void noise_step(NoiseState& ns, const NoiseSpec& spec, Scalar dt, Rng& rng,
                Vector& increment) {
  std::normal_distribution<Scalar> gauss;
  increment.resize(ns.values.size());
  if (spec.kind == NoiseSpec::Kind::white) {
    const Scalar amp = std::sqrt(2.0 * spec.eta * dt);
    for (Index i = 0; i < increment.size(); ++i) increment[i] = amp * gauss(rng);
    return;
  }
  // Exact one-step OU transition, then the field sees values * dt.
  const Scalar decay = std::exp(-dt / spec.lambda);
  const Scalar amp = std::sqrt(2.0 * spec.epsilon * (1.0 - decay * decay));
  for (Index i = 0; i < ns.values.size(); ++i) {
    ns.values[i] = ns.values[i] * decay + amp * gauss(rng);
    increment[i] = ns.values[i] * dt;
  }
}

Stepper::Stepper(const ModelParams& p, const NoiseSpec& s)
    : Stepper(p, s, coupling_matrix(p)) {}

Stepper::Stepper(const ModelParams& p, const NoiseSpec& s, Matrix J)
    : params(p), spec(s), coupling(std::move(J)) {
  params.validate();
  spec.validate();
  du_.resize(p.nodes);
  da_.resize(p.nodes);
  incr_.resize(p.nodes);
}

void Stepper::step(FieldState& state, NoiseState& ns, Scalar dt, Rng& rng) {
  drift_field(state, params, coupling, du_, da_);
  noise_step(ns, spec, dt, rng, incr_);
  state.u += dt * du_ + incr_;
  state.a += dt * da_;
  t_ += dt;
  if (!state.all_finite() || state.u.cwiseAbs().maxCoeff() > 1e6) {
    throw IntegrationBlowup(t_);
  }
}

void SimOptions::validate() const {
  if (!(dt > 0)) throw ConfigError("dt: must be > 0");
  if (!(sample_interval > 0)) throw ConfigError("sample_interval: must be > 0");
  if (!(duration >= 0)) throw ConfigError("duration: must be >= 0");
  steps_in(sample_interval, dt, "sample_interval");
  if (duration > 0) steps_in(duration, sample_interval, "duration");
}

TrajectoryRecord simulate(const FieldState& initial, const ModelParams& params,
                          const NoiseSpec& spec, const SimOptions& opts,
                          Rng& rng) {
  opts.validate();
  if (initial.size() != params.nodes) {
    throw ConfigError("initial state size does not match M");
  }
  const long per_sample = steps_in(opts.sample_interval, opts.dt, "sample_interval");
  const long n_samples =
      opts.duration > 0 ? steps_in(opts.duration, opts.sample_interval, "duration") : 0;

  Stepper stepper(params, spec);
  FieldState state = initial;
  NoiseState ns = NoiseState::initial(spec, params.nodes, rng);

  TrajectoryRecord rec;
  rec.times.reserve(n_samples + 1);
  rec.snapshots.reserve(n_samples + 1);
  rec.times.push_back(0.0);
  rec.snapshots.push_back(state);
  for (long s = 1; s <= n_samples; ++s) {
    for (long k = 0; k < per_sample; ++k) stepper.step(state, ns, opts.dt, rng);
    rec.times.push_back(static_cast<Scalar>(s) * opts.sample_interval);
    rec.snapshots.push_back(state);
  }
  return rec;
}

VSeries simulate_vseries(const FieldState& initial, const ModelParams& params,
                         const NoiseSpec& spec, const SimOptions& opts,
                         Rng& rng) {
  opts.validate();
  if (initial.size() != params.nodes) {
    throw ConfigError("initial state size does not match M");
  }
  const long per_sample = steps_in(opts.sample_interval, opts.dt, "sample_interval");
  const long n_samples =
      opts.duration > 0 ? steps_in(opts.duration, opts.sample_interval, "duration") : 0;

  Stepper stepper(params, spec);
  FieldState state = initial;
  NoiseState ns = NoiseState::initial(spec, params.nodes, rng);

  VSeries out;
  out.dt_sample = opts.sample_interval;
  out.times.reserve(n_samples + 1);
  out.peak_u.reserve(n_samples + 1);
  out.peak_a.reserve(n_samples + 1);
  out.v.reserve(n_samples + 1);
  auto record = [&](Scalar t) {
    const PeakPhase pu = peak_phase(state.u);
    const PeakPhase pa = peak_phase(state.a);
    out.times.push_back(t);
    out.peak_u.push_back(pu.phase);
    out.peak_a.push_back(pa.phase);
    out.v.push_back(coarse_v(pu.phase, pa.phase));
  };
  record(0.0);
  for (long s = 1; s <= n_samples; ++s) {
    for (long k = 0; k < per_sample; ++k) stepper.step(state, ns, opts.dt, rng);
    record(static_cast<Scalar>(s) * opts.sample_interval);
  }
  out.final_state = state;
  return out;
}

}  // namespace nfield
