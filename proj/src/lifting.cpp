#include "nfield/lifting.hpp"

#include <cmath>

#include "nfield/errors.hpp"
#include "nfield/observables.hpp"
#include "nfield/sim.hpp"

namespace nfield {

namespace {

// Speed constancy over the trailing window: peak increments per unit time
// must agree with their mean to 1% (1e-5 absolute for stationary bumps).
bool speed_settled(const VSeries& series, long window) {
  const long n = static_cast<long>(series.peak_u.size());
  const long w = std::min<long>(window, n - 1);
  if (w < 2) throw ConfigError("t_ref: too short for a speed check");
  std::vector<Scalar> incr(w);
  for (long k = 0; k < w; ++k) {
    incr[k] =
        wrap_angle(series.peak_u[n - w + k] - series.peak_u[n - w + k - 1]);
  }
  Scalar speed = 0;
  for (Scalar d : incr) speed += d;
  speed /= static_cast<Scalar>(w);
  for (Scalar d : incr) {
    if (std::abs(d - speed) > std::max(0.01 * std::abs(speed), 1e-5)) {
      return false;
    }
  }
  return true;
}

}  // namespace

ReferenceBump make_reference(const ModelParams& params,
                             const ReferenceOptions& opts) {
  params.validate();
  FieldState state = bump_seed(params);
  // A symmetric seed sits on the unstable V=0 state indefinitely; bias the
  // adaptation one node backward so travel starts in the +x direction.
  state.a = circshift(state.a, -1);

  SimOptions sim;
  sim.duration = opts.t_ref;
  sim.sample_interval = 1.0;
  sim.dt = opts.dt;
  Rng rng = make_rng(0, StreamTag::simulate);

  // Transients slow down arbitrarily near the drift onset, so settle in
  // blocks until the speed check passes or the time budget runs out.
  Scalar total = 0;
  for (;;) {
    const VSeries series =
        simulate_vseries(state, params, NoiseSpec::white(0.0), sim, rng);
    state = series.final_state;
    total += sim.duration;
    if (speed_settled(series, std::lround(opts.check_window))) break;
    if (total + sim.duration > opts.max_settle) {
      throw LiftError("reference bump speed did not settle to a constant");
    }
  }

  ReferenceBump ref;
  ref.u_ref = state.u;
  ref.a_ref = state.a;
  ref.v_ref = coarse_v(ref.u_ref, ref.a_ref);  // throws if the bump died
  ref.params = params;
  return ref;
}

Vector trig_shift(const Vector& profile, Scalar delta) {
  const int m = static_cast<int>(profile.size());
  const int half = m / 2;
  // Real trigonometric coefficients on the ring grid; the Nyquist cosine
  // (even m) carries half weight like the constant term.
  Vector ac = Vector::Zero(half + 1), as = Vector::Zero(half + 1);
  for (int j = 0; j < m; ++j) {
    const Scalar x = grid_point(m, j);
    for (int k = 0; k <= half; ++k) {
      ac[k] += profile[j] * std::cos(k * x);
      as[k] += profile[j] * std::sin(k * x);
    }
  }
  ac *= 2.0 / m;
  as *= 2.0 / m;

  Vector out(m);
  for (int i = 0; i < m; ++i) {
    const Scalar x = grid_point(m, i) - delta;
    Scalar v = 0.5 * ac[0];
    for (int k = 1; k < half; ++k) {
      v += ac[k] * std::cos(k * x) + as[k] * std::sin(k * x);
    }
    if (m % 2 == 0) {
      v += 0.5 * ac[half] * std::cos(half * x);
    } else if (half >= 1) {
      v += ac[half] * std::cos(half * x) + as[half] * std::sin(half * x);
    }
    out[i] = v;
  }
  return out;
}

FieldState lift_v(Scalar v0, const ReferenceBump& ref) {
  if (!(std::abs(v0) < kPi / 2)) {
    throw ConfigError("v0: lift target must satisfy |v0| < pi/2");
  }
  // V = c_u - c_a, so moving the adaptation peak by (v_ref - v0) sets V = v0.
  const Scalar delta = wrap_angle(ref.v_ref - v0);
  FieldState out;
  out.u = ref.u_ref;
  out.a = trig_shift(ref.a_ref, delta);
  const Scalar got = coarse_v(out.u, out.a);
  if (std::abs(wrap_angle(got - v0)) > 1e-6) {
    throw LiftError("lifted state missed the target coarse value");
  }
  return out;
}

}  // namespace nfield
