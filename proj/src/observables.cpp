#include "nfield/observables.hpp"

#include <cmath>

#include "nfield/errors.hpp"
#include "nfield/model.hpp"

namespace nfield {

Scalar wrap_angle(Scalar theta) {
  Scalar r = std::fmod(theta + kPi, kTwoPi);
  if (r <= 0) r += kTwoPi;  // fmod keeps the sign of its argument
  return r - kPi;
}

PeakPhase peak_phase(const Vector& weights) {
  const Index m = weights.size();
  Scalar s = 0, c = 0;
  for (Index i = 0; i < m; ++i) {
    const Scalar x = grid_point(static_cast<int>(m), static_cast<int>(i));
    s += weights[i] * std::sin(x);
    c += weights[i] * std::cos(x);
  }
  PeakPhase out;
  out.amplitude = std::hypot(s, c);
  if (out.amplitude < 1e-8 * static_cast<Scalar>(m)) {
    throw DegenerateProfile("profile has no resolvable peak (first circular moment ~ 0)");
  }
  out.phase = std::atan2(s, c);
  return out;
}

Scalar coarse_v(Scalar phase_u, Scalar phase_a) {
  return wrap_angle(phase_u - phase_a);
}

Scalar coarse_v(const Vector& u, const Vector& a) {
  return coarse_v(peak_phase(u).phase, peak_phase(a).phase);
}

}  // namespace nfield
