#include "nfield/lifting.hpp"

#include <cmath>
#include <map>

#include "doctest.h"
#include "nfield/errors.hpp"
#include "nfield/model.hpp"
#include "nfield/observables.hpp"
#include "nfield/rng.hpp"
#include "nfield/sim.hpp"

using namespace nfield;

namespace {

// References are deterministic, so build each parameter point once.
const ReferenceBump& reference_at(Scalar a_strength) {
  static std::map<Scalar, ReferenceBump> cache;
  auto it = cache.find(a_strength);
  if (it == cache.end()) {
    ModelParams p;
    p.adaptation_strength = a_strength;
    it = cache.emplace(a_strength, make_reference(p)).first;
  }
  return it->second;
}

}  // namespace

TEST_CASE("trig_shift reduces to circshift on grid multiples") {
  const int m = 100;
  Vector v(m);
  for (Index i = 0; i < m; ++i) {
    const Scalar x = grid_point(m, i);
    v[i] = 0.4 + std::cos(x) - 0.3 * std::sin(2 * x) + 0.05 * std::cos(3 * x);
  }
  for (int k : {1, 7, -3, 50}) {
    const Vector shifted = trig_shift(v, kTwoPi * k / m);
    const Vector expected = circshift(v, k);
    CHECK((shifted - expected).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("trig_shift is exact off-grid for band-limited profiles") {
  const int m = 100;
  const Scalar delta = 0.37;
  Vector v(m), expected(m);
  auto profile = [](Scalar x) {
    return 0.2 + 0.8 * std::cos(x) + 0.1 * std::sin(3 * x);
  };
  for (Index i = 0; i < m; ++i) {
    const Scalar x = grid_point(m, i);
    v[i] = profile(x);
    expected[i] = profile(x - delta);
  }
  const Vector shifted = trig_shift(v, delta);
  CHECK((shifted - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reference bump drifts at the calibrated coarse value") {
  const ReferenceBump& ref = reference_at(0.17);
  CHECK(ref.u_ref.allFinite());
  CHECK(ref.u_ref.maxCoeff() > 0.2);
  CHECK(ref.v_ref == doctest::Approx(0.141023).epsilon(2e-3));
}

TEST_CASE("below the drift onset the reference bump is stationary") {
  const ReferenceBump& ref = reference_at(0.15);
  CHECK(std::abs(ref.v_ref) < 5e-3);
  CHECK(ref.u_ref.maxCoeff() > 0.2);
}

TEST_CASE("reflection reverses the coarse value") {
  const ReferenceBump& ref = reference_at(0.17);
  FieldState s;
  s.u = ref.u_ref;
  s.a = ref.a_ref;
  const FieldState mirrored = reflect_state(s);
  CHECK(coarse_v(mirrored.u, mirrored.a) ==
        doctest::Approx(-ref.v_ref).epsilon(1e-9));
}

TEST_CASE("lift_v hits the requested coarse value") {
  const ReferenceBump& ref = reference_at(0.17);
  for (Scalar v0 : {-0.3, -0.15, 0.0, 0.05, 0.15, 0.3}) {
    const FieldState s = lift_v(v0, ref);
    CHECK(std::abs(coarse_v(s.u, s.a) - v0) <= 1e-6);
  }
}

TEST_CASE("lift targets beyond pi/2 are rejected") {
  const ReferenceBump& ref = reference_at(0.17);
  CHECK_THROWS_AS(lift_v(1.6, ref), ConfigError);
  CHECK_THROWS_AS(lift_v(-2.0, ref), ConfigError);
}

TEST_CASE("lifted states stay near the target while healing") {
  // The rotated-adaptation state is slightly off the slow manifold; after the
  // fast transient the coarse value must still be close to the request.
  const ReferenceBump& ref = reference_at(0.17);
  for (Scalar v0 : {0.1, 0.2, -0.2}) {
    SimOptions opts;
    opts.duration = 2;
    opts.sample_interval = 2;
    Rng rng = make_rng(17, StreamTag::simulate);
    const TrajectoryRecord rec = simulate(lift_v(v0, ref), ref.params,
                                          NoiseSpec::white(0.0), opts, rng);
    const Scalar healed =
        coarse_v(rec.snapshots.back().u, rec.snapshots.back().a);
    CHECK(std::abs(healed - v0) < 0.05 * std::abs(v0));
  }
}

TEST_CASE("flat coupling cannot provide a reference bump") {
  ModelParams p;
  p.coupling_amplitude = 0.0;
  CHECK_THROWS_AS(make_reference(p), DegenerateProfile);
}
