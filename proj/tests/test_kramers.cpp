#include "nfield/kramers.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nfield/errors.hpp"
#include "nfield/rng.hpp"

using namespace nfield;

namespace {

// Analytic double well G = k (v^2 - c)^2 sampled on a uniform grid, with a
// constant-diffusion curve alongside. Minima +-sqrt(c), barrier k c^2 at 0,
// curvatures 8 k c at the minima and -4 k c at the top.
struct QuarticSetup {
  PotentialCurve pot;
  DriftDiffusionCurve dd;
};

QuarticSetup quartic(Scalar k, Scalar c, Scalar d0, Scalar span = 0.35,
                     Scalar step = 0.005) {
  QuarticSetup q;
  const int n = static_cast<int>(std::lround(2 * span / step)) + 1;
  q.pot.v_grid.resize(n);
  q.pot.g.resize(n);
  q.pot.missing.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    const Scalar v = -span + i * step;
    q.pot.v_grid[i] = v;
    const Scalar w = v * v - c;
    q.pot.g[i] = k * w * w;
  }
  q.dd.v_grid = q.pot.v_grid;
  q.dd.mu = Vector::Zero(n);
  q.dd.mu_se = Vector::Ones(n);
  q.dd.d = Vector::Constant(n, d0);
  q.dd.d_se = Vector::Ones(n);
  q.dd.n_samples.assign(n, 1000);
  q.dd.missing.assign(n, 0);
  return q;
}

}  // namespace

TEST_CASE("well geometry of an analytic quartic") {
  const Scalar k = 50, c = 0.04, d0 = 2e-3;
  const QuarticSetup q = quartic(k, c, d0);
  const WellGeometry geom = well_geometry(q.pot, q.dd);
  CHECK(geom.v_min == doctest::Approx(std::sqrt(c)).epsilon(0.01));
  CHECK(std::abs(geom.g_min) < 1e-3);
  CHECK(geom.g_barrier == doctest::Approx(k * c * c).epsilon(0.01));
  CHECK(geom.curvature_min == doctest::Approx(8 * k * c).epsilon(0.03));
  CHECK(geom.curvature_barrier == doctest::Approx(-4 * k * c).epsilon(0.03));
  CHECK(geom.d_bar == doctest::Approx(d0).epsilon(1e-9));
  CHECK(geom.left.v_min == doctest::Approx(-std::sqrt(c)).epsilon(0.02));
  CHECK(geom.right.v_min == doctest::Approx(std::sqrt(c)).epsilon(0.02));
}

TEST_CASE("switching time matches the closed form and scales with diffusion") {
  const Scalar k = 50, c = 0.04, d0 = 2e-3;
  const QuarticSetup q = quartic(k, c, d0);
  const WellGeometry geom = well_geometry(q.pot, q.dd);
  const Scalar expected =
      kTwoPi * std::exp(k * c * c) / (d0 * std::sqrt(8 * k * c * 4 * k * c));
  CHECK(kramers_time(geom) == doctest::Approx(expected).epsilon(0.05));

  WellGeometry doubled = geom;
  doubled.d_bar *= 2;
  CHECK(kramers_time(doubled) ==
        doctest::Approx(0.5 * kramers_time(geom)).epsilon(1e-12));
}

TEST_CASE("single-welled potentials are rejected") {
  // (v^2 + c)^2 has its only minimum at v = 0.
  const Scalar k = 50, c = 0.04;
  QuarticSetup q = quartic(k, -0.0, 1e-3);
  for (int i = 0; i < q.pot.v_grid.size(); ++i) {
    const Scalar v = q.pot.v_grid[i];
    const Scalar w = v * v + c;
    q.pot.g[i] = k * w * w;
  }
  CHECK_THROWS_AS(well_geometry(q.pot, q.dd), NoBarrier);
}

TEST_CASE("missing estimate at the origin is rejected") {
  QuarticSetup q = quartic(50, 0.04, 1e-3);
  Index zero = 0;
  for (Index i = 1; i < q.pot.v_grid.size(); ++i) {
    if (std::abs(q.pot.v_grid[i]) < std::abs(q.pot.v_grid[zero])) zero = i;
  }
  q.pot.missing[zero] = 1;
  CHECK_THROWS_AS(well_geometry(q.pot, q.dd), NoBarrier);
}

TEST_CASE("square-wave series yields exact waiting times") {
  std::vector<Scalar> times, v;
  for (int t = 0; t < 1000; ++t) {
    times.push_back(t);
    v.push_back((t / 100) % 2 == 0 ? 0.3 : -0.3);
  }
  const SwitchRecord rec = detect_switches(times, v, 0.3);
  CHECK(rec.threshold == doctest::Approx(0.15));
  REQUIRE(rec.switch_times.size() == 9);
  REQUIRE(rec.waiting.size() == 8);
  for (Scalar w : rec.waiting) CHECK(w == doctest::Approx(100.0));
  CHECK(rec.switch_times.front() == doctest::Approx(100.0));
}

TEST_CASE("excursions that stop at the midline do not count as switches") {
  // Dips from +0.3 to 0 never reach the opposite threshold at -0.15.
  std::vector<Scalar> times, v;
  for (int t = 0; t < 400; ++t) {
    times.push_back(t);
    v.push_back((t / 50) % 2 == 0 ? 0.3 : 0.0);
  }
  const SwitchRecord rec = detect_switches(times, v, 0.3);
  CHECK(rec.switch_times.empty());
  CHECK(rec.waiting.empty());
}

TEST_CASE("switch detection is mirror invariant") {
  Rng rng = make_rng(400, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss(0.0, 0.05);
  std::vector<Scalar> times, v, neg;
  Scalar level = 0.2;
  for (int t = 0; t < 3000; ++t) {
    if (t % 250 == 0) level = -level;
    times.push_back(t);
    v.push_back(level + gauss(rng));
    neg.push_back(-v.back());
  }
  const SwitchRecord a = detect_switches(times, v, 0.2);
  const SwitchRecord b = detect_switches(times, neg, 0.2);
  REQUIRE(a.switch_times.size() == b.switch_times.size());
  for (size_t i = 0; i < a.switch_times.size(); ++i) {
    CHECK(a.switch_times[i] == b.switch_times[i]);
  }
}

TEST_CASE("switch detection input validation") {
  std::vector<Scalar> t = {0, 1}, v = {0.3};
  CHECK_THROWS_AS(detect_switches(t, v, 0.3), ConfigError);
  v.push_back(-0.3);
  CHECK_THROWS_AS(detect_switches(t, v, 0.0), ConfigError);
  CHECK_THROWS_AS(detect_switches(t, v, 0.3, 0.0), ConfigError);
}

TEST_CASE("predicted switching time matches direct first-passage sampling") {
  // Overdamped Langevin on the quartic with barrier height 4: the sampled
  // mean waiting time must agree with the formula to ~20%.
  const Scalar k = 2500, c = 0.04, d0 = 3e-3;
  const Scalar dt = 0.005;
  const QuarticSetup q = quartic(k, c, d0);
  const WellGeometry geom = well_geometry(q.pot, q.dd);
  const Scalar tau = kramers_time(geom);

  Rng rng = make_rng(906, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss;
  const Scalar amp = std::sqrt(2 * d0 * dt);
  Scalar v = std::sqrt(c);
  std::vector<Scalar> times, series;
  const long steps = 8000000;
  for (long s = 0; s < steps; ++s) {
    const Scalar grad = 4 * k * v * (v * v - c);
    v += -d0 * grad * dt + amp * gauss(rng);
    if (s % 20 == 0) {
      times.push_back(s * dt);
      series.push_back(v);
    }
  }
  const SwitchRecord rec = detect_switches(times, series, geom.v_min);
  REQUIRE(rec.waiting.size() > 80);
  Scalar mean = 0;
  for (Scalar w : rec.waiting) mean += w;
  mean /= static_cast<Scalar>(rec.waiting.size());
  CHECK(mean == doctest::Approx(tau).epsilon(0.20));
}

TEST_CASE("switching-time pipeline on the field model") {
  // Bimodal regime: the burst-estimated potential must resolve a double well
  // and a switching time on the calibrated scale.
  Vector grid(1);
  grid << 0.17;
  KramersConfig cfg;
  cfg.n_bursts = 200;
  cfg.seed = 21;
  const auto rows = tau_curve(TauParameter::adaptation_strength, grid,
                              ModelParams{}, NoiseSpec::white(1e-4), cfg);
  REQUIRE(rows.size() == 1);
  REQUIRE_FALSE(rows[0].failed);
  CHECK(rows[0].geom.v_min > 0.09);
  CHECK(rows[0].geom.v_min < 0.19);
  CHECK(rows[0].geom.d_bar > 0.8e-5);
  CHECK(rows[0].geom.d_bar < 3.5e-5);
  CHECK(rows[0].tau > 800.0);
  CHECK(rows[0].tau < 30000.0);
}
