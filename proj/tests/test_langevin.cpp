#include "nfield/langevin.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "nfield/errors.hpp"
#include "nfield/lifting.hpp"
#include "nfield/observables.hpp"
#include "nfield/rng.hpp"

using namespace nfield;

namespace {

// Exact Ornstein-Uhlenbeck transition for dv = -theta*v dt + sqrt(2 d) dW.
Scalar ou_step(Scalar v, Scalar theta, Scalar d, Scalar dt, Rng& rng) {
  std::normal_distribution<Scalar> gauss;
  const Scalar decay = std::exp(-theta * dt);
  const Scalar sd = std::sqrt(d / theta * (1 - decay * decay));
  return v * decay + sd * gauss(rng);
}

VSeries ou_series(Scalar theta, Scalar d, Scalar dt_sample, long n,
                  uint64_t seed) {
  Rng rng = make_rng(seed, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss(0.0, std::sqrt(d / theta));
  VSeries s;
  s.dt_sample = dt_sample;
  s.times.resize(n);
  s.v.resize(n);
  Scalar v = gauss(rng);  // stationary start
  for (long i = 0; i < n; ++i) {
    s.times[i] = i * dt_sample;
    s.v[i] = v;
    v = ou_step(v, theta, d, dt_sample, rng);
  }
  return s;
}

}  // namespace

TEST_CASE("moment arithmetic on a hand-computed sample") {
  const std::vector<Scalar> dv = {0.1, 0.2, 0.3, 0.4};
  const MomentEstimate m = moments_from_increments(dv, 2.0);
  CHECK(m.n == 4);
  CHECK(m.mu == doctest::Approx(0.125));
  CHECK(m.d == doctest::Approx(0.0125 / 4));             // pop. variance 0.0125
  CHECK(m.mu_se == doctest::Approx(std::sqrt(0.0125 / 4) / 2));
  CHECK(m.d_se == doctest::Approx(std::sqrt(2.5e-5) / 4));
}

TEST_CASE("identical increments mean zero diffusion") {
  const std::vector<Scalar> dv(50, 0.07);
  const MomentEstimate m = moments_from_increments(dv, 1.0);
  CHECK(m.mu == doctest::Approx(0.07));
  CHECK(m.d == 0.0);
  CHECK(m.mu_se == 0.0);
}

TEST_CASE("standard errors shrink like 1/sqrt(n)") {
  Rng rng = make_rng(12, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss(0.0, 0.1);
  std::vector<Scalar> small, big;
  for (int i = 0; i < 1000; ++i) small.push_back(gauss(rng));
  for (int i = 0; i < 16000; ++i) big.push_back(gauss(rng));
  const MomentEstimate a = moments_from_increments(small, 1.0);
  const MomentEstimate b = moments_from_increments(big, 1.0);
  CHECK(a.mu_se / b.mu_se == doctest::Approx(4.0).epsilon(0.15));
  CHECK(a.d_se / b.d_se == doctest::Approx(4.0).epsilon(0.20));
}

TEST_CASE("window validation rejects inconsistent shapes") {
  EstimationWindow w;
  CHECK_NOTHROW(w.validate());
  w.discard = 14;  // not < burst_duration
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.discard = 2;
  w.dt_est = 13;  // exceeds burst_duration - discard
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.dt_est = 2;
  w.burst_duration = 9;  // lag fitting needs 8 usable units
  w.discard = 2;
  w.lag_fit = true;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w.burst_duration = 10;
  CHECK_NOTHROW(w.validate());
}

TEST_CASE("weighted slope recovers an exact line") {
  Vector x(3), y(3), se(3);
  x << 1, 2, 3;
  y << 2, 4, 6;
  se << 1, 1, 1;
  const auto [slope, slope_se] = weighted_slope(x, y, se);
  CHECK(slope == doctest::Approx(2.0));
  CHECK(slope_se == doctest::Approx(std::sqrt(3.0 / 6.0)));
}

TEST_CASE("weighted slope downweights uncertain points") {
  Vector x(4), y(4), se(4);
  x << 1, 2, 3, 3;
  y << 2, 4, 6, 100;
  se << 1e-3, 1e-3, 1e-3, 1e6;
  const auto [slope, slope_se] = weighted_slope(x, y, se);
  CHECK(slope == doctest::Approx(2.0).epsilon(1e-6));
  (void)slope_se;
}

TEST_CASE("weighted slope rejects a degenerate abscissa") {
  Vector x = Vector::Constant(3, 1.0), y(3), se = Vector::Ones(3);
  y << 1, 2, 3;
  CHECK_THROWS_AS(weighted_slope(x, y, se), EstimationError);
}

TEST_CASE("lag combination in single-lag and fit modes") {
  EstimationWindow w;
  w.burst_duration = 10;
  w.discard = 0;
  w.dt_est = 2;

  SUBCASE("list count must match the mode") {
    CHECK_THROWS_AS(combine_lag_increments({{0.1, 0.2}, {0.2, 0.4}}, w),
                    ConfigError);
    w.lag_fit = true;
    CHECK_THROWS_AS(combine_lag_increments({{0.1, 0.2}}, w), ConfigError);
  }

  SUBCASE("single lag reduces to the plain moments") {
    const std::vector<Scalar> dv = {0.1, 0.2, 0.3, 0.4};
    const MomentEstimate direct = moments_from_increments(dv, 2.0);
    const MomentEstimate via = combine_lag_increments({dv}, w);
    CHECK(via.mu == doctest::Approx(direct.mu));
    CHECK(via.d == doctest::Approx(direct.d));
  }

  SUBCASE("lag fit recovers exactly linear moments") {
    // Zero drift with pop. variance 2*D*L per lag: the second-moment slope
    // halves back to D, the first-moment slope vanishes.
    w.lag_fit = true;
    const Scalar d_true = 0.015;
    std::vector<std::vector<Scalar>> per_lag;
    for (Scalar lag : EstimationWindow::kFitLags) {
      const Scalar s = std::sqrt(2 * d_true * lag);
      per_lag.push_back({-s, s});
    }
    const MomentEstimate m = combine_lag_increments(per_lag, w);
    CHECK(m.mu == doctest::Approx(0.0));
    CHECK(m.d == doctest::Approx(d_true).epsilon(1e-9));
  }

  SUBCASE("lag fit recovers an exactly linear drift") {
    w.lag_fit = true;
    const Scalar mu_true = 0.03;
    std::vector<std::vector<Scalar>> per_lag;
    for (Scalar lag : EstimationWindow::kFitLags) {
      per_lag.push_back({mu_true * lag, mu_true * lag});
    }
    const MomentEstimate m = combine_lag_increments(per_lag, w);
    CHECK(m.mu == doctest::Approx(mu_true).epsilon(1e-9));
  }
}

TEST_CASE("database estimator recovers the OU law") {
  // Exact-transition series, so the only oracle inputs are theta and d. At
  // lag L the conditional moments are known in closed form; the tolerances
  // cover sampling noise only.
  const Scalar theta = 0.2, d_true = 0.02;
  const Scalar dt_sample = 0.05, lag = 0.25;
  const VSeries series = ou_series(theta, d_true, dt_sample, 400001, 2024);

  EstimationWindow w;
  w.burst_duration = lag;
  w.dt_est = lag;
  w.discard = 0;
  Vector grid(7);
  grid << -0.3, -0.2, -0.1, 0.0, 0.1, 0.2, 0.3;
  const DriftDiffusionCurve curve =
      estimate_database(series, grid, w, 0.05, 100);

  for (Index j = 0; j < grid.size(); ++j) {
    REQUIRE_FALSE(curve.missing[j]);
    CHECK(curve.n_samples[j] > 1000);
  }
  const auto [slope, slope_se] = weighted_slope(curve.v_grid, curve.mu,
                                                curve.mu_se);
  const Scalar slope_exact = (std::exp(-theta * lag) - 1) / lag;
  CHECK(slope == doctest::Approx(slope_exact).epsilon(0.08));
  CHECK(slope == doctest::Approx(-theta).epsilon(0.10));
  CHECK(std::abs(slope - slope_exact) < 3 * slope_se);

  const Scalar d_exact =
      d_true * (1 - std::exp(-2 * theta * lag)) / (2 * theta * lag);
  for (Index j = 0; j < grid.size(); ++j) {
    CHECK(curve.d[j] == doctest::Approx(d_exact).epsilon(0.10));
  }
}

TEST_CASE("database bases respect the separation rule") {
  // Constant series: every sample lands in the one bin, but occurrences
  // closer than burst_duration are skipped.
  VSeries s;
  s.dt_sample = 0.1;
  for (int i = 0; i <= 100; ++i) {
    s.times.push_back(0.1 * i);
    s.v.push_back(0.0);
  }
  EstimationWindow w;
  w.burst_duration = 1.0;
  w.dt_est = 0.1;
  w.discard = 0;
  Vector grid(1);
  grid << 0.0;
  const DriftDiffusionCurve c = estimate_database(s, grid, w, 0.01, 1);
  CHECK(c.n_samples[0] == 10);
  CHECK(c.mu[0] == 0.0);
  CHECK(c.d[0] == 0.0);
}

TEST_CASE("database increments wrap across the branch cut") {
  VSeries s;
  s.dt_sample = 1.0;
  s.times = {0.0, 1.0, 2.0, 3.0};
  s.v = {3.1, -3.1, 3.1, -3.1};
  EstimationWindow w;
  w.burst_duration = 1.0;
  w.dt_est = 1.0;
  w.discard = 0;
  Vector grid(1);
  grid << 3.1;
  const DriftDiffusionCurve c = estimate_database(s, grid, w, 0.01, 2);
  REQUIRE(c.n_samples[0] == 2);
  CHECK(c.mu[0] == doctest::Approx(wrap_angle(-6.2)).epsilon(1e-12));
  CHECK(c.d[0] == 0.0);
}

TEST_CASE("sparse bins are flagged missing and trimmed to the main run") {
  const VSeries series = ou_series(0.2, 0.02, 0.05, 20001, 7);
  EstimationWindow w;
  w.burst_duration = 0.25;
  w.dt_est = 0.25;
  w.discard = 0;
  Vector grid(4);
  grid << -0.2, 0.0, 0.2, 5.0;  // last bin is never visited
  const DriftDiffusionCurve c = estimate_database(series, grid, w, 0.05, 20);
  CHECK_FALSE(c.missing[0]);
  CHECK(c.missing[3]);
  CHECK(std::isnan(c.mu[3]));
  const DriftDiffusionCurve run = c.occupied_run();
  CHECK(run.v_grid.size() == 3);
  CHECK(run.v_grid[2] == doctest::Approx(0.2));
}

TEST_CASE("burst estimator on the field model: noiseless bursts") {
  ModelParams p;
  const ReferenceBump ref = make_reference(p);
  EstimationWindow w;
  w.burst_duration = 2;
  w.dt_est = 2;
  w.discard = 0;
  const MomentEstimate m = estimate_burst(0.1, 4, w, p, NoiseSpec::white(0.0),
                                          ref, 99, 0, 1, 0.05);
  CHECK(m.n == 4);
  CHECK(m.d == 0.0);  // identical deterministic increments
  CHECK(m.dropped == 0);
  // Drift toward the stable coarse value is positive at v = 0.1.
  CHECK(m.mu > 0.0);
  CHECK(m.mu < 5e-3);
}

TEST_CASE("burst estimator diffusion tracks the forcing intensity") {
  ModelParams p;
  const ReferenceBump ref = make_reference(p);
  EstimationWindow w;
  w.burst_duration = 2;
  w.dt_est = 2;
  w.discard = 0;
  const MomentEstimate m = estimate_burst(
      0.1, 200, w, p, NoiseSpec::white(1e-4), ref, 41, 0, 1, 0.05);
  CHECK(m.n == 200);
  // Calibrated effective diffusion of the coarse variable at eta = 1e-4.
  CHECK(m.d == doctest::Approx(1.72e-5).epsilon(0.35));
  CHECK(std::abs(m.mu) < 1.5e-3);
}

TEST_CASE("burst estimates are worker-count invariant") {
  ModelParams p;
  const ReferenceBump ref = make_reference(p);
  EstimationWindow w;
  w.burst_duration = 2;
  w.dt_est = 2;
  w.discard = 0;
  const NoiseSpec spec = NoiseSpec::white(1e-4);
  const MomentEstimate a = estimate_burst(0.1, 16, w, p, spec, ref, 7, 0, 1);
  const MomentEstimate b = estimate_burst(0.1, 16, w, p, spec, ref, 7, 0, 3);
  CHECK(a.mu == b.mu);
  CHECK(a.d == b.d);
}

TEST_CASE("potential integral inverts an exact linear-drift model") {
  // mu = -k v, D const: beta*Phi = k v^2 / (2 D) + log D + const, and the
  // trapezoid rule is exact for the linear integrand.
  const Scalar k = 2.0, d0 = 0.5;
  const int n = 41;
  DriftDiffusionCurve c;
  c.v_grid.resize(n);
  c.mu.resize(n);
  c.mu_se = Vector::Ones(n);
  c.d = Vector::Constant(n, d0);
  c.d_se = Vector::Ones(n);
  c.n_samples.assign(n, 1000);
  c.missing.assign(n, 0);
  for (int j = 0; j < n; ++j) {
    c.v_grid[j] = -1.0 + 0.05 * j;
    c.mu[j] = -k * c.v_grid[j];
  }
  const PotentialCurve pot = potential_fp_integral(c);
  REQUIRE(pot.v_grid.size() == n);
  CHECK(pot.g.minCoeff() == 0.0);
  for (int j = 0; j < n; ++j) {
    const Scalar expected = k * c.v_grid[j] * c.v_grid[j] / (2 * d0);
    CHECK(pot.g[j] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("potential integral keeps the state-dependent diffusion term") {
  // With D(v) varying, beta*Phi picks up log D; compare against quadrature
  // of the closed-form integrand on a fine grid.
  const int n = 201;
  DriftDiffusionCurve c;
  c.v_grid.resize(n);
  c.mu.resize(n);
  c.mu_se = Vector::Ones(n);
  c.d.resize(n);
  c.d_se = Vector::Ones(n);
  c.n_samples.assign(n, 1000);
  c.missing.assign(n, 0);
  auto d_of = [](Scalar v) { return 0.5 + 0.2 * v * v; };
  for (int j = 0; j < n; ++j) {
    const Scalar v = -1.0 + 0.01 * j;
    c.v_grid[j] = v;
    c.mu[j] = -v;
    c.d[j] = d_of(v);
  }
  const PotentialCurve pot = potential_fp_integral(c);
  auto exact = [&](Scalar v) {
    // integral of v/D from 0 to v = log(D(v)/D(0)) / 0.4
    return std::log(d_of(v) / d_of(0)) / 0.4 + std::log(d_of(v));
  };
  Scalar offset = 1e30;
  for (int j = 0; j < n; ++j) offset = std::min(offset, exact(c.v_grid[j]));
  for (int j = 0; j < n; j += 20) {
    CHECK(pot.g[j] == doctest::Approx(exact(c.v_grid[j]) - offset)
                          .epsilon(1e-4));
  }
}

TEST_CASE("potential integral rejects nonpositive diffusion") {
  DriftDiffusionCurve c;
  c.v_grid = Vector::LinSpaced(5, -0.2, 0.2);
  c.mu = Vector::Zero(5);
  c.mu_se = Vector::Ones(5);
  c.d = Vector::Constant(5, 0.1);
  c.d_se = Vector::Ones(5);
  c.n_samples.assign(5, 100);
  c.missing.assign(5, 0);
  c.d[2] = 0.0;
  CHECK_THROWS_WITH_AS(potential_fp_integral(c),
                       doctest::Contains("nonpositive diffusion"),
                       EstimationError);
}

TEST_CASE("histogram potential inverts a Gaussian density") {
  const Scalar sigma = 0.3;
  Rng rng = make_rng(300, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss(0.0, sigma);
  std::vector<Scalar> samples(200000);
  for (auto& s : samples) s = gauss(rng);
  const PotentialCurve pot = potential_histogram(samples, 61);
  REQUIRE(pot.v_grid.size() == 61);

  // Compare to v^2/(2 sigma^2) over the well-populated core, both curves
  // zeroed at their own minimum over that set.
  std::vector<int> core;
  for (int b = 0; b < 61; ++b) {
    if (!pot.missing[b] && std::abs(pot.v_grid[b]) < 2 * sigma) core.push_back(b);
  }
  REQUIRE(core.size() > 10);
  Scalar ref_min = 1e30;
  for (int b : core) {
    ref_min = std::min(ref_min, pot.v_grid[b] * pot.v_grid[b] / (2 * sigma * sigma));
  }
  for (int b : core) {
    const Scalar expected =
        pot.v_grid[b] * pot.v_grid[b] / (2 * sigma * sigma) - ref_min;
    CHECK(std::abs(pot.g[b] - expected) < 0.08);
  }
}

TEST_CASE("histogram potential input validation") {
  std::vector<Scalar> tiny(100, 0.5);
  CHECK_THROWS_AS(potential_histogram(tiny, 10), EstimationError);
  std::vector<Scalar> flat(20000, 0.5);
  CHECK_THROWS_AS(potential_histogram(flat, 10), EstimationError);
  std::vector<Scalar> ok(20000);
  Rng rng = make_rng(1, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss;
  for (auto& s : ok) s = gauss(rng);
  CHECK_THROWS_AS(potential_histogram(ok, 1), ConfigError);
}
