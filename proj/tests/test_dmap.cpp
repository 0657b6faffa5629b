#include "nfield/dmap.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "doctest.h"
#include "nfield/errors.hpp"
#include "nfield/lifting.hpp"
#include "nfield/model.hpp"
#include "nfield/rng.hpp"

using namespace nfield;

namespace {

// A one-parameter family of states: reference bump with its adaptation
// rotated so the coarse value sweeps an interval. Deterministic.
std::vector<FieldState> lifted_family(const ReferenceBump& ref, int n,
                                      Scalar lo, Scalar hi,
                                      std::vector<Scalar>* v_out) {
  std::vector<FieldState> traj;
  traj.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Scalar v = lo + (hi - lo) * i / (n - 1);
    traj.push_back(lift_v(v, ref));
    if (v_out) v_out->push_back(v);
  }
  return traj;
}

const ReferenceBump& shared_reference() {
  static const ReferenceBump ref = make_reference(ModelParams{});
  return ref;
}

}  // namespace

TEST_CASE("kernel matrix has unit diagonal and e^-1 at distance sigma") {
  Matrix data(2, 2);
  data << 0, 0, 0.7, 0;
  const Matrix K = kernel_matrix(data, 0.7);
  CHECK(K(0, 0) == 1.0);
  CHECK(K(1, 1) == 1.0);
  CHECK(K(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(K(1, 0) == doctest::Approx(K(0, 1)).epsilon(1e-12));
  CHECK_THROWS_AS(kernel_matrix(data, 0.0), ConfigError);
}

TEST_CASE("markov normalization of a 2x2 kernel in closed form") {
  const Scalar k = 0.4;
  Matrix K(2, 2);
  K << 1, k, k, 1;
  const MarkovParts parts = markov_normalize(K);
  CHECK(parts.degrees[0] == doctest::Approx(1 + k));
  CHECK(parts.markov.row(0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(parts.markov.row(1).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(parts.markov(0, 1) == doctest::Approx(k / (1 + k)));
  CHECK(parts.sym(0, 1) == doctest::Approx(k / (1 + k)));

  DiffusionMapModel model;
  spectral_decompose(parts.sym, parts.degrees, 1, model);
  CHECK(model.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.eigenvalues[1] == doctest::Approx((1 - k) / (1 + k)));
  CHECK(model.phi(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(model.phi(1, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("markov rows of a random kernel sum to one") {
  Rng rng = make_rng(61, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss;
  Matrix data(30, 4);
  for (Index i = 0; i < 30; ++i) {
    for (Index j = 0; j < 4; ++j) data(i, j) = gauss(rng);
  }
  const MarkovParts parts = markov_normalize(kernel_matrix(data, 2.0));
  for (Index i = 0; i < 30; ++i) {
    CHECK(parts.markov.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("two well-separated clusters split by the sign of phi2") {
  Rng rng = make_rng(62, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss(0.0, 0.05);
  Matrix data(12, 2);
  for (Index i = 0; i < 12; ++i) {
    const Scalar cx = i < 6 ? 0.0 : 2.0;
    data(i, 0) = cx + gauss(rng);
    data(i, 1) = gauss(rng);
  }
  const MarkovParts parts = markov_normalize(kernel_matrix(data, 1.0));
  DiffusionMapModel model;
  spectral_decompose(parts.sym, parts.degrees, 2, model);
  const Scalar s0 = model.phi(0, 1) > 0 ? 1.0 : -1.0;
  for (Index i = 0; i < 6; ++i) CHECK(model.phi(i, 1) * s0 > 0);
  for (Index i = 6; i < 12; ++i) CHECK(model.phi(i, 1) * s0 < 0);
}

TEST_CASE("preprocessing is invariant under rigid rotation") {
  const ReferenceBump& ref = shared_reference();
  FieldState s;
  s.u = ref.u_ref;
  s.a = ref.a_ref;
  FieldState rotated;
  rotated.u = circshift(s.u, 13);
  rotated.a = circshift(s.a, 13);
  SnapshotNorm n1, n2;
  const Vector ru = ref.u_ref / ref.u_ref.maxCoeff();
  const Vector r1 = preprocess_one(s, ru, &n1);
  const Vector r2 = preprocess_one(rotated, ru, &n2);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(n1.u_scale == doctest::Approx(n2.u_scale));
  CHECK(((n2.shift - n1.shift) % ref.u_ref.size() + ref.u_ref.size()) %
            ref.u_ref.size() ==
        (ref.u_ref.size() - 13) % ref.u_ref.size());
}

TEST_CASE("preprocessing records an invertible normalization") {
  const ReferenceBump& ref = shared_reference();
  const FieldState s = lift_v(0.2, ref);
  SnapshotNorm norm;
  const Vector ru = ref.u_ref / ref.u_ref.maxCoeff();
  const Vector row = preprocess_one(s, ru, &norm);
  const Index m = s.u.size();
  CHECK(norm.u_scale == doctest::Approx(s.u.maxCoeff()));
  const Vector u_back = circshift(row.head(m), -norm.shift) * norm.u_scale;
  const Vector a_back = circshift(row.tail(m), -norm.shift) * norm.a_scale;
  CHECK((u_back - s.u).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a_back - s.a).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("model building on a coarse-variable family") {
  const ReferenceBump& ref = shared_reference();
  std::vector<Scalar> v;
  const auto traj = lifted_family(ref, 240, -0.3, 0.3, &v);
  const DiffusionMapModel model = build_model(traj, v);

  CHECK(model.size() == 240);
  CHECK(model.k == 5);
  CHECK(model.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-9));
  for (Index j = 1; j < model.eigenvalues.size(); ++j) {
    CHECK(model.eigenvalues[j] <= model.eigenvalues[j - 1] + 1e-12);
    CHECK(model.eigenvalues[j] < 1.0);
  }
  CHECK((model.phi.col(0).array() - 1.0).abs().maxCoeff() < 1e-6);

  // Orientation convention: phi2 increases with the coarse variable.
  const Vector vvec = Eigen::Map<const Vector>(v.data(), v.size());
  CHECK(spearman_rho(model.phi.col(1), vvec) > 0.99);

  SUBCASE("restriction reproduces every training coordinate") {
    const Matrix phi_new = restrict_rows(model.data, model);
    Scalar worst = 0;
    for (Index i = 0; i < model.size(); ++i) {
      for (int j = 1; j <= model.k; ++j) {
        worst = std::max(worst, std::abs(phi_new(i, j - 1) - model.phi(i, j)));
      }
    }
    CHECK(worst < 1e-8);

    const RestrictResult one = nystrom_restrict(model.data.row(7), model);
    CHECK_FALSE(one.out_of_sample);
    for (int j = 1; j <= model.k; ++j) {
      CHECK(one.phi[j - 1] == doctest::Approx(model.phi(7, j)).epsilon(1e-8));
    }
  }

  SUBCASE("distant inputs are flagged out of sample") {
    Vector far = model.data.row(0);
    far[0] += 4.0 * model.sigma;
    const RestrictResult r = nystrom_restrict(far, model);
    CHECK(r.out_of_sample);
    CHECK(r.kernel_mass < std::exp(-9.0));
  }

  SUBCASE("bandwidth policy scales with the configured factor") {
    BuildOptions narrow, wide;
    narrow.sigma_scale = 0.5;
    wide.sigma_scale = 1.0;
    const DiffusionMapModel a = build_model(traj, v, narrow);
    const DiffusionMapModel b = build_model(traj, v, wide);
    CHECK(b.sigma == doctest::Approx(2.0 * a.sigma).epsilon(1e-12));
    BuildOptions fixed;
    fixed.sigma_override = 0.77;
    CHECK(build_model(traj, v, fixed).sigma == 0.77);
  }

  SUBCASE("binary save/load round trip is exact") {
    const char* path = "dmap_roundtrip_test.bin";
    save_model(model, path);
    const DiffusionMapModel back = load_model(path);
    std::remove(path);
    CHECK(back.sigma == model.sigma);
    CHECK(back.k == model.k);
    CHECK((back.data - model.data).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.psi - model.psi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.phi - model.phi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.eigenvalues - model.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.reference_u - model.reference_u).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.norms.size() == model.norms.size());
    CHECK(back.norms[5].shift == model.norms[5].shift);
    CHECK(back.norms[5].u_scale == model.norms[5].u_scale);
    REQUIRE(back.v.size() == model.v.size());
    CHECK(back.v[11] == model.v[11]);
  }
}

TEST_CASE("oversized trajectories are uniformly subsampled") {
  const ReferenceBump& ref = shared_reference();
  std::vector<Scalar> v;
  const auto traj = lifted_family(ref, 500, -0.3, 0.3, &v);
  BuildOptions opts;
  opts.max_dense = 250;
  const DiffusionMapModel model = build_model(traj, v, opts);
  CHECK(model.size() == 250);
  CHECK(model.v.front() == doctest::Approx(v.front()));
}

TEST_CASE("model building input validation") {
  const ReferenceBump& ref = shared_reference();
  std::vector<Scalar> v;
  const auto tiny = lifted_family(ref, 100, -0.2, 0.2, &v);
  CHECK_THROWS_AS(build_model(tiny, v), ConfigError);
  std::vector<Scalar> v2;
  const auto traj = lifted_family(ref, 240, -0.2, 0.2, &v2);
  v2.pop_back();
  CHECK_THROWS_AS(build_model(traj, v2), ConfigError);
}

TEST_CASE("curve collapse ratio separates curves from blobs") {
  Rng rng = make_rng(63, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss;
  const int n = 400;
  Vector t(n), curve3(n), blob2(n), blob3(n);
  for (int i = 0; i < n; ++i) {
    t[i] = -1.0 + 2.0 * i / (n - 1);
    curve3[i] = t[i] * t[i] + 0.01 * gauss(rng);
    blob2[i] = gauss(rng);
    blob3[i] = gauss(rng);
  }
  // The equal-count polyline absorbs some blob variance, so the contrast is
  // between scales, not order one: tight curve ~1e-4, blob ~3e-2 here.
  const Scalar on_curve = curve_collapse_ratio(t, curve3);
  const Scalar on_blob = curve_collapse_ratio(blob2, blob3);
  CHECK(on_curve < 1e-3);
  CHECK(on_blob > 0.01);
  CHECK(on_blob > 50 * on_curve);
  CHECK_THROWS_AS(curve_collapse_ratio(t.head(10), curve3.head(10)),
                  ConfigError);
}

TEST_CASE("spearman correlation with ties and monotone maps") {
  Vector x(4), y(4);
  x << 1, 2, 2, 3;
  y << 1, 4, 4, 9;
  CHECK(spearman_rho(x, y) == doctest::Approx(1.0));
  CHECK(spearman_rho(x, -y) == doctest::Approx(-1.0));

  // Monotone nonlinear map preserves ranks exactly.
  Rng rng = make_rng(64, StreamTag::oracle);
  std::normal_distribution<Scalar> gauss;
  Vector a(100), b(100), c(100);
  for (int i = 0; i < 100; ++i) {
    a[i] = gauss(rng);
    b[i] = std::exp(2 * a[i]);
    c[i] = gauss(rng);
  }
  CHECK(spearman_rho(a, b) == doctest::Approx(1.0));
  CHECK(std::abs(spearman_rho(a, c)) < 0.3);
  CHECK_THROWS_AS(spearman_rho(a.head(2), b.head(2)), ConfigError);
}
