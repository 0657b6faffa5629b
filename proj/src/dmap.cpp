#include "nfield/dmap.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "nfield/errors.hpp"

namespace nfield {
namespace {

constexpr uint64_t kModelMagic = 0x4e46444d41503031ull;  // "NFDMAP01"

Scalar pearson(const Vector& x, const Vector& y) {
  const Scalar mx = x.mean(), my = y.mean();
  const Vector cx = x.array() - mx, cy = y.array() - my;
  const Scalar den = std::sqrt(cx.squaredNorm() * cy.squaredNorm());
  if (den == 0) return 0;
  return cx.dot(cy) / den;
}

// Squared distances between rows of A and rows of B via the Gram expansion.
Matrix row_sqdist(const Matrix& A, const Matrix& B) {
  const Vector ra = A.rowwise().squaredNorm();
  const Vector rb = B.rowwise().squaredNorm();
  Matrix out = -2.0 * (A * B.transpose());
  out.colwise() += ra;
  out.rowwise() += rb.transpose();
  return out.cwiseMax(0.0);
}

Vector ranks(const Vector& x) {
  const Index n = x.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return x[a] < x[b]; });
  Vector r(n);
  Index i = 0;
  while (i < n) {
    Index j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const Scalar avg = 0.5 * static_cast<Scalar>(i + j) + 1.0;
    for (Index t = i; t <= j; ++t) r[order[t]] = avg;
    i = j + 1;
  }
  return r;
}

void fix_column_signs(DiffusionMapModel& model) {
  // Nontrivial eigenvector signs are arbitrary; make them reproducible by
  // pointing the largest-magnitude entry positive.
  for (Index j = 1; j < model.phi.cols(); ++j) {
    Index arg = 0;
    model.phi.col(j).cwiseAbs().maxCoeff(&arg);
    if (model.phi(arg, j) < 0) {
      model.phi.col(j) *= -1;
      model.psi.col(j) *= -1;
    }
  }
}

}  // namespace

Vector preprocess_one(const FieldState& state, const Vector& reference_u,
                      SnapshotNorm* norm) {
  const Index m = state.u.size();
  if (reference_u.size() != m) throw ConfigError("alignment reference has wrong length");
  Index i_max = 0;
  const Scalar u_max = state.u.maxCoeff(&i_max);
  if (!(u_max > 0)) throw DegenerateProfile("snapshot u maximum is not positive");
  const Scalar a_val = state.a[i_max];
  if (a_val == 0) throw DegenerateProfile("snapshot a vanishes at the u peak");
  const Vector un = state.u / u_max;
  const Vector an = state.a / a_val;

  // err(s) compares un[i] against ref[i+s], which is exactly the misfit of
  // circshift(un, s) against ref, so the minimizer is the shift to apply.
  int k = 0;
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (int s = 0; s < m; ++s) {
    Scalar err = 0;
    for (Index i = 0; i < m; ++i) {
      const Scalar dlt = un[i] - reference_u[(i + s) % m];
      err += dlt * dlt;
    }
    if (err < best) {
      best = err;
      k = s;
    }
  }

  if (norm) {
    norm->u_scale = u_max;
    norm->a_scale = a_val;
    norm->shift = k;
  }
  Vector row(2 * m);
  row.head(m) = circshift(un, k);
  row.tail(m) = circshift(an, k);
  return row;
}

SnapshotSet preprocess(const std::vector<FieldState>& raw,
                       const Vector* reference_u) {
  if (raw.empty()) throw ConfigError("no snapshots to preprocess");
  const Index m = raw.front().u.size();
  SnapshotSet set;
  if (reference_u) {
    set.reference_u = *reference_u;
  } else {
    Index i_max = 0;
    const Scalar u_max = raw.front().u.maxCoeff(&i_max);
    if (!(u_max > 0)) throw DegenerateProfile("reference snapshot u maximum is not positive");
    set.reference_u = raw.front().u / u_max;
  }
  set.data.resize(static_cast<Index>(raw.size()), 2 * m);
  set.norms.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    set.data.row(static_cast<Index>(i)) =
        preprocess_one(raw[i], set.reference_u, &set.norms[i]).transpose();
  }
  return set;
}

Matrix kernel_matrix(const Matrix& data, Scalar sigma) {
  if (!(sigma > 0)) throw ConfigError("sigma: must be > 0");
  Matrix K = row_sqdist(data, data);
  K = (-K / (sigma * sigma)).array().exp();
  K.diagonal().setOnes();
  return K;
}

MarkovParts markov_normalize(const Matrix& kernel) {
  MarkovParts parts;
  parts.degrees = kernel.rowwise().sum();
  for (Index i = 0; i < parts.degrees.size(); ++i) {
    if (!(parts.degrees[i] > 0)) throw EstimationError("isolated point: zero kernel degree");
  }
  parts.markov = parts.degrees.cwiseInverse().asDiagonal() * kernel;
  const Vector isd = parts.degrees.cwiseSqrt().cwiseInverse();
  parts.sym = isd.asDiagonal() * kernel * isd.asDiagonal();
  return parts;
}

void spectral_decompose(const Matrix& sym, const Vector& degrees, int k,
                        DiffusionMapModel& model) {
  const Index n = sym.rows();
  if (k < 1 || k + 1 > n) throw ConfigError("k: need 1 <= k < N");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw EstimationError("eigensolver failed to converge");
  }
  model.degrees = degrees;
  model.k = k;
  model.eigenvalues.resize(k + 1);
  model.psi.resize(n, k + 1);
  for (int j = 0; j <= k; ++j) {
    model.eigenvalues[j] = solver.eigenvalues()[n - 1 - j];
    model.psi.col(j) = solver.eigenvectors().col(n - 1 - j);
  }
  if (std::abs(model.eigenvalues[0] - 1.0) > 1e-4) {
    throw EstimationError("leading eigenvalue is far from 1; kernel is not a valid Markov graph");
  }
  const Vector isd = degrees.cwiseSqrt().cwiseInverse();
  model.phi.resize(n, k + 1);
  for (int j = 0; j <= k; ++j) model.phi.col(j) = isd.cwiseProduct(model.psi.col(j));
  Scalar c = model.phi.col(0).mean();
  if (c < 0) {
    model.psi.col(0) *= -1;
    model.phi.col(0) *= -1;
    c = -c;
  }
  if (!(c > 0)) throw EstimationError("degenerate leading eigenvector");
  model.phi /= c;
  if ((model.phi.col(0).array() - 1.0).abs().maxCoeff() > 1e-6) {
    throw EstimationError("leading Markov eigenvector is not constant; kernel graph may be disconnected");
  }
  fix_column_signs(model);
}

DiffusionMapModel build_model(const std::vector<FieldState>& traj,
                              const std::vector<Scalar>& v,
                              const BuildOptions& opts) {
  if (traj.size() < 200) throw ConfigError("build_model: need at least 200 snapshots");
  if (traj.size() != v.size()) throw ConfigError("build_model: V series length mismatch");

  std::vector<FieldState> subset;
  std::vector<Scalar> vsub;
  const Index n0 = static_cast<Index>(traj.size());
  if (n0 > opts.max_dense) {
    const Index stride = (n0 + opts.max_dense - 1) / opts.max_dense;
    for (Index i = 0; i < n0; i += stride) {
      subset.push_back(traj[i]);
      vsub.push_back(v[i]);
    }
  } else {
    subset = traj;
    vsub = v;
  }

  SnapshotSet set = preprocess(subset);
  DiffusionMapModel model;
  model.data = std::move(set.data);
  model.reference_u = std::move(set.reference_u);
  model.norms = std::move(set.norms);
  model.v = std::move(vsub);

  Matrix work = row_sqdist(model.data, model.data);
  if (opts.sigma_override > 0) {
    model.sigma = opts.sigma_override;
  } else {
    const Index n = work.rows();
    std::vector<Scalar> dists;
    dists.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) dists.push_back(work(i, j));
    }
    auto mid = dists.begin() + dists.size() / 2;
    std::nth_element(dists.begin(), mid, dists.end());
    model.sigma = opts.sigma_scale * std::sqrt(*mid);
    if (!(model.sigma > 0)) throw EstimationError("degenerate dataset: zero median distance");
  }

  // kernel and its symmetric normalization, reusing the distance buffer
  work = (-work / (model.sigma * model.sigma)).array().exp();
  work.diagonal().setOnes();
  Vector degrees = work.rowwise().sum();
  const Vector isd = degrees.cwiseSqrt().cwiseInverse();
  for (Index j = 0; j < work.cols(); ++j) {
    work.col(j) = work.col(j).cwiseProduct(isd) * isd[j];
  }
  spectral_decompose(work, degrees, opts.k, model);

  // Orient phi_2 along the coarse variable so runs are comparable.
  const Vector vvec = Eigen::Map<const Vector>(model.v.data(), model.v.size());
  if (pearson(model.phi.col(1), vvec) < 0) {
    model.phi.col(1) *= -1;
    model.psi.col(1) *= -1;
  }
  return model;
}

RestrictResult nystrom_restrict(const Vector& x_new,
                                const DiffusionMapModel& model) {
  if (x_new.size() != model.data.cols()) {
    throw ConfigError("restriction input has wrong dimension");
  }
  const Index n = model.size();
  Vector kr(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar d2 = (x_new.transpose() - model.data.row(i)).squaredNorm();
    kr[i] = std::exp(-d2 / (model.sigma * model.sigma));
  }
  const Scalar s = kr.sum();
  RestrictResult out;
  out.kernel_mass = s / n;
  out.out_of_sample = kr.maxCoeff() < std::exp(-9.0);
  if (!(s > 0)) throw EstimationError("kernel row vanished; input is far outside the dataset");

  const Vector w = kr.cwiseQuotient(model.degrees.cwiseSqrt()) / std::sqrt(s);
  Vector psi_new = model.psi.transpose() * w;
  for (int j = 0; j <= model.k; ++j) {
    const Scalar lam = model.eigenvalues[j];
    psi_new[j] = std::abs(lam) > 1e-12 ? psi_new[j] / lam : 0.0;
  }
  if (psi_new[0] == 0) throw EstimationError("trivial eigencoordinate vanished in restriction");
  out.phi.resize(model.k);
  for (int j = 1; j <= model.k; ++j) out.phi[j - 1] = psi_new[j] / psi_new[0];
  return out;
}

Matrix restrict_rows(const Matrix& x_new, const DiffusionMapModel& model) {
  if (x_new.cols() != model.data.cols()) {
    throw ConfigError("restriction input has wrong dimension");
  }
  const Index n = x_new.rows();
  Matrix out(n, model.k);
  const Vector isd = model.degrees.cwiseSqrt().cwiseInverse();
  const Index chunk = 1024;
  for (Index lo = 0; lo < n; lo += chunk) {
    const Index len = std::min(chunk, n - lo);
    Matrix kr = row_sqdist(x_new.middleRows(lo, len), model.data);
    kr = (-kr / (model.sigma * model.sigma)).array().exp();
    const Vector s = kr.rowwise().sum();
    Matrix psi_new = (kr * isd.asDiagonal()) * model.psi;  // len x (k+1)
    for (Index r = 0; r < len; ++r) {
      if (!(s[r] > 0)) throw EstimationError("kernel row vanished; input is far outside the dataset");
      for (int j = 0; j <= model.k; ++j) {
        const Scalar lam = model.eigenvalues[j];
        psi_new(r, j) = std::abs(lam) > 1e-12 ? psi_new(r, j) / (lam * std::sqrt(s[r])) : 0.0;
      }
      for (int j = 1; j <= model.k; ++j) out(lo + r, j - 1) = psi_new(r, j) / psi_new(r, 0);
    }
  }
  return out;
}

Scalar curve_collapse_ratio(const Vector& phi2, const Vector& phi3, int bins) {
  const Index n = phi2.size();
  if (n != phi3.size() || n < 20) throw ConfigError("curve metric needs matched series of >= 20 points");
  bins = std::max(2, std::min<int>(bins, static_cast<int>(n / 5)));

  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return phi2[a] < phi2[b]; });

  // polyline nodes: equal-count bins along phi2
  Matrix nodes(bins, 2);
  for (int b = 0; b < bins; ++b) {
    const Index lo = n * b / bins, hi = n * (b + 1) / bins;
    Scalar sx = 0, sy = 0;
    for (Index i = lo; i < hi; ++i) {
      sx += phi2[order[i]];
      sy += phi3[order[i]];
    }
    nodes(b, 0) = sx / (hi - lo);
    nodes(b, 1) = sy / (hi - lo);
  }
  Vector node_s(bins);
  node_s[0] = 0;
  for (int b = 1; b < bins; ++b) {
    node_s[b] = node_s[b - 1] + (nodes.row(b) - nodes.row(b - 1)).norm();
  }

  Vector along(n), across(n);
  for (Index i = 0; i < n; ++i) {
    const Eigen::RowVector2d p(phi2[i], phi3[i]);
    Scalar best_d2 = std::numeric_limits<Scalar>::infinity();
    Scalar best_s = 0;
    for (int b = 0; b + 1 < bins; ++b) {
      const Eigen::RowVector2d a = nodes.row(b), d = nodes.row(b + 1) - nodes.row(b);
      const Scalar len2 = d.squaredNorm();
      Scalar t = len2 > 0 ? (p - a).dot(d) / len2 : 0.0;
      t = std::clamp<Scalar>(t, 0, 1);
      const Scalar d2 = (p - (a + t * d)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best_s = node_s[b] + t * std::sqrt(len2);
      }
    }
    across[i] = std::sqrt(best_d2);
    along[i] = best_s;
  }
  const Scalar var_along =
      (along.array() - along.mean()).square().sum() / n;
  if (!(var_along > 0)) throw EstimationError("degenerate point cloud in curve metric");
  const Scalar ms_across = across.squaredNorm() / n;
  return ms_across / var_along;
}

Scalar spearman_rho(const Vector& x, const Vector& y) {
  if (x.size() != y.size() || x.size() < 3) throw ConfigError("spearman needs matched series of >= 3 points");
  return pearson(ranks(x), ranks(y));
}

namespace {

void write_raw(std::ofstream& os, const void* p, size_t bytes) {
  os.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& is, void* p, size_t bytes) {
  is.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (!is) throw ConfigError("model file truncated");
}

}  // namespace

void save_model(const DiffusionMapModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open model file for writing: " + path);
  const int64_t n = model.size(), cols = model.data.cols(), kp1 = model.k + 1;
  write_raw(os, &kModelMagic, 8);
  write_raw(os, &n, 8);
  write_raw(os, &cols, 8);
  write_raw(os, &kp1, 8);
  write_raw(os, &model.sigma, 8);
  write_raw(os, model.reference_u.data(), sizeof(Scalar) * cols / 2);
  write_raw(os, model.data.data(), sizeof(Scalar) * n * cols);
  write_raw(os, model.degrees.data(), sizeof(Scalar) * n);
  write_raw(os, model.eigenvalues.data(), sizeof(Scalar) * kp1);
  write_raw(os, model.psi.data(), sizeof(Scalar) * n * kp1);
  write_raw(os, model.phi.data(), sizeof(Scalar) * n * kp1);
  for (const auto& nm : model.norms) {
    const int64_t sh = nm.shift;
    write_raw(os, &nm.u_scale, 8);
    write_raw(os, &nm.a_scale, 8);
    write_raw(os, &sh, 8);
  }
  write_raw(os, model.v.data(), sizeof(Scalar) * n);
  if (!os) throw ConfigError("failed writing model file: " + path);
}

DiffusionMapModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open model file: " + path);
  uint64_t magic = 0;
  int64_t n = 0, cols = 0, kp1 = 0;
  read_raw(is, &magic, 8);
  if (magic != kModelMagic) throw ConfigError("not a diffusion-map model file: " + path);
  read_raw(is, &n, 8);
  read_raw(is, &cols, 8);
  read_raw(is, &kp1, 8);
  if (n < 1 || cols < 2 || cols % 2 != 0 || kp1 < 2) {
    throw ConfigError("corrupt model header: " + path);
  }
  DiffusionMapModel model;
  model.k = static_cast<int>(kp1 - 1);
  read_raw(is, &model.sigma, 8);
  model.reference_u.resize(cols / 2);
  read_raw(is, model.reference_u.data(), sizeof(Scalar) * cols / 2);
  model.data.resize(n, cols);
  read_raw(is, model.data.data(), sizeof(Scalar) * n * cols);
  model.degrees.resize(n);
  read_raw(is, model.degrees.data(), sizeof(Scalar) * n);
  model.eigenvalues.resize(kp1);
  read_raw(is, model.eigenvalues.data(), sizeof(Scalar) * kp1);
  model.psi.resize(n, kp1);
  read_raw(is, model.psi.data(), sizeof(Scalar) * n * kp1);
  model.phi.resize(n, kp1);
  read_raw(is, model.phi.data(), sizeof(Scalar) * n * kp1);
  model.norms.resize(n);
  for (auto& nm : model.norms) {
    int64_t sh = 0;
    read_raw(is, &nm.u_scale, 8);
    read_raw(is, &nm.a_scale, 8);
    read_raw(is, &sh, 8);
    nm.shift = static_cast<int>(sh);
  }
  model.v.resize(n);
  read_raw(is, model.v.data(), sizeof(Scalar) * n);
  return model;
}

}  // namespace nfield
