#pragma once

#include <string>
#include <vector>

#include "nfield/model.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Snapshot preprocessing: normalize u by its maximum, a by its value at the
// u-argmax node, then circularly shift both to best align u with a reference
// profile. The scales and shift are recorded so states can be mapped back.
struct SnapshotNorm {
  Scalar u_scale = 1;  // max of raw u
  Scalar a_scale = 1;  // raw a at the u-argmax node
  int shift = 0;       // applied circular shift (nodes)
};

// One preprocessed snapshot as a length-2M row vector [u | a].
Vector preprocess_one(const FieldState& state, const Vector& reference_u,
                      SnapshotNorm* norm = nullptr);

struct SnapshotSet {
  Matrix data;  // N x 2M
  Vector reference_u;
  std::vector<SnapshotNorm> norms;
};

// Preprocesses a whole trajectory; the reference defaults to the first
// snapshot's own normalized u profile.
SnapshotSet preprocess(const std::vector<FieldState>& raw,
                       const Vector* reference_u = nullptr);

// Gaussian kernel K_ij = exp(-(|x_i - x_j|/sigma)^2) between data rows.
Matrix kernel_matrix(const Matrix& data, Scalar sigma);

struct MarkovParts {
  Vector degrees;  // row sums of K
  Matrix markov;   // D^-1 K, rows sum to 1
  Matrix sym;      // D^-1/2 K D^-1/2, same spectrum
};
MarkovParts markov_normalize(const Matrix& kernel);

struct DiffusionMapModel {
  Matrix data;         // N x 2M preprocessed snapshots
  Vector reference_u;  // alignment reference, length M
  Scalar sigma = 0;
  Vector degrees;
  Vector eigenvalues;  // k+1 values, descending, first = 1
  Matrix psi;          // N x (k+1), orthonormal eigenvectors of the symmetric form
  Matrix phi;          // N x (k+1), Markov eigenvectors; column 0 is all ones
  int k = 0;           // retained nontrivial coordinates
  std::vector<SnapshotNorm> norms;  // per-row preprocessing record
  std::vector<Scalar> v;            // coarse V per snapshot

  Index size() const { return data.rows(); }
};

// Fills eigenvalues/psi/phi from the symmetric matrix; phi columns are
// D^-1/2 psi scaled so column 0 is the all-ones vector.
void spectral_decompose(const Matrix& sym, const Vector& degrees, int k,
                        DiffusionMapModel& model);

struct BuildOptions {
  Scalar sigma_scale = 0.5;   // times the median pairwise distance
  Scalar sigma_override = 0;  // > 0 uses this bandwidth directly
  int k = 5;
  Index max_dense = 4000;  // uniform subsampling above this count
};

// Full pipeline: preprocess, bandwidth policy, kernel, normalize, decompose.
// The V series must parallel the trajectory (used for the phi_2 sign
// convention and kept for downstream estimation).
DiffusionMapModel build_model(const std::vector<FieldState>& traj,
                              const std::vector<Scalar>& v,
                              const BuildOptions& opts = {});

struct RestrictResult {
  Vector phi;          // Phi_2 .. Phi_{k+1}
  Scalar kernel_mass = 0;  // mean kernel row value against the dataset
  bool out_of_sample = false;
};

// Nystrom extension of the eigenvectors to a new preprocessed snapshot;
// exact at dataset rows. kernel_mass far below exp(-9) marks the input as
// outside the sampled region.
RestrictResult nystrom_restrict(const Vector& x_new,
                                const DiffusionMapModel& model);

// Batch restriction (rows of x_new), chunked matrix products.
Matrix restrict_rows(const Matrix& x_new, const DiffusionMapModel& model);

// Curve-likeness of the (phi2, phi3) cloud: variance transverse to a binned
// polyline through the cloud, relative to variance along it.
Scalar curve_collapse_ratio(const Vector& phi2, const Vector& phi3,
                            int bins = 40);

// Spearman rank correlation (average ranks on ties).
Scalar spearman_rho(const Vector& x, const Vector& y);

void save_model(const DiffusionMapModel& model, const std::string& path);
DiffusionMapModel load_model(const std::string& path);

}  // namespace nfield
