#include "nfield/model.hpp"

#include <cmath>

#include "nfield/errors.hpp"

namespace nfield {

void ModelParams::validate() const {
  if (nodes < 4) throw ConfigError("M: node count must be >= 4");
  if (!(adaptation_tau > 0)) throw ConfigError("tau: must be > 0");
  if (!(gain > 0)) throw ConfigError("gain: must be > 0");
}

void NoiseSpec::validate() const {
  if (kind == Kind::white) {
    if (!(eta >= 0)) throw ConfigError("noise.eta: must be >= 0");
  } else {
    if (!(epsilon >= 0)) throw ConfigError("noise.epsilon: must be >= 0");
    if (!(lambda > 0)) throw ConfigError("noise.lambda: must be > 0");
  }
}

Vector grid(int nodes) {
  Vector x(nodes);
  for (Index i = 0; i < nodes; ++i) x[i] = grid_point(nodes, i);
  return x;
}

Matrix coupling_matrix(const ModelParams& params) {
  params.validate();
  const int m = params.nodes;
  Matrix j(m, m);
  for (Index i = 0; i < m; ++i) {
    for (Index k = 0; k <= i; ++k) {
      const Scalar arg = kTwoPi * static_cast<Scalar>(i - k) / m;
      const Scalar val =
          params.coupling_offset + params.coupling_amplitude * std::cos(arg);
      j(i, k) = val;
      j(k, i) = val;
    }
  }
  return j;
}

void drift_field(const FieldState& state, const ModelParams& params,
                 const Matrix& coupling, Vector& du_dt, Vector& da_dt) {
  const Index m = state.size();
  if (state.a.size() != m || coupling.rows() != m || coupling.cols() != m)
    throw ConfigError("drift_field: dimension mismatch");
  const Scalar weight = kTwoPi / static_cast<Scalar>(m);
  const Scalar bg = params.background_current;

  du_dt.resize(m);
  da_dt.resize(m);
  if (params.kernel_arg_mode == KernelArgMode::adaptation_at_source) {
    // f argument depends on the source node only: one matvec.
    Vector rate =
        firing_rate_array((bg + state.u.array() - state.a.array()), params.gain)
            .matrix();
    du_dt.noalias() = coupling * rate;
    du_dt = weight * du_dt - state.u;
  } else {
    // f(I + u_j - a_i): row-dependent argument.
    for (Index i = 0; i < m; ++i) {
      auto rate = firing_rate_array(bg + state.u.array() - state.a[i],
                                    params.gain);
      du_dt[i] = weight * (coupling.row(i).transpose().array() * rate).sum() -
                 state.u[i];
    }
  }
  da_dt = (params.adaptation_strength * state.u - state.a) /
          params.adaptation_tau;
}

FieldState bump_seed(const ModelParams& params) {
  const int m = params.nodes;
  FieldState s;
  s.u.resize(m);
  for (Index i = 0; i < m; ++i)
    s.u[i] = std::max(std::cos(grid_point(m, i)), 0.0);
  s.a = params.adaptation_strength * s.u;
  return s;
}

Vector circshift(const Vector& v, Index k) {
  const Index m = v.size();
  Vector out(m);
  k = ((k % m) + m) % m;
  for (Index i = 0; i < m; ++i) out[(i + k) % m] = v[i];
  return out;
}

Vector reflect_profile(const Vector& v) {
  const Index m = v.size();
  Vector out(m);
  for (Index i = 0; i < m; ++i) out[(m - i) % m] = v[i];
  return out;
}

FieldState reflect_state(const FieldState& s) {
  return FieldState{reflect_profile(s.u), reflect_profile(s.a)};
}

}  // namespace nfield
