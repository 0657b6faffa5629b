#pragma once

#include <Eigen/Dense>

#include "nfield/types.hpp"

namespace nfield {

// Which adaptation value enters the firing argument of the coupling sum:
// f(I + u_j - a_j) reads adaptation at the source node j, f(I + u_j - a_i)
// at the target node i. The two published forms of the model disagree;
// both are kept selectable.
enum class KernelArgMode { adaptation_at_source, adaptation_at_target };

struct ModelParams {
  int nodes = 100;                    // M
  Scalar adaptation_strength = 0.17;  // A
  Scalar background_current = -0.1;   // I
  Scalar adaptation_tau = 5.0;        // tau
  Scalar coupling_offset = 0.05;      // J0
  Scalar coupling_amplitude = 0.24;   // J1
  Scalar gain = 10.0;                 // firing-rate steepness
  KernelArgMode kernel_arg_mode = KernelArgMode::adaptation_at_source;

  void validate() const;  // throws ConfigError naming the offending field
};

struct WhiteNoise {
  Scalar eta = 0.0;
};

struct ColouredNoise {
  Scalar epsilon = 0.0;
  Scalar lambda = 1.0;  // correlation time
};

struct NoiseSpec {
  enum class Kind { white, coloured };
  Kind kind = Kind::white;
  Scalar eta = 1e-4;      // white intensity
  Scalar epsilon = 1e-4;  // coloured intensity
  Scalar lambda = 1.0;    // coloured correlation time

  static NoiseSpec white(Scalar eta_) {
    NoiseSpec s;
    s.kind = Kind::white;
    s.eta = eta_;
    return s;
  }
  static NoiseSpec coloured(Scalar epsilon_, Scalar lambda_) {
    NoiseSpec s;
    s.kind = Kind::coloured;
    s.epsilon = epsilon_;
    s.lambda = lambda_;
    return s;
  }
  void validate() const;
};

// Activity and adaptation profiles on the periodic grid x_i = -pi + 2*pi*i/M.
struct FieldState {
  Vector u;
  Vector a;

  Index size() const { return u.size(); }
  bool all_finite() const { return u.allFinite() && a.allFinite(); }
};

inline Scalar grid_point(int nodes, Index i) {
  return -kPi + kTwoPi * static_cast<Scalar>(i) / static_cast<Scalar>(nodes);
}

// All grid positions as a vector.
Vector grid(int nodes);

// Sigmoidal firing rate, range (0,1).
inline Scalar firing_rate(Scalar x, Scalar gain = 10.0) {
  return 0.5 * (1.0 + std::tanh(gain * x));
}

// Expression form for whole-profile evaluation.
template <typename Derived>
auto firing_rate_array(const Eigen::ArrayBase<Derived>& x, Scalar gain) {
  return 0.5 * (1.0 + (gain * x).tanh());
}

// Circulant coupling matrix J_ij = J0 + J1*cos(2*pi*|i-j|/M).
Matrix coupling_matrix(const ModelParams& params);

// Right-hand side of the deterministic field equations.
// du_i/dt = -u_i + (2*pi/M) * sum_j J_ij f(I + u_j - a_k),  k per mode
// da_i/dt = (A*u_i - a_i)/tau
void drift_field(const FieldState& state, const ModelParams& params,
                 const Matrix& coupling, Vector& du_dt, Vector& da_dt);

// Bump-shaped initial condition: u = max(cos x, 0), a = A*u.
FieldState bump_seed(const ModelParams& params);

// Circular shift by k nodes: result[i] = v[(i - k) mod M].
Vector circshift(const Vector& v, Index k);

// Index reflection x -> -x on the periodic grid.
Vector reflect_profile(const Vector& v);
FieldState reflect_state(const FieldState& s);

}  // namespace nfield
