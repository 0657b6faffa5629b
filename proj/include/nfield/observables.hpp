#pragma once

#include "nfield/types.hpp"

namespace nfield {

// Maps any angle into (-pi, pi]; wrap_angle(-pi) == pi.
Scalar wrap_angle(Scalar theta);

// Phase of the first circular harmonic of a ring profile; constant offsets
// drop out of the harmonic sums, so raw profiles are fine.
struct PeakPhase {
  Scalar phase = 0;      // atan2 of the first circular moment
  Scalar amplitude = 0;  // modulus of the first circular moment
};

// First circular moment of `weights` over grid_point(nodes, i). Throws
// DegenerateProfile when the modulus falls below 1e-8 * nodes (flat or
// balanced profiles have no usable phase).
PeakPhase peak_phase(const Vector& weights);

// Coarse variable: wrapped lag of the adaptation peak behind the activity
// peak, v = wrap(phase_u - phase_a). Positive v means a_peak trails u_peak
// in the direction of motion for rightward-moving bumps.
Scalar coarse_v(Scalar phase_u, Scalar phase_a);
Scalar coarse_v(const Vector& u, const Vector& a);

}  // namespace nfield
