#pragma once

#include <stdexcept>
#include <string>

namespace nfield {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Simulation produced a non-finite state.
struct IntegrationBlowup : std::runtime_error {
  explicit IntegrationBlowup(double t)
      : std::runtime_error("integration blowup at t=" + std::to_string(t)),
        time(t) {}
  double time;
};

// Profile has no resolvable first-harmonic peak.
struct DegenerateProfile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LiftError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Potential has no barrier between two minima.
struct NoBarrier : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace nfield
