#pragma once

#include <cstdint>
#include <string>

#include "nfield/bifurcation.hpp"
#include "nfield/dmap.hpp"
#include "nfield/dmap_lift.hpp"
#include "nfield/kramers.hpp"
#include "nfield/model.hpp"
#include "nfield/sim.hpp"
#include "nfield/types.hpp"

namespace nfield {

// Settings for the estimate and potential commands.
struct EstimateConfig {
  std::string mode = "database";  // database | burst
  Scalar h_bin = 0.01;
  long n_min = 20;
  long n_bursts = 4000;  // per grid point in burst mode
  Vector v_grid;         // default: 61 points on [-0.3, 0.3]

  EstimateConfig();
};

struct PotentialConfig {
  int bins = 61;
};

struct SweepSection {
  std::string parameter = "A";  // A | eta | lambda
  Vector grid;
  Vector design_v;  // default +-0.05, +-0.15
  long n_bursts = 10000;
  bool symmetric_mode = false;
  bool density_extrema = false;

  SweepSection();
};

struct SwitchingConfig {
  Scalar hysteresis_fraction = 0.5;
};

struct KramersSection {
  Vector v_grid;  // default: 29 points on [-0.28, 0.28]
  long n_bursts = 2000;

  KramersSection();
};

struct DmapSection {
  Scalar duration = 30000;
  Scalar sample_interval = 8;
  Scalar sigma_scale = 0.5;
  Scalar sigma_override = 0;  // > 0 overrides the median policy
  int k = 5;
  Index max_dense = 4000;
};

struct LiftSection {
  Scalar target = -0.5;
  std::string model_path;        // empty: build the model in-process
  long n_bursts = 0;             // > 0: burst-estimate mu/D at the target
  Scalar database_duration = 0;  // > 0: long-run comparison at the target
  Scalar h_bin = 0.02;           // phi2 bin half-width for the comparison
  SAConfig sa;
};

// Every CLI run is a pure function of one of these (seed included). Parsed
// from JSON with strict keys; unknown or ill-typed keys fail naming the key.
struct RunConfig {
  ModelParams params;
  NoiseSpec noise = NoiseSpec::white(1e-4);
  SimOptions sim;
  std::uint64_t seed = 0;
  int workers = 1;  // 0 = all hardware threads
  std::string out_dir = "out";

  EstimationWindow window;
  EstimateConfig estimate;
  PotentialConfig potential;
  SweepSection sweep;
  SwitchingConfig switching;
  KramersSection kramers;
  DmapSection dmap;
  LiftSection lift;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);
  std::string to_text() const;  // fully resolved echo, stable key order
  void validate() const;

  // Assembled argument packs for the library calls.
  SweepConfig sweep_config() const;
  KramersConfig kramers_config() const;
  BuildOptions dmap_options() const;
};

}  // namespace nfield
