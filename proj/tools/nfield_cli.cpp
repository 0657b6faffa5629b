// Command-line harness: every pipeline stage as a subcommand, all outputs a
// pure function of the config file (seed included).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nfield/bifurcation.hpp"
#include "nfield/config.hpp"
#include "nfield/csv.hpp"
#include "nfield/dmap.hpp"
#include "nfield/dmap_lift.hpp"
#include "nfield/errors.hpp"
#include "nfield/kramers.hpp"
#include "nfield/langevin.hpp"
#include "nfield/lifting.hpp"
#include "nfield/observables.hpp"
#include "nfield/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nfield;

namespace {

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / name;
}

void write_echo(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = out_path(cfg, "config.json");
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << cfg.to_text();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void note_wrote(const fs::path& path) {
  std::printf("wrote %s\n", path.string().c_str());
}

ReferenceOptions ref_options(const RunConfig& cfg) {
  ReferenceOptions opts;
  opts.dt = cfg.sim.dt;
  return opts;
}

FieldState reference_state(const ReferenceBump& ref) {
  return FieldState{ref.u_ref, ref.a_ref};
}

json moment_json(const MomentEstimate& m) {
  return json{{"mu", m.mu},   {"mu_se", m.mu_se}, {"d", m.d},
              {"d_se", m.d_se}, {"n", m.n},         {"dropped", m.dropped}};
}

int cmd_simulate(const RunConfig& cfg) {
  const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
  Rng rng = make_rng(cfg.seed, StreamTag::simulate);
  const TrajectoryRecord rec =
      simulate(reference_state(ref), cfg.params, cfg.noise, cfg.sim, rng);

  const fs::path traj = out_path(cfg, "trajectory.csv");
  csv::write_trajectory(traj, rec);
  note_wrote(traj);

  VSeries series;
  series.dt_sample = cfg.sim.sample_interval;
  long degenerate = 0;
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    try {
      const PeakPhase pu = peak_phase(rec.snapshots[i].u);
      const PeakPhase pa = peak_phase(rec.snapshots[i].a);
      series.times.push_back(rec.times[i]);
      series.peak_u.push_back(pu.phase);
      series.peak_a.push_back(pa.phase);
      series.v.push_back(coarse_v(pu.phase, pa.phase));
    } catch (const DegenerateProfile&) {
      // No usable peak at this sample; the row is omitted, not faked.
      ++degenerate;
    }
  }
  const fs::path vpath = out_path(cfg, "vseries.csv");
  csv::write_vseries(vpath, series);
  note_wrote(vpath);
  if (degenerate > 0) {
    std::fprintf(stderr, "note: %ld samples had no resolvable peak\n",
                 degenerate);
  }
  return 0;
}

int cmd_estimate(const RunConfig& cfg) {
  if (cfg.estimate.mode == "database") {
    const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
    Rng rng = make_rng(cfg.seed, StreamTag::simulate);
    const VSeries series =
        simulate_vseries(reference_state(ref), cfg.params, cfg.noise, cfg.sim, rng);
    const DriftDiffusionCurve curve =
        estimate_database(series, cfg.estimate.v_grid, cfg.window,
                          cfg.estimate.h_bin, cfg.estimate.n_min);
    const fs::path path = out_path(cfg, "dd_database.csv");
    csv::write_dd(path, curve);
    note_wrote(path);
  } else {
    KramersConfig kc = cfg.kramers_config();
    kc.v_grid = cfg.estimate.v_grid;
    kc.n_bursts = cfg.estimate.n_bursts;
    const DriftDiffusionCurve curve =
        burst_curve(kc.v_grid, cfg.params, cfg.noise, kc);
    const fs::path path = out_path(cfg, "dd_burst.csv");
    csv::write_dd(path, curve);
    note_wrote(path);
  }
  return 0;
}

int cmd_potential(const RunConfig& cfg) {
  const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
  Rng rng = make_rng(cfg.seed, StreamTag::simulate);
  const VSeries series =
      simulate_vseries(reference_state(ref), cfg.params, cfg.noise, cfg.sim, rng);

  const PotentialCurve hist =
      potential_histogram(series.v, cfg.potential.bins);
  const fs::path hpath = out_path(cfg, "potential_histogram.csv");
  csv::write_potential(hpath, hist);
  note_wrote(hpath);

  const DriftDiffusionCurve curve =
      estimate_database(series, cfg.estimate.v_grid, cfg.window,
                        cfg.estimate.h_bin, cfg.estimate.n_min);
  const PotentialCurve fp = potential_fp_integral(curve);
  const fs::path fpath = out_path(cfg, "potential_fp.csv");
  csv::write_potential(fpath, fp);
  note_wrote(fpath);
  return 0;
}

int cmd_bifurcate(const RunConfig& cfg) {
  if (cfg.sweep.grid.size() == 0) {
    throw ConfigError("sweep.grid: required for bifurcate");
  }
  SweepParameter which;
  if (cfg.sweep.parameter == "A") {
    which = SweepParameter::adaptation_strength;
  } else if (cfg.sweep.parameter == "eta") {
    which = SweepParameter::noise_eta;
    if (cfg.noise.kind != NoiseSpec::Kind::white) {
      throw ConfigError("sweep.parameter: eta sweep needs noise.variant white");
    }
  } else {
    which = SweepParameter::noise_lambda;
    if (cfg.noise.kind != NoiseSpec::Kind::coloured) {
      throw ConfigError(
          "sweep.parameter: lambda sweep needs noise.variant coloured");
    }
  }

  const std::vector<SweepRow> rows =
      sweep(which, cfg.sweep.grid, cfg.params, cfg.noise, cfg.sweep_config());
  long failed = 0;
  for (const SweepRow& r : rows) {
    if (r.failed) {
      ++failed;
      std::fprintf(stderr, "note: point %.6g failed: %s\n", r.parameter,
                   r.error.c_str());
    }
  }

  const fs::path bpath = out_path(cfg, "branch.csv");
  csv::write_branch(bpath, rows, RootKind::drift_zero);
  note_wrote(bpath);
  if (cfg.sweep.density_extrema) {
    const fs::path dpath = out_path(cfg, "branch_density_extrema.csv");
    csv::write_branch(dpath, rows, RootKind::density_extremum);
    note_wrote(dpath);
  }

  try {
    const PitchforkFit fit = fit_pitchfork(rows);
    json report{{"onset", fit.onset},
                {"a2", fit.a2},
                {"r2", fit.r2},
                {"n_points", fit.n_points}};
    const fs::path ppath = out_path(cfg, "pitchfork.json");
    write_json(ppath, report);
    note_wrote(ppath);
  } catch (const EstimationError& e) {
    std::fprintf(stderr, "note: no pitchfork fit: %s\n", e.what());
  }
  return failed == static_cast<long>(rows.size()) && !rows.empty() ? 1 : 0;
}

int cmd_switching(const RunConfig& cfg) {
  // Model side: burst-estimated potential and its well geometry.
  const KramersConfig kc = cfg.kramers_config();
  const DriftDiffusionCurve dd =
      burst_curve(kc.v_grid, cfg.params, cfg.noise, kc);
  const PotentialCurve pot = potential_fp_integral(dd);
  const WellGeometry geom = well_geometry(pot, dd);
  const Scalar tau = kramers_time(geom);

  // Empirical side: switch detection on a long run at the same parameters.
  const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
  Rng rng = make_rng(cfg.seed, StreamTag::simulate);
  const VSeries series =
      simulate_vseries(reference_state(ref), cfg.params, cfg.noise, cfg.sim, rng);
  const SwitchRecord sw =
      detect_switches(series.times, series.v, geom.v_min,
                      cfg.switching.hysteresis_fraction);

  const fs::path wpath = out_path(cfg, "waiting.csv");
  csv::write_waiting(wpath, sw);
  note_wrote(wpath);

  json report{{"tau_kramers", tau},
              {"delta_g", geom.g_barrier - geom.g_min},
              {"d_bar", geom.d_bar},
              {"v_min", geom.v_min},
              {"curvature_min", geom.curvature_min},
              {"curvature_barrier", geom.curvature_barrier},
              {"threshold", sw.threshold},
              {"n_switches", sw.switch_times.size()}};
  if (sw.waiting.empty()) {
    std::fprintf(stderr,
                 "warning: fewer than two switches in %.6g time units\n",
                 cfg.sim.duration);
    report["mean_waiting"] = nullptr;
    report["ratio_kramers_to_empirical"] = nullptr;
  } else {
    Scalar mean = 0;
    for (Scalar w : sw.waiting) mean += w;
    mean /= static_cast<Scalar>(sw.waiting.size());
    report["mean_waiting"] = mean;
    report["ratio_kramers_to_empirical"] = tau / mean;
  }
  const fs::path rpath = out_path(cfg, "switching_report.json");
  write_json(rpath, report);
  note_wrote(rpath);
  return 0;
}

// Shared by dmap and lift: trajectory at the dmap cadence, peak-phase V per
// snapshot, model build.
DiffusionMapModel build_model_from_config(const RunConfig& cfg) {
  const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
  SimOptions so;
  so.duration = cfg.dmap.duration;
  so.sample_interval = cfg.dmap.sample_interval;
  so.dt = cfg.sim.dt;
  Rng rng = make_rng(cfg.seed, StreamTag::simulate);
  const TrajectoryRecord rec =
      simulate(reference_state(ref), cfg.params, cfg.noise, so, rng);

  std::vector<Scalar> v(rec.snapshots.size());
  for (std::size_t i = 0; i < rec.snapshots.size(); ++i) {
    v[i] = coarse_v(rec.snapshots[i].u, rec.snapshots[i].a);
  }
  return build_model(rec.snapshots, v, cfg.dmap_options());
}

int cmd_dmap(const RunConfig& cfg) {
  const DiffusionMapModel model = build_model_from_config(cfg);

  const fs::path mpath = out_path(cfg, "dmap_model.bin");
  save_model(model, mpath.string());
  note_wrote(mpath);
  const fs::path cpath = out_path(cfg, "coords.csv");
  csv::write_coords(cpath, model);
  note_wrote(cpath);

  std::printf("snapshots %ld  sigma %.6g  eigenvalues", model.size(),
              model.sigma);
  for (Index j = 0; j < model.eigenvalues.size(); ++j) {
    std::printf(" %.6g", model.eigenvalues[j]);
  }
  std::printf("\n");
  return 0;
}

int cmd_lift(const RunConfig& cfg) {
  DiffusionMapModel model;
  if (cfg.lift.model_path.empty()) {
    model = build_model_from_config(cfg);
  } else {
    model = load_model(cfg.lift.model_path);
  }

  Rng rng = make_rng(cfg.seed, StreamTag::annealing);
  const LiftResult res = lift_phi2(cfg.lift.target, model, cfg.lift.sa, rng);

  const fs::path spath = out_path(cfg, "lifted_snapshot.csv");
  csv::write_state(spath, res.state, 0.0);
  note_wrote(spath);
  const FieldState physical = to_physical(res.state, model, res.seed_index);
  const fs::path ppath = out_path(cfg, "lifted_state.csv");
  csv::write_state(ppath, physical, 0.0);
  note_wrote(ppath);

  json report{{"target", cfg.lift.target},
              {"achieved_phi2", res.achieved_phi2},
              {"objective", res.objective},
              {"iterations", res.iterations},
              {"accepted", res.accepted},
              {"success", res.success},
              {"seed_index", res.seed_index},
              {"kernel_mass", res.kernel_mass},
              {"trace", res.trace}};

  if (!res.success) {
    std::fprintf(stderr,
                 "lift failed: best objective %.3g (target phi2 %.6g, "
                 "achieved %.6g)\n",
                 res.objective, cfg.lift.target, res.achieved_phi2);
  }

  if (res.success && cfg.lift.n_bursts > 0) {
    const MomentEstimate burst = estimate_mu_d_phi2(
        cfg.lift.target, model, cfg.lift.n_bursts, cfg.window, cfg.params,
        cfg.noise, cfg.lift.sa, cfg.seed, cfg.workers, cfg.sim.dt);
    report["burst"] = moment_json(burst);

    if (cfg.lift.database_duration > 0) {
      const ReferenceBump ref = make_reference(cfg.params, ref_options(cfg));
      Rng db_rng = make_rng(cfg.seed, StreamTag::simulate, 1);
      const VSeries phi2s = simulate_phi2_series(
          reference_state(ref), cfg.params, cfg.noise,
          cfg.lift.database_duration, cfg.window.dt_est, cfg.sim.dt, model,
          db_rng);
      Vector grid1(1);
      grid1[0] = cfg.lift.target;
      const DriftDiffusionCurve db = estimate_database(
          phi2s, grid1, cfg.window, cfg.lift.h_bin, cfg.estimate.n_min);
      if (db.missing[0]) {
        std::fprintf(stderr,
                     "note: database run never visited phi2 = %.6g often "
                     "enough to compare\n",
                     cfg.lift.target);
        report["database"] = nullptr;
      } else {
        report["database"] = json{{"mu", db.mu[0]},
                                  {"mu_se", db.mu_se[0]},
                                  {"d", db.d[0]},
                                  {"d_se", db.d_se[0]},
                                  {"n", db.n_samples[0]}};
        report["mu_ratio_burst_to_database"] = burst.mu / db.mu[0];
        report["d_ratio_burst_to_database"] = burst.d / db.d[0];
      }
    }
  }

  const fs::path rpath = out_path(cfg, "lift_report.json");
  write_json(rpath, report);
  note_wrote(rpath);
  return res.success ? 0 : 1;
}

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  long long seed_override = -1;
  int workers_override = -1;
};

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("-c,--config", args.config_path, "JSON config file")
      ->required();
  sub->add_option("--out", args.out_override, "override out_dir");
  sub->add_option("--seed", args.seed_override, "override base seed");
  sub->add_option("--workers", args.workers_override,
                  "override worker count (0 = all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Stochastic neural-field bump simulator with coarse-grained analysis"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* names[] = {"simulate",  "estimate", "potential", "bifurcate",
                         "switching", "dmap",     "lift"};
  const char* briefs[] = {
      "integrate the field; trajectory and V-series CSVs",
      "drift/diffusion of V (database or burst mode)",
      "effective potential, histogram and drift-diffusion routes",
      "coarse bifurcation branch over a parameter grid",
      "switch detection and Kramers switching-time report",
      "diffusion-map model and coordinates from a long run",
      "anneal a state to a target phi2; report and snapshots"};
  for (int i = 0; i < 7; ++i) add_common(app.add_subcommand(names[i], briefs[i]), args);

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = RunConfig::from_file(args.config_path);
    if (!args.out_override.empty()) cfg.out_dir = args.out_override;
    if (args.seed_override >= 0) {
      cfg.seed = static_cast<std::uint64_t>(args.seed_override);
    }
    if (args.workers_override >= 0) cfg.workers = args.workers_override;
    cfg.validate();
    write_echo(cfg);

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "simulate") return cmd_simulate(cfg);
    if (sub == "estimate") return cmd_estimate(cfg);
    if (sub == "potential") return cmd_potential(cfg);
    if (sub == "bifurcate") return cmd_bifurcate(cfg);
    if (sub == "switching") return cmd_switching(cfg);
    if (sub == "dmap") return cmd_dmap(cfg);
    if (sub == "lift") return cmd_lift(cfg);
    std::fprintf(stderr, "unknown subcommand %s\n", sub.c_str());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
