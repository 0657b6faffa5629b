#include "nfield/csv.hpp"

#include <cstdio>
#include <fstream>

#include "nfield/errors.hpp"

namespace nfield::csv {
namespace {

std::ofstream open(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open output file: " + path);
  return os;
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw ConfigError("failed writing output file: " + path);
}

}  // namespace

std::string format_scalar(Scalar x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trajectory(const std::string& path, const TrajectoryRecord& rec) {
  auto os = open(path);
  os << "# nfield trajectory v1\n";
  const Index m = rec.snapshots.empty() ? 0 : rec.snapshots.front().size();
  os << "t";
  for (Index i = 0; i < m; ++i) os << ",u_" << i;
  for (Index i = 0; i < m; ++i) os << ",a_" << i;
  os << "\n";
  for (size_t r = 0; r < rec.snapshots.size(); ++r) {
    os << format_scalar(rec.times[r]);
    for (Index i = 0; i < m; ++i) os << "," << format_scalar(rec.snapshots[r].u[i]);
    for (Index i = 0; i < m; ++i) os << "," << format_scalar(rec.snapshots[r].a[i]);
    os << "\n";
  }
  finish(os, path);
}

void write_state(const std::string& path, const FieldState& state, Scalar t) {
  TrajectoryRecord rec;
  rec.times.push_back(t);
  rec.snapshots.push_back(state);
  write_trajectory(path, rec);
}

void write_vseries(const std::string& path, const VSeries& series) {
  auto os = open(path);
  os << "# nfield vseries v1\n";
  os << "t,peak_u,peak_a,V\n";
  for (size_t i = 0; i < series.v.size(); ++i) {
    os << format_scalar(series.times[i]) << "," << format_scalar(series.peak_u[i])
       << "," << format_scalar(series.peak_a[i]) << "," << format_scalar(series.v[i])
       << "\n";
  }
  finish(os, path);
}

void write_dd(const std::string& path, const DriftDiffusionCurve& curve) {
  auto os = open(path);
  os << "# nfield drift-diffusion v1\n";
  os << "v,mu,mu_se,d,d_se,n\n";
  for (Index i = 0; i < curve.v_grid.size(); ++i) {
    if (curve.missing[i]) continue;  // missing points are omitted, not faked
    os << format_scalar(curve.v_grid[i]) << "," << format_scalar(curve.mu[i]) << ","
       << format_scalar(curve.mu_se[i]) << "," << format_scalar(curve.d[i]) << ","
       << format_scalar(curve.d_se[i]) << "," << curve.n_samples[i] << "\n";
  }
  finish(os, path);
}

void write_potential(const std::string& path, const PotentialCurve& curve) {
  auto os = open(path);
  os << "# nfield potential v1\n";
  os << "v,beta_phi,method\n";
  const char* method =
      curve.method == PotentialMethod::histogram ? "histogram" : "fp_integral";
  for (Index i = 0; i < curve.v_grid.size(); ++i) {
    if (curve.missing[i]) continue;
    os << format_scalar(curve.v_grid[i]) << "," << format_scalar(curve.g[i]) << ","
       << method << "\n";
  }
  finish(os, path);
}

void write_branch(const std::string& path, const std::vector<SweepRow>& rows,
                  RootKind kind) {
  auto os = open(path);
  os << "# nfield branch v1\n";
  os << "param,root,stability,slope,c0,c1,c2,c3,residual\n";
  for (const auto& row : rows) {
    if (row.failed) continue;
    for (const auto& bp : row.roots) {
      if (bp.kind != kind) continue;
      os << format_scalar(row.parameter) << "," << format_scalar(bp.root) << ","
         << (bp.stability == Stability::stable ? "stable" : "unstable") << ","
         << format_scalar(bp.slope) << "," << format_scalar(row.cubic.c0) << ","
         << format_scalar(row.cubic.c1) << "," << format_scalar(row.cubic.c2) << ","
         << format_scalar(row.cubic.c3) << "," << format_scalar(row.cubic.residual)
         << "\n";
    }
  }
  finish(os, path);
}

void write_kramers(const std::string& path,
                   const std::vector<TauCurveRow>& rows) {
  auto os = open(path);
  os << "# nfield kramers v1\n";
  os << "param,tau_kramers,delta_g,d_bar,v_min,curvature_min,curvature_barrier\n";
  for (const auto& row : rows) {
    if (row.failed) continue;
    os << format_scalar(row.parameter) << "," << format_scalar(row.tau) << ","
       << format_scalar(row.geom.g_barrier - row.geom.g_min) << ","
       << format_scalar(row.geom.d_bar) << "," << format_scalar(row.geom.v_min) << ","
       << format_scalar(row.geom.curvature_min) << ","
       << format_scalar(row.geom.curvature_barrier) << "\n";
  }
  finish(os, path);
}

void write_waiting(const std::string& path, const SwitchRecord& rec) {
  auto os = open(path);
  os << "# nfield waiting-times v1\n";
  os << "waiting\n";
  for (Scalar w : rec.waiting) os << format_scalar(w) << "\n";
  finish(os, path);
}

void write_coords(const std::string& path, const DiffusionMapModel& model) {
  auto os = open(path);
  os << "# nfield dmap-coords v1\n";
  os << "index";
  for (int j = 2; j <= model.k + 1; ++j) os << ",Phi" << j;
  os << ",V\n";
  for (Index i = 0; i < model.size(); ++i) {
    os << i;
    for (int j = 1; j <= model.k; ++j) os << "," << format_scalar(model.phi(i, j));
    os << "," << format_scalar(model.v[i]) << "\n";
  }
  finish(os, path);
}

}  // namespace nfield::csv
