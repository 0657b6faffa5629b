#pragma once

#include <string>
#include <vector>

#include "nfield/bifurcation.hpp"
#include "nfield/dmap.hpp"
#include "nfield/kramers.hpp"
#include "nfield/langevin.hpp"
#include "nfield/sim.hpp"

namespace nfield::csv {

// All writers emit a versioned schema comment, then a column header, then
// rows with full double precision. Numbers are formatted with %.17g so a
// rerun with the same config is byte-identical.
std::string format_scalar(Scalar x);

void write_trajectory(const std::string& path, const TrajectoryRecord& rec);
void write_state(const std::string& path, const FieldState& state, Scalar t);
void write_vseries(const std::string& path, const VSeries& series);
void write_dd(const std::string& path, const DriftDiffusionCurve& curve);
void write_potential(const std::string& path, const PotentialCurve& curve);
// Drift-zero branch table; density-extremum roots (when present) go to a
// companion file with the same schema.
void write_branch(const std::string& path, const std::vector<SweepRow>& rows,
                  RootKind kind = RootKind::drift_zero);
void write_kramers(const std::string& path,
                   const std::vector<TauCurveRow>& rows);
void write_waiting(const std::string& path, const SwitchRecord& rec);
void write_coords(const std::string& path, const DiffusionMapModel& model);

}  // namespace nfield::csv
