#pragma once

// File formats and serialization helpers. Floats are written in shortest
// round-trip decimal form so exported trajectories re-ingest bit-exactly.

#include "vrjp/process.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vrjp::io {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Write-then-rename so partial outputs never appear under the final name.
void atomic_write(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64_bytes(std::string_view s);
std::string hex64(std::uint64_t v);

// Trajectory CSV: header `n,tau,from,to`, one row per jump.
std::string trajectory_csv(const process::Trajectory& traj);

// Rebuilds a trajectory from its CSV; weight-independent fields only. The
// initial local times and vertex set come from the caller (config), the start
// vertex from the first row, the horizon from the last jump unless given.
process::Trajectory trajectory_from_csv(std::string_view csv, double ell_default = 1.0,
                                        double horizon_override = -1.0);

// Local-time snapshot CSV: header `vertex,L`, one row per vertex of the
// visited range at the trajectory horizon.
std::string local_times_csv(const process::Trajectory& traj);

}  // namespace vrjp::io

#include "vrjp/coupling.hpp"
#include "vrjp/diagnostics.hpp"

namespace vrjp::io {

// Diagnostic series CSV: `t,W0,W1,H,Z,M,A,angleM,alpha,beta,grid` with grid
// rows flagged by the final column.
std::string series_csv(const diagnostics::DiagnosticSeries& series);

// Coupled-pair CSV: `k,tilde_L0,tilde_L1,star_L0,star_L1`.
std::string coupled_csv(const coupling::CoupledPaths& paths);

}  // namespace vrjp::io
