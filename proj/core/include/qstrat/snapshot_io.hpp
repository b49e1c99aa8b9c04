#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>

#include <nlohmann/json.hpp>

#include "qstrat/snapshot.hpp"
#include "qstrat/trajectory.hpp"

namespace qstrat {

/// Binary little-endian layout: "HMF1", u32 m, u32 n, u32 n_cells, f64 h, f64 t, values.
void write_snapshot(const Snapshot& s, std::ostream& out);
Snapshot read_snapshot(std::istream& in);
void write_snapshot_file(const Snapshot& s, const std::filesystem::path& path);
Snapshot read_snapshot_file(const std::filesystem::path& path);

/// Writes snap_NNNNN.hmf files plus trajectory.json into dir; returns the manifest.
nlohmann::json write_trajectory(const SimulatedTrajectory& traj, const std::filesystem::path& dir);

/// Loads a trajectory written by write_trajectory. Missing files raise an Error naming them.
std::shared_ptr<SimulatedTrajectory> read_trajectory(const std::filesystem::path& dir);

}  // namespace qstrat
