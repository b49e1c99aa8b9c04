#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qstrat/geometry.hpp"
#include "qstrat/snapshot.hpp"
#include "qstrat/trajectory.hpp"

namespace qstrat {

enum class Binding { kGradient, kHessian, kCap, kFloor };

std::string to_string(Binding b);

/// Probe lattice for closed-form fields. Recorded trajectories always use their own grid
/// nodes and snapshot times.
struct RegularityOptions {
  double probe_step = 0.0;  // spatial lattice step; required for closed-form fields
  double probe_dt = 0.0;    // time step; 0 means probe_step^2
};

struct RegularityRecord {
  SpaceTimePoint X;
  double r_u = 0.0;
  Binding binding = Binding::kCap;
  std::uint64_t nodes = 0;  // lattice nodes examined
};

/// Largest r with r|grad u| + r^2 |hess u| <= 1 on every lattice node of P_r(X), clamped to
/// [4 h, R_max]. A node Y excludes exactly the radii above max(d(X, Y), rho_Y), where rho_Y is
/// the positive root of its own constraint, so r_u is the minimum of that quantity.
RegularityRecord regularity_scale(const Trajectory& traj, const SpaceTimePoint& X, double R_max,
                                  const RegularityOptions& opt = {});

/// Spatial version on one snapshot: balls B_r(x), r <= min(1, R_max).
double static_reg_scale(const Snapshot& snap, const SpatialVec& x, double R_max);

/// Indices of cloud points with r_u <= r.
std::vector<std::size_t> bad_set(const Trajectory& traj, double r, std::span<const SpaceTimePoint> cloud,
                                 const RegularityOptions& opt = {});

struct LpIntegral {
  double value = 0.0;
  double floor_fraction = 0.0;  // share of cells where r_u hit the 4h floor
  double cap_fraction = 0.0;    // share of cells where r_u hit R_max
  std::uint64_t cells = 0;
};

/// Sum of r_u^{-p} times the cell volume over the nodes of grid x time, with r_u clamped to
/// [4 h, R_max]. The probe lattice is the grid itself (closed-form fields) or the recorded grid.
LpIntegral lp_reciprocal_integral(const Trajectory& traj, double p, double R_max, const GridSpec& grid,
                                  const TimeAxis& time);

}  // namespace qstrat
