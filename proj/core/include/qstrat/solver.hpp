#pragma once

#include <cstdint>
#include <memory>
#include <optional>

#include "qstrat/shrink_profile.hpp"
#include "qstrat/snapshot.hpp"
#include "qstrat/trajectory.hpp"

namespace qstrat {

/// sigma * h^2 / (2m); requires 0 < sigma <= 0.5.
double cfl_dt(double h, int m, double sigma);

/// One projected explicit heat step on the torus: v = u + dt * Delta_h u, then v / |v|.
/// Throws BreakdownError carrying the lowest failing cell index.
Snapshot step(const Snapshot& s, double dt);

/// Sum over cells of |D^+ u|^2 h^m with forward differences.
double dirichlet_energy(const Snapshot& s);

/// max over cells of |D^+ u| (forward-difference gradient norm).
double max_forward_gradient(const Snapshot& s);

struct RunOptions {
  double dt = 0.0;  // 0 selects cfl_dt(h, m, sigma)
  double sigma = 0.25;
};

/// Steps from u0 to t_end recording every record_every-th state (u0 included). On projection
/// breakdown or a forward gradient above 1/h the run stops and the trajectory is flagged.
std::shared_ptr<SimulatedTrajectory> run(Snapshot u0, double t_end, int record_every,
                                         const RunOptions& opt = {});

/// Smooth seeded initial data: the pole e_n plus `modes` random low-frequency Fourier modes per
/// component with the given amplitude, projected to the sphere.
Snapshot random_smooth_data(const GridSpec& grid, int n, std::uint64_t seed, int modes = 3,
                            double amplitude = 0.5);

enum class AnalyticKind { kConstant, kStaticCone, kQuasistaticCone, kShrinkingProfile };

struct AnalyticParams {
  int m = 3;
  int n = 2;
  TargetVec p;       // constant value, or the value after truncation
  double time = 0.0; // truncation time T, or blow-up time T*
  std::shared_ptr<const ShrinkProfile> profile;
};

TrajectoryPtr make_analytic(AnalyticKind kind, const AnalyticParams& params);

}  // namespace qstrat
