#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qstrat/candidates.hpp"
#include "qstrat/geometry.hpp"
#include "qstrat/regularity.hpp"
#include "qstrat/trajectory.hpp"
#include "qstrat/windows.hpp"

namespace qstrat {

// ---------------------------------------------------------------------------
// Recursive covering

/// A labeled point. member[b] is membership in S^j at radius R gamma^b (b = 0..beta_max);
/// bits[a - 1] is the scale bit T_a (a = 1..beta_max).
struct CoverPoint {
  SpaceTimePoint X;
  std::vector<std::uint8_t> member;
  std::vector<std::uint8_t> bits;
};

inline constexpr std::size_t kNoNode = static_cast<std::size_t>(-1);

struct CoverNode {
  SpaceTimePoint center;
  double radius = 0.0;
  int depth = 0;
  std::size_t point = 0;                // index of the center in the input
  std::size_t parent = kNoNode;
  std::vector<std::uint8_t> prefix;     // T^depth shared by the covered points
  bool good_scale = false;              // step from the parent used T_{depth-1} = 0
  int bad_steps = 0;                    // bad steps on the path from the root
  std::vector<std::size_t> children;
};

/// One recursion step: the covering of P(parent) intersected with one class T^{depth+1}.
struct StepRecord {
  std::size_t parent = 0;
  int depth = 0;  // parent depth
  std::uint8_t extension = 0;
  bool good = false;
  std::size_t children = 0;
};

struct CoverOptions {
  double gamma = 0.25;
  double R = 1.0;
  int beta_max = 3;
  std::optional<double> period;
};

struct CoverTree {
  CoverOptions options;
  std::vector<CoverNode> nodes;
  std::vector<std::size_t> roots;
  std::vector<std::size_t> per_depth;  // node count at each depth 0..beta_max
  std::vector<StepRecord> steps;
  int max_bad_steps = 0;  // Q': most bad steps along any root-to-leaf path
};

/// Greedy farthest-point selection: indices of centers such that every point lies within
/// distance < radius of one. Ties go to the lowest index.
std::vector<std::size_t> greedy_cover(std::span<const SpaceTimePoint> points, double radius,
                                      std::optional<double> period = std::nullopt);

/// Recursive covering of S^j intersected with the scale-bit classes. Depth-0 steps count as bad.
/// Throws PreconditionError when labels do not match beta_max.
CoverTree recursive_cover(std::span<const CoverPoint> points, const CoverOptions& opt);

struct CoverCalibration {
  int m = 0;
  double gamma = 0.0;
  std::size_t lattice_points = 0;
  std::size_t cover_count = 0;
  double c = 0.0;  // cover_count * gamma^(m+2)
};

/// Lattice filling P_1(0) with spatial spacing gamma/2 and time spacing gamma^2/2.
std::vector<SpaceTimePoint> full_ball_lattice(int m, double gamma);

/// Greedy cover of the full-ball lattice by balls of radius gamma. Cached per (m, gamma).
CoverCalibration calibrate_cover_constant(int m, double gamma);

/// Depth-wise comparison with c0 (c0 gamma^-(m+2))^Q' (c0 gamma^-j)^(depth-Q').
struct CoverBoundCheck {
  std::vector<double> bound;
  bool holds = true;
};

CoverBoundCheck check_cover_bound(const CoverTree& tree, int m, int j, double c0);

// ---------------------------------------------------------------------------
// Minkowski slope

struct SlopeFit {
  std::vector<double> radii;
  std::vector<double> volumes;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;   // root mean square of log residuals
  double dimension = 0.0;  // m + 2 - slope
};

/// Least-squares fit of log V against log r. Needs at least four positive volumes spanning
/// three octaves, else PreconditionError.
SlopeFit fit_power_law(std::span<const double> radii, std::span<const double> volumes, int m);

/// Tubular volumes of S at each radius on the region grid x time, refined per radius so that
/// h <= r/4 and dt <= r^2/4, then fit_power_law.
SlopeFit minkowski_fit(std::span<const SpaceTimePoint> S, std::span<const double> radii, const GridSpec& grid,
                       const TimeAxis& time);

// ---------------------------------------------------------------------------
// Perturbation and propagation

/// Base field plus a seeded tangential Gaussian perturbation of the given amplitude, projected
/// back to the sphere. Derivatives are those of the base field.
class NoisyTrajectory final : public Trajectory {
 public:
  NoisyTrajectory(TrajectoryPtr base, double amplitude, std::uint64_t seed);
  int m() const override { return base_->m(); }
  int n() const override { return base_->n(); }
  double t_min() const override { return base_->t_min(); }
  double t_max() const override { return base_->t_max(); }
  std::optional<double> period() const override { return base_->period(); }
  bool analytic() const override { return base_->analytic(); }
  double spacing() const override { return base_->spacing(); }
  std::string kind() const override { return "noisy_" + base_->kind(); }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;

 private:
  TrajectoryPtr base_;
  double amplitude_;
  std::uint64_t seed_;
};

struct PropagationResult {
  double distance = 0.0;
  bool selfsimilar = false;
  BestFit fit;
};

/// Fits window(Y, gamma) against static members whose plane contains V at level dim V + 2.
/// Throws PreconditionError unless W is a half-line plane and Y.t <= t_end - (2 gamma)^2.
PropagationResult quasistatic_propagation_check(const Trajectory& traj, const InvariancePlane& W,
                                                const SpaceTimePoint& Y, double gamma, double epsilon,
                                                const Dictionary& dict, WindowGridPtr grid,
                                                const WindowOptions& wopt = {});

// ---------------------------------------------------------------------------
// Selfsimilarity against regularity

struct CorrelationSample {
  SpaceTimePoint X;
  double r = 0.0;
  double distance = 0.0;  // best fit at level j, scale 2r
  double r_u = 0.0;
  bool determined = true;
};

struct CorrelationRow {
  double epsilon = 0.0;
  std::size_t close = 0;       // distance < epsilon
  std::size_t violations = 0;  // close and r_u < r
  double fraction = 0.0;       // violations over determined samples
};

struct CorrelationReport {
  int j = 0;
  std::vector<CorrelationSample> samples;
  std::vector<CorrelationRow> rows;
  std::size_t undetermined = 0;
};

/// scales holds one radius per point, or a single radius for all.
CorrelationReport eps_regularity_correlation(const Trajectory& traj, std::span<const SpaceTimePoint> cloud,
                                             std::span<const double> scales, int j,
                                             std::span<const double> epsilons, const Dictionary& dict,
                                             WindowGridPtr grid, const RegularityOptions& ropt = {},
                                             const WindowOptions& wopt = {});

}  // namespace qstrat
