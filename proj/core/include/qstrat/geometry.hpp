#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qstrat/types.hpp"

namespace qstrat {

enum class BallKind { kTwoSided, kBackward };

struct ParabolicBall {
  SpaceTimePoint center;
  double radius = 1.0;
  BallKind kind = BallKind::kTwoSided;

  bool contains(const SpaceTimePoint& y, std::optional<double> period = std::nullopt) const;
};

inline constexpr std::size_t kNoCell = static_cast<std::size_t>(-1);

/// Uniform grid over a periodic cube (torus) or a box. Nodes sit at origin + i*h.
struct GridSpec {
  int m = 1;
  int n_cells = 1;
  double h = 1.0;
  bool periodic = true;
  SpatialVec origin;

  GridSpec() = default;
  GridSpec(int m_in, int n_cells_in, double h_in, bool periodic_in = true);
  GridSpec(int m_in, int n_cells_in, double h_in, bool periodic_in, SpatialVec origin_in);

  double period() const { return n_cells * h; }
  std::optional<double> torus_period() const {
    return periodic ? std::optional<double>(period()) : std::nullopt;
  }
  std::size_t cell_count() const;
  /// Row-major: the last axis varies fastest.
  std::size_t flat_index(std::span<const int> idx) const;
  void unflatten(std::size_t flat, std::span<int> idx) const;
  SpatialVec node(std::size_t flat) const;
  std::size_t stride(int axis) const;
  /// Neighbor along an axis (dir = +1 or -1); kNoCell past a box boundary.
  std::size_t neighbor(std::size_t flat, int axis, int dir) const;
  bool same_layout(const GridSpec& other) const;
};

/// Uniform time cells [t0 + k dt, t0 + (k+1) dt), k < n.
struct TimeAxis {
  double t0 = 0.0;
  double dt = 1.0;
  int n = 1;

  double center(int k) const { return t0 + (k + 0.5) * dt; }
  double end() const { return t0 + n * dt; }
};

/// Minimum-image displacement component on a circle of the given period.
double wrap_delta(double d, double period);

double spatial_distance(const SpatialVec& x, const SpatialVec& y,
                        std::optional<double> period = std::nullopt);

double parabolic_distance(const SpaceTimePoint& a, const SpaceTimePoint& b,
                          std::optional<double> period = std::nullopt);

/// Lebesgue volume of the unit ball in R^m.
double unit_ball_volume(int m);

/// Volume of P_r: 2 * |B_1| * r^{m+2}.
double ball_volume(double r, int m);

/// Cell-center count of T_r(S) inside grid x time axis, times the cell volume.
/// Throws ResolutionError unless grid.h <= r/4 and time.dt <= r^2/4.
double tubular_volume(std::span<const SpaceTimePoint> points, double r, const GridSpec& grid,
                      const TimeAxis& time);

/// Number of counted cells behind tubular_volume.
std::uint64_t tubular_cell_count(std::span<const SpaceTimePoint> points, double r,
                                 const GridSpec& grid, const TimeAxis& time);

}  // namespace qstrat
