#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "qstrat/trajectory.hpp"
#include "qstrat/types.hpp"

namespace qstrat {

/// Fixed cell-centered sample layout over P_1(0) = B_1(0) x (-1, 1). Samples are
/// ordered slice by slice; within a slice spatial cells follow row-major order.
class WindowGrid {
 public:
  WindowGrid(int m, int w_cells = 17, int w_t = 17);

  int m() const { return m_; }
  int w_cells() const { return w_cells_; }
  int w_t() const { return w_t_; }
  std::size_t size() const { return slice_.size(); }
  std::size_t per_slice() const { return offsets_.size(); }
  const SpatialVec& x(std::size_t i) const { return offsets_[i % offsets_.size()]; }
  double t(std::size_t i) const { return times_[static_cast<std::size_t>(slice_[i])]; }
  int slice(std::size_t i) const { return slice_[i]; }
  double slice_time(int k) const { return times_[static_cast<std::size_t>(k)]; }
  double spatial_step() const { return 2.0 / w_cells_; }
  double time_step() const { return 2.0 / w_t_; }
  /// Sample index one step along an axis (axis == m means time), or -1 outside P_1.
  long neighbor(std::size_t i, int axis, int dir) const;
  /// Exact Vol(P_1).
  double volume() const;
  bool same_as(const WindowGrid& o) const { return m_ == o.m_ && w_cells_ == o.w_cells_ && w_t_ == o.w_t_; }

 private:
  int m_;
  int w_cells_;
  int w_t_;
  std::vector<SpatialVec> offsets_;
  std::vector<double> times_;
  std::vector<int> slice_;
  std::vector<long> neighbors_;  // per spatial cell: 2m entries
};

using WindowGridPtr = std::shared_ptr<const WindowGrid>;

/// Samples of u_{X,s}(x, t) = u(x0 + s x, t0 + s^2 t) on a WindowGrid.
struct Window {
  SpaceTimePoint base;
  double scale = 1.0;
  WindowGridPtr grid;
  int components = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  Window() = default;
  Window(WindowGridPtr g, int comps);

  std::size_t size() const { return valid.size(); }
  TargetVec value(std::size_t i) const;
  void set(std::size_t i, const TargetVec& v);
  double masked_fraction() const;
};

struct WindowOptions {
  double max_masked_fraction = 0.05;
};

/// Throws RangeViolation if the time span leaves the recorded range, PreconditionError if s
/// exceeds a quarter period, WindowRejected if too many samples are masked.
Window sample_window(const Trajectory& traj, const SpaceTimePoint& X, double s, WindowGridPtr grid,
                     const WindowOptions& opt = {});

/// Vol(P_1) times the mean of |a - b|^2 over jointly valid samples.
double l2_distance_sq(const Window& a, const Window& b);

}  // namespace qstrat
