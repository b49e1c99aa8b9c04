#include "qstrat/windows.hpp"

#include <array>
#include <cmath>

#include "qstrat/geometry.hpp"
#include "qstrat/parallel.hpp"

namespace qstrat {

WindowGrid::WindowGrid(int m, int w_cells, int w_t) : m_(m), w_cells_(w_cells), w_t_(w_t) {
  if (m < 1 || m > kMaxSpatialDim) throw DimensionMismatch("window dimension must lie in [1, 4]");
  if (w_cells < 1 || w_t < 1 || w_cells % 2 == 0 || w_t % 2 == 0)
    throw PreconditionError("window resolutions must be odd and positive");
  const double dx = spatial_step();
  std::vector<long> full_to_cell;
  std::size_t full = 1;
  for (int a = 0; a < m; ++a) full *= static_cast<std::size_t>(w_cells);
  full_to_cell.assign(full, -1);
  std::vector<std::array<int, kMaxSpatialDim>> cell_idx;
  for (std::size_t f = 0; f < full; ++f) {
    std::array<int, kMaxSpatialDim> idx{};
    std::size_t rest = f;
    for (int a = m - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = static_cast<int>(rest % static_cast<std::size_t>(w_cells));
      rest /= static_cast<std::size_t>(w_cells);
    }
    SpatialVec x(m);
    for (int a = 0; a < m; ++a) x[a] = -1.0 + (idx[static_cast<std::size_t>(a)] + 0.5) * dx;
    if (x.squaredNorm() < 1.0) {
      full_to_cell[f] = static_cast<long>(offsets_.size());
      offsets_.push_back(x);
      cell_idx.push_back(idx);
    }
  }
  neighbors_.assign(offsets_.size() * 2 * static_cast<std::size_t>(m), -1);
  for (std::size_t c = 0; c < offsets_.size(); ++c) {
    for (int a = 0; a < m; ++a) {
      for (int d = 0; d < 2; ++d) {
        auto idx = cell_idx[c];
        idx[static_cast<std::size_t>(a)] += d ? 1 : -1;
        const int v = idx[static_cast<std::size_t>(a)];
        if (v < 0 || v >= w_cells) continue;
        std::size_t f = 0;
        for (int b = 0; b < m; ++b) f = f * static_cast<std::size_t>(w_cells) + static_cast<std::size_t>(idx[static_cast<std::size_t>(b)]);
        neighbors_[c * 2 * static_cast<std::size_t>(m) + 2 * static_cast<std::size_t>(a) + static_cast<std::size_t>(d)] = full_to_cell[f];
      }
    }
  }
  const double dt = time_step();
  for (int k = 0; k < w_t; ++k) times_.push_back(-1.0 + (k + 0.5) * dt);
  for (int k = 0; k < w_t; ++k)
    for (std::size_t c = 0; c < offsets_.size(); ++c) slice_.push_back(k);
}

long WindowGrid::neighbor(std::size_t i, int axis, int dir) const {
  const std::size_t per = offsets_.size();
  const std::size_t c = i % per;
  const auto k = static_cast<long>(i / per);
  if (axis == m_) {
    const long kk = k + (dir > 0 ? 1 : -1);
    if (kk < 0 || kk >= w_t_) return -1;
    return kk * static_cast<long>(per) + static_cast<long>(c);
  }
  const long nb = neighbors_[c * 2 * static_cast<std::size_t>(m_) + 2 * static_cast<std::size_t>(axis) + (dir > 0 ? 1 : 0)];
  if (nb < 0) return -1;
  return k * static_cast<long>(per) + nb;
}

double WindowGrid::volume() const { return ball_volume(1.0, m_); }

Window::Window(WindowGridPtr g, int comps)
    : grid(std::move(g)), components(comps),
      values(grid->size() * static_cast<std::size_t>(comps), 0.0), valid(grid->size(), 0) {}

TargetVec Window::value(std::size_t i) const {
  TargetVec v(components);
  const std::size_t off = i * static_cast<std::size_t>(components);
  for (int c = 0; c < components; ++c) v[c] = values[off + static_cast<std::size_t>(c)];
  return v;
}

void Window::set(std::size_t i, const TargetVec& v) {
  const std::size_t off = i * static_cast<std::size_t>(components);
  for (int c = 0; c < components; ++c) values[off + static_cast<std::size_t>(c)] = v[c];
}

double Window::masked_fraction() const {
  if (valid.empty()) return 0.0;
  std::size_t bad = 0;
  for (auto v : valid) bad += v ? 0 : 1;
  return static_cast<double>(bad) / static_cast<double>(valid.size());
}

Window sample_window(const Trajectory& traj, const SpaceTimePoint& X, double s, WindowGridPtr grid,
                     const WindowOptions& opt) {
  if (!grid) throw PreconditionError("window grid missing");
  if (X.dim() != traj.m() || grid->m() != traj.m()) throw DimensionMismatch("window dimension mismatch");
  if (!(s > 0.0)) throw PreconditionError("window scale must be positive");
  const double s2 = s * s;
  const double tol = 1e-12 * std::max(1.0, std::abs(X.t));
  if (X.t - s2 < traj.t_min() - tol || X.t + s2 > traj.t_max() + tol)
    throw RangeViolation("window exceeds recorded time range");
  if (const auto per = traj.period(); per && s > *per / 4.0)
    throw PreconditionError("window scale exceeds a quarter of the torus period");
  Window w(grid, traj.components());
  w.base = X;
  w.scale = s;
  parallel_for(grid->size(), [&](std::size_t i) {
    SpaceTimePoint Y(X.x + s * grid->x(i), X.t + s2 * grid->t(i));
    if (const auto v = traj.value(Y)) {
      w.set(i, *v);
      w.valid[i] = 1;
    }
  });
  if (w.masked_fraction() > opt.max_masked_fraction) throw WindowRejected("window masked fraction exceeds threshold");
  return w;
}

double l2_distance_sq(const Window& a, const Window& b) {
  if (!a.grid || !b.grid || !a.grid->same_as(*b.grid) || a.components != b.components)
    throw PreconditionError("window grid mismatch");
  const std::size_t n = a.size();
  std::vector<double> terms(n, 0.0);
  std::size_t count = 0;
  const auto k = static_cast<std::size_t>(a.components);
  for (std::size_t i = 0; i < n; ++i) {
    if (!a.valid[i] || !b.valid[i]) continue;
    ++count;
    double d2 = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = a.values[i * k + c] - b.values[i * k + c];
      d2 += d * d;
    }
    terms[i] = d2;
  }
  if (count == 0) throw PreconditionError("windows share no valid samples");
  return a.grid->volume() * pairwise_sum(terms) / static_cast<double>(count);
}

}  // namespace qstrat
