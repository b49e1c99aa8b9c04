#include "qstrat/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>

#include "qstrat/parallel.hpp"

namespace qstrat {

bool ParabolicBall::contains(const SpaceTimePoint& y, std::optional<double> period) const {
  if (spatial_distance(center.x, y.x, period) >= radius) return false;
  const double r2 = radius * radius;
  const double dt = y.t - center.t;
  if (kind == BallKind::kBackward) return dt > -r2 && dt <= 0.0;
  return std::abs(dt) < r2;
}

GridSpec::GridSpec(int m_in, int n_cells_in, double h_in, bool periodic_in)
    : GridSpec(m_in, n_cells_in, h_in, periodic_in, SpatialVec::Zero(m_in)) {}

GridSpec::GridSpec(int m_in, int n_cells_in, double h_in, bool periodic_in, SpatialVec origin_in)
    : m(m_in), n_cells(n_cells_in), h(h_in), periodic(periodic_in), origin(std::move(origin_in)) {
  if (m < 1 || m > kMaxSpatialDim) throw DimensionMismatch("grid dimension must lie in [1, 4]");
  if (n_cells < 1) throw PreconditionError("grid needs at least one cell per axis");
  if (!(h > 0.0)) throw PreconditionError("grid spacing must be positive");
  if (origin.size() != m) throw DimensionMismatch("grid origin dimension mismatch");
}

std::size_t GridSpec::cell_count() const {
  std::size_t c = 1;
  for (int i = 0; i < m; ++i) c *= static_cast<std::size_t>(n_cells);
  return c;
}

std::size_t GridSpec::flat_index(std::span<const int> idx) const {
  std::size_t f = 0;
  for (int a = 0; a < m; ++a) f = f * static_cast<std::size_t>(n_cells) + static_cast<std::size_t>(idx[a]);
  return f;
}

void GridSpec::unflatten(std::size_t flat, std::span<int> idx) const {
  const auto n = static_cast<std::size_t>(n_cells);
  for (int a = m - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
}

SpatialVec GridSpec::node(std::size_t flat) const {
  std::array<int, kMaxSpatialDim> idx{};
  unflatten(flat, idx);
  SpatialVec x(m);
  for (int a = 0; a < m; ++a) x[a] = origin[a] + idx[a] * h;
  return x;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int a = axis + 1; a < m; ++a) s *= static_cast<std::size_t>(n_cells);
  return s;
}

std::size_t GridSpec::neighbor(std::size_t flat, int axis, int dir) const {
  const std::size_t s = stride(axis);
  const auto n = static_cast<std::size_t>(n_cells);
  const std::size_t i = (flat / s) % n;
  if (dir > 0) {
    if (i + 1 < n) return flat + s;
    return periodic ? flat + s - n * s : kNoCell;
  }
  if (i > 0) return flat - s;
  return periodic ? flat + (n - 1) * s : kNoCell;
}

bool GridSpec::same_layout(const GridSpec& o) const {
  return m == o.m && n_cells == o.n_cells && h == o.h && periodic == o.periodic && origin == o.origin;
}

double wrap_delta(double d, double period) { return d - period * std::nearbyint(d / period); }

double spatial_distance(const SpatialVec& x, const SpatialVec& y, std::optional<double> period) {
  if (x.size() != y.size()) throw DimensionMismatch("points have different spatial dimensions");
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double d = x[i] - y[i];
    if (period) d = wrap_delta(d, *period);
    s += d * d;
  }
  return std::sqrt(s);
}

double parabolic_distance(const SpaceTimePoint& a, const SpaceTimePoint& b,
                          std::optional<double> period) {
  return std::max(spatial_distance(a.x, b.x, period), std::sqrt(std::abs(a.t - b.t)));
}

double unit_ball_volume(int m) {
  const double half = 0.5 * m;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

double ball_volume(double r, int m) {
  if (!(r > 0.0)) throw PreconditionError("ball radius must be positive");
  return 2.0 * unit_ball_volume(m) * std::pow(r, m + 2);
}

namespace {

using BucketKey = std::array<int, kMaxSpatialDim>;

// Number of time-cell centers strictly inside (a, b).
std::int64_t centers_inside(double a, double b, const TimeAxis& time) {
  const double lo = (a - time.t0) / time.dt - 0.5;
  const double hi = (b - time.t0) / time.dt - 0.5;
  std::int64_t k_lo = static_cast<std::int64_t>(std::floor(lo)) + 1;
  std::int64_t k_hi = static_cast<std::int64_t>(std::ceil(hi)) - 1;
  k_lo = std::max<std::int64_t>(k_lo, 0);
  k_hi = std::min<std::int64_t>(k_hi, time.n - 1);
  return std::max<std::int64_t>(0, k_hi - k_lo + 1);
}

struct BucketIndex {
  int m = 0;
  bool periodic = false;
  int nb = 0;  // buckets per axis on the torus
  double width = 0.0;
  std::map<BucketKey, std::vector<std::size_t>> buckets;

  BucketKey key_of(const SpatialVec& rel) const {
    BucketKey k{};
    for (int a = 0; a < m; ++a) {
      int b = static_cast<int>(std::floor(rel[a] / width));
      if (periodic) b = ((b % nb) + nb) % nb;
      k[a] = b;
    }
    return k;
  }
};

}  // namespace

std::uint64_t tubular_cell_count(std::span<const SpaceTimePoint> points, double r,
                                 const GridSpec& grid, const TimeAxis& time) {
  if (!(r > 0.0)) throw PreconditionError("tube radius must be positive");
  if (grid.h > r / 4.0 * (1.0 + 1e-12) || time.dt > r * r / 4.0 * (1.0 + 1e-12))
    throw ResolutionError("grid too coarse for tube radius: need h <= r/4 and dt <= r^2/4");
  if (points.empty()) return 0;
  const int m = grid.m;
  for (const auto& p : points)
    if (p.dim() != m) throw DimensionMismatch("point dimension differs from grid dimension");

  const double period = grid.period();
  BucketIndex index;
  index.m = m;
  index.periodic = grid.periodic;
  if (grid.periodic) {
    index.nb = std::max(1, static_cast<int>(std::floor(period / r)));
    index.width = period / index.nb;
  } else {
    index.width = r;
  }
  auto relative = [&](const SpatialVec& x) {
    SpatialVec rel = x - grid.origin;
    // Nodes sit at cell centers: shift by h/2 so cell i spans [i h, (i+1) h).
    rel.array() += 0.5 * grid.h;
    if (grid.periodic)
      for (int a = 0; a < m; ++a) rel[a] -= period * std::floor(rel[a] / period);
    return rel;
  };
  for (std::size_t i = 0; i < points.size(); ++i)
    index.buckets[index.key_of(relative(points[i].x))].push_back(i);

  // Candidate cells: every cell whose node lies within r of some bucket.
  std::vector<std::size_t> cells;
  for (const auto& entry : index.buckets) {
    const BucketKey& key = entry.first;
    std::array<int, kMaxSpatialDim> lo{}, hi{};
    bool empty = false;
    for (int a = 0; a < m; ++a) {
      lo[a] = static_cast<int>(std::floor((key[a] * index.width - r) / grid.h)) - 1;
      hi[a] = static_cast<int>(std::ceil(((key[a] + 1) * index.width + r) / grid.h)) + 1;
      if (grid.periodic) {
        if (hi[a] - lo[a] + 1 >= grid.n_cells) {
          lo[a] = 0;
          hi[a] = grid.n_cells - 1;
        }
      } else {
        lo[a] = std::max(lo[a], 0);
        hi[a] = std::min(hi[a], grid.n_cells - 1);
      }
      empty = empty || lo[a] > hi[a];
    }
    if (!empty) {
      std::array<int, kMaxSpatialDim> idx = lo;
      for (;;) {
        std::array<int, kMaxSpatialDim> w{};
        for (int a = 0; a < m; ++a)
          w[a] = grid.periodic ? ((idx[a] % grid.n_cells) + grid.n_cells) % grid.n_cells : idx[a];
        cells.push_back(grid.flat_index(std::span<const int>(w.data(), m)));
        int a = m - 1;
        while (a >= 0 && ++idx[a] > hi[a]) {
          idx[a] = lo[a];
          --a;
        }
        if (a < 0) break;
      }
    }
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());

  const auto per = grid.torus_period();
  const double r2 = r * r;
  std::vector<std::int64_t> counts(cells.size(), 0);
  parallel_for(cells.size(), [&](std::size_t c) {
    const SpatialVec xc = grid.node(cells[c]);
    const BucketKey home = index.key_of(relative(xc));
    std::vector<std::pair<double, double>> intervals;
    std::vector<BucketKey> visited;
    std::array<int, kMaxSpatialDim> off{};
    off.fill(-1);
    for (;;) {
      BucketKey k = home;
      for (int a = 0; a < m; ++a) {
        k[a] = home[a] + off[a];
        if (grid.periodic) k[a] = ((k[a] % index.nb) + index.nb) % index.nb;
      }
      if (std::find(visited.begin(), visited.end(), k) == visited.end()) {
        visited.push_back(k);
        if (auto it = index.buckets.find(k); it != index.buckets.end()) {
          for (std::size_t pi : it->second) {
            const auto& p = points[pi];
            if (spatial_distance(xc, p.x, per) < r) intervals.emplace_back(p.t - r2, p.t + r2);
          }
        }
      }
      int a = m - 1;
      while (a >= 0 && ++off[a] > 1) {
        off[a] = -1;
        --a;
      }
      if (a < 0) break;
    }
    if (intervals.empty()) return;
    std::sort(intervals.begin(), intervals.end());
    std::int64_t total = 0;
    double cur_a = intervals.front().first;
    double cur_b = intervals.front().second;
    for (std::size_t i = 1; i < intervals.size(); ++i) {
      if (intervals[i].first < cur_b) {
        cur_b = std::max(cur_b, intervals[i].second);
      } else {
        total += centers_inside(cur_a, cur_b, time);
        cur_a = intervals[i].first;
        cur_b = intervals[i].second;
      }
    }
    total += centers_inside(cur_a, cur_b, time);
    counts[c] = total;
  });
  std::uint64_t sum = 0;
  for (auto v : counts) sum += static_cast<std::uint64_t>(v);
  return sum;
}

double tubular_volume(std::span<const SpaceTimePoint> points, double r, const GridSpec& grid,
                      const TimeAxis& time) {
  const auto count = tubular_cell_count(points, r, grid, time);
  return static_cast<double>(count) * std::pow(grid.h, grid.m) * time.dt;
}

}  // namespace qstrat
