#include "qstrat/regularity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>

#include "qstrat/parallel.hpp"

namespace qstrat {

std::string to_string(Binding b) {
  switch (b) {
    case Binding::kGradient: return "gradient";
    case Binding::kHessian: return "hessian";
    case Binding::kCap: return "cap";
    case Binding::kFloor: return "floor";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NodeValue {
  double rho = kInf;  // positive root of r a + r^2 b = 1
  bool gradient_binds = true;
};

NodeValue node_value(const Trajectory& traj, const SpaceTimePoint& Y) {
  const auto j = traj.jet(Y);
  const auto hn = traj.hessian_norm(Y);
  if (!j || !hn || !std::isfinite(*hn)) return {0.0, true};
  const double a = j->grad.norm();
  const double b = *hn;
  if (!std::isfinite(a)) return {0.0, true};
  NodeValue v;
  if (b <= 0.0) v.rho = a > 0.0 ? 1.0 / a : kInf;
  else v.rho = 2.0 / (a + std::sqrt(a * a + 4.0 * b));
  v.gradient_binds = !(b > 0.0) || a * v.rho >= b * v.rho * v.rho;
  return v;
}

/// Rectangular lattice origin + i h in space (index ranges per axis) times a list of time levels.
class Lattice {
 public:
  Lattice(int m, SpatialVec origin, double h, std::array<long, kMaxSpatialDim> lo,
          std::array<long, kMaxSpatialDim> count, std::vector<double> times)
      : m_(m), origin_(std::move(origin)), h_(h), lo_(lo), count_(count), times_(std::move(times)) {
    spatial_ = 1;
    for (int a = 0; a < m_; ++a) spatial_ *= static_cast<std::size_t>(count_[static_cast<std::size_t>(a)]);
  }

  std::size_t size() const { return spatial_ * times_.size(); }
  std::size_t spatial_size() const { return spatial_; }
  std::size_t levels() const { return times_.size(); }
  double time(std::size_t k) const { return times_[k]; }
  long count(int a) const { return count_[static_cast<std::size_t>(a)]; }
  long lo(int a) const { return lo_[static_cast<std::size_t>(a)]; }

  // Spatial index (absolute lattice indices) of a spatial flat offset.
  void indices(std::size_t s, std::array<long, kMaxSpatialDim>& idx) const {
    for (int a = m_ - 1; a >= 0; --a) {
      const auto c = static_cast<std::size_t>(count_[static_cast<std::size_t>(a)]);
      idx[static_cast<std::size_t>(a)] = lo_[static_cast<std::size_t>(a)] + static_cast<long>(s % c);
      s /= c;
    }
  }
  std::size_t spatial_flat(const std::array<long, kMaxSpatialDim>& idx) const {
    std::size_t s = 0;
    for (int a = 0; a < m_; ++a)
      s = s * static_cast<std::size_t>(count_[static_cast<std::size_t>(a)]) +
          static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] - lo_[static_cast<std::size_t>(a)]);
    return s;
  }
  SpatialVec position(const std::array<long, kMaxSpatialDim>& idx) const {
    SpatialVec x(m_);
    for (int a = 0; a < m_; ++a) x[a] = origin_[a] + static_cast<double>(idx[static_cast<std::size_t>(a)]) * h_;
    return x;
  }

  void fill(const Trajectory& traj) {
    values_.assign(size(), NodeValue{});
    parallel_for(size(), [&](std::size_t i) {
      std::array<long, kMaxSpatialDim> idx{};
      indices(i / levels(), idx);
      values_[i] = node_value(traj, SpaceTimePoint(position(idx), times_[i % levels()]));
    });
  }
  const NodeValue& value(std::size_t s, std::size_t k) const { return values_[s * levels() + k]; }

  int m() const { return m_; }
  double h() const { return h_; }

 private:
  int m_;
  SpatialVec origin_;
  double h_;
  std::array<long, kMaxSpatialDim> lo_;
  std::array<long, kMaxSpatialDim> count_;
  std::vector<double> times_;
  std::size_t spatial_ = 1;
  std::vector<NodeValue> values_;
};

struct SearchResult {
  double value = kInf;
  bool gradient_binds = true;
  std::size_t s = 0;  // minimizing node (spatial offset, level)
  std::size_t k = 0;
};

double node_distance(const SpatialVec& x, double t, const SpatialVec& y, double s) {
  return std::max((x - y).norm(), std::sqrt(std::abs(t - s)));
}

// Full scan: min over nodes of max(d(X, Y), rho_Y).
SearchResult scan_all(const Lattice& L, const SpaceTimePoint& X) {
  SearchResult best;
  std::array<long, kMaxSpatialDim> idx{};
  for (std::size_t s = 0; s < L.spatial_size(); ++s) {
    L.indices(s, idx);
    const SpatialVec y = L.position(idx);
    const double dx = (y - X.x).norm();
    if (dx >= best.value) continue;
    for (std::size_t k = 0; k < L.levels(); ++k) {
      const auto& v = L.value(s, k);
      const double c = std::max(std::max(dx, std::sqrt(std::abs(L.time(k) - X.t))), v.rho);
      if (c < best.value) best = {c, v.gradient_binds, s, k};
    }
  }
  return best;
}

struct Probe {
  SpatialVec origin;  // lattice origin
  double h;
  bool recorded;
  bool single_level;
  double dt;
};

Probe make_probe(const Trajectory& traj, const SpaceTimePoint& X, const RegularityOptions& opt, double R_max) {
  Probe p{};
  if (!traj.analytic() && traj.spacing() > 0.0) {
    const auto* sim = dynamic_cast<const SimulatedTrajectory*>(&traj);
    if (!sim) throw PreconditionError("recorded trajectory without a grid");
    p.origin = sim->grid().origin;
    p.h = sim->grid().h;
    p.recorded = true;
    p.single_level = sim->snapshots().size() == 1;
    p.dt = sim->record_interval();
    return p;
  }
  if (!(opt.probe_step > 0.0)) throw PreconditionError("closed-form fields need a positive probe step");
  p.origin = X.x;
  p.h = opt.probe_step;
  p.recorded = false;
  p.single_level = traj.static_on(X.t - R_max * R_max, X.t + R_max * R_max);
  p.dt = opt.probe_dt > 0.0 ? opt.probe_dt : opt.probe_step * opt.probe_step;
  return p;
}

std::vector<double> time_levels(const Trajectory& traj, const Probe& p, double t, double radius) {
  if (p.single_level) return {t};
  const double span = radius * radius;
  std::vector<double> out;
  if (p.recorded) {
    const auto* sim = static_cast<const SimulatedTrajectory*>(&traj);
    for (const auto& s : sim->snapshots())
      if (std::abs(s.t - t) < span) out.push_back(s.t);
    if (out.empty()) throw RangeViolation("probe time outside the recorded range");
    return out;
  }
  const auto n = static_cast<long>(std::ceil(span / p.dt));
  for (long k = -n; k <= n; ++k) {
    const double s = t + static_cast<double>(k) * p.dt;
    if (std::abs(s - t) < span && s >= traj.t_min() && s <= traj.t_max()) out.push_back(s);
  }
  return out;
}

Lattice box_lattice(const Trajectory& traj, const Probe& p, const SpaceTimePoint& X, double radius) {
  const int m = traj.m();
  std::array<long, kMaxSpatialDim> lo{}, count{};
  for (int a = 0; a < m; ++a) {
    const double c = (X.x[a] - p.origin[a]) / p.h;
    const auto first = static_cast<long>(std::floor(c - radius / p.h));
    const auto last = static_cast<long>(std::ceil(c + radius / p.h));
    lo[static_cast<std::size_t>(a)] = first;
    count[static_cast<std::size_t>(a)] = last - first + 1;
  }
  return Lattice(m, p.origin, p.h, lo, count, time_levels(traj, p, X.t, radius));
}

RegularityRecord finish(const SpaceTimePoint& X, SearchResult r, double floor, double R_max, std::uint64_t nodes) {
  RegularityRecord rec;
  rec.X = X;
  rec.nodes = nodes;
  if (r.value >= R_max) {
    rec.r_u = R_max;
    rec.binding = Binding::kCap;
  } else if (r.value < floor) {
    rec.r_u = floor;
    rec.binding = Binding::kFloor;
  } else {
    rec.r_u = r.value;
    rec.binding = r.gradient_binds ? Binding::kGradient : Binding::kHessian;
  }
  return rec;
}

}  // namespace

RegularityRecord regularity_scale(const Trajectory& traj, const SpaceTimePoint& X, double R_max,
                                  const RegularityOptions& opt) {
  if (!(R_max > 0.0)) throw PreconditionError("R_max must be positive");
  const Probe p = make_probe(traj, X, opt, R_max);
  const double floor = std::min(4.0 * p.h, R_max);
  double radius = std::min(8.0 * p.h, R_max);
  std::uint64_t nodes = 0;
  for (;;) {
    Lattice L = box_lattice(traj, p, X, radius);
    L.fill(traj);
    nodes += L.size();
    const SearchResult r = scan_all(L, X);
    // Nodes outside the box lie at distance >= radius, so a value below it is final.
    if (r.value < radius || radius >= R_max) return finish(X, r, floor, R_max, nodes);
    radius = std::min(2.0 * radius, R_max);
  }
}

double static_reg_scale(const Snapshot& snap, const SpatialVec& x, double R_max) {
  const double cap = std::min(1.0, R_max);
  SimulatedTrajectory traj({snap}, 0.0, 1);
  return regularity_scale(traj, SpaceTimePoint(x, snap.t), cap).r_u;
}

std::vector<std::size_t> bad_set(const Trajectory& traj, double r, std::span<const SpaceTimePoint> cloud,
                                 const RegularityOptions& opt) {
  if (!(r > 0.0)) throw PreconditionError("bad-set radius must be positive");
  std::vector<std::uint8_t> bad(cloud.size(), 0);
  // Capping at 2r keeps the search local without changing the test r_u <= r.
  parallel_for(cloud.size(), [&](std::size_t i) {
    bad[i] = regularity_scale(traj, cloud[i], 2.0 * r, opt).r_u <= r ? 1 : 0;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (bad[i]) out.push_back(i);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr long kBlock = 4;

struct Block {
  std::array<long, kMaxSpatialDim> lo{};
  std::array<long, kMaxSpatialDim> hi{};  // inclusive
  std::size_t k_lo = 0, k_hi = 0;         // inclusive time levels
  double min_rho = kInf;
};

class BlockIndex {
 public:
  explicit BlockIndex(const Lattice& L) : L_(L) {
    const int m = L.m();
    total_ = 1;
    for (int a = 0; a < m; ++a) {
      nb_[static_cast<std::size_t>(a)] = (L.count(a) + kBlock - 1) / kBlock;
      total_ *= static_cast<std::size_t>(nb_[static_cast<std::size_t>(a)]);
    }
    nbt_ = (L.levels() + static_cast<std::size_t>(kBlock) - 1) / static_cast<std::size_t>(kBlock);
    blocks_.resize(total_ * nbt_);
    for (std::size_t b = 0; b < total_; ++b) {
      std::array<long, kMaxSpatialDim> bi{};
      std::size_t rest = b;
      for (int a = m - 1; a >= 0; --a) {
        const auto c = static_cast<std::size_t>(nb_[static_cast<std::size_t>(a)]);
        bi[static_cast<std::size_t>(a)] = static_cast<long>(rest % c);
        rest /= c;
      }
      for (std::size_t bt = 0; bt < nbt_; ++bt) {
        Block& blk = blocks_[b * nbt_ + bt];
        for (int a = 0; a < m; ++a) {
          const auto ua = static_cast<std::size_t>(a);
          blk.lo[ua] = L.lo(a) + bi[ua] * kBlock;
          blk.hi[ua] = std::min(blk.lo[ua] + kBlock - 1, L.lo(a) + L.count(a) - 1);
        }
        blk.k_lo = bt * static_cast<std::size_t>(kBlock);
        blk.k_hi = std::min(blk.k_lo + static_cast<std::size_t>(kBlock) - 1, L.levels() - 1);
      }
    }
    parallel_for(blocks_.size(), [&](std::size_t i) {
      Block& blk = blocks_[i];
      for_each_node(blk, [&](std::size_t s, std::size_t k) { blk.min_rho = std::min(blk.min_rho, L_.value(s, k).rho); });
    });
  }

  template <class F>
  void for_each_node(const Block& blk, F&& f) const {
    const int m = L_.m();
    std::array<long, kMaxSpatialDim> idx = blk.lo;
    for (;;) {
      const std::size_t s = L_.spatial_flat(idx);
      for (std::size_t k = blk.k_lo; k <= blk.k_hi; ++k) f(s, k);
      int a = m - 1;
      while (a >= 0) {
        const auto ua = static_cast<std::size_t>(a);
        if (++idx[ua] <= blk.hi[ua]) break;
        idx[ua] = blk.lo[ua];
        --a;
      }
      if (a < 0) break;
    }
  }

  void consider(std::size_t i, const SpaceTimePoint& X, double bound,
                std::vector<std::pair<double, std::size_t>>& todo) const {
    const Block& blk = blocks_[i];
    if (!(blk.min_rho < bound)) return;
    const double h = L_.h();
    const SpatialVec corner = L_.position(blk.lo);
    double sq = 0.0;
    for (int a = 0; a < L_.m(); ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double x1 = corner[a] + static_cast<double>(blk.hi[ua] - blk.lo[ua]) * h;
      const double gap = std::max({0.0, corner[a] - X.x[a], X.x[a] - x1});
      sq += gap * gap;
    }
    const double tgap = std::max({0.0, L_.time(blk.k_lo) - X.t, X.t - L_.time(blk.k_hi)});
    const double lb = std::max({std::sqrt(sq), std::sqrt(tgap), blk.min_rho});
    if (lb < bound) todo.emplace_back(lb, i);
  }

  // min over nodes of max(d(X, Y), rho_Y), starting from an upper bound.
  // The seed must be attained by its node, so the result is exact for any valid seed.
  SearchResult search(const SpaceTimePoint& X, SearchResult best) const {
    const int m = L_.m();
    const double h = L_.h();
    const double upper = best.value;
    // Only blocks meeting the box of half-width `upper` around X can contribute.
    std::array<long, kMaxSpatialDim> blo{}, bhi{};
    const SpatialVec origin = L_.position(std::array<long, kMaxSpatialDim>{});
    for (int a = 0; a < m; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const double c = (X.x[a] - origin[a]) / h - static_cast<double>(L_.lo(a));
      blo[ua] = std::max(0L, static_cast<long>(std::floor((c - upper / h) / kBlock)));
      bhi[ua] = std::min(nb_[ua] - 1, static_cast<long>(std::floor((c + upper / h) / kBlock)));
      if (blo[ua] > bhi[ua]) return best;
    }
    std::vector<std::pair<double, std::size_t>> todo;
    std::array<long, kMaxSpatialDim> bi = blo;
    for (;;) {
      std::size_t b = 0;
      for (int a = 0; a < m; ++a) b = b * static_cast<std::size_t>(nb_[static_cast<std::size_t>(a)]) +
                                      static_cast<std::size_t>(bi[static_cast<std::size_t>(a)]);
      for (std::size_t bt = 0; bt < nbt_; ++bt) consider(b * nbt_ + bt, X, best.value, todo);
      int a = m - 1;
      while (a >= 0) {
        const auto ua = static_cast<std::size_t>(a);
        if (++bi[ua] <= bhi[ua]) break;
        bi[ua] = blo[ua];
        --a;
      }
      if (a < 0) break;
    }
    std::sort(todo.begin(), todo.end());
    std::array<long, kMaxSpatialDim> idx{};
    for (const auto& [lb, i] : todo) {
      if (!(lb < best.value)) break;
      for_each_node(blocks_[i], [&](std::size_t s, std::size_t k) {
        const auto& v = L_.value(s, k);
        if (!(v.rho < best.value)) return;
        L_.indices(s, idx);
        const double c = std::max(node_distance(X.x, X.t, L_.position(idx), L_.time(k)), v.rho);
        if (c < best.value) best = {c, v.gradient_binds, s, k};
      });
    }
    return best;
  }

 private:
  const Lattice& L_;
  std::array<long, kMaxSpatialDim> nb_{};
  std::size_t total_ = 1;
  std::size_t nbt_ = 1;
  std::vector<Block> blocks_;
};

}  // namespace

LpIntegral lp_reciprocal_integral(const Trajectory& traj, double p, double R_max, const GridSpec& grid,
                                  const TimeAxis& time) {
  if (!(p > 0.0)) throw PreconditionError("p must be positive");
  if (!(R_max > 0.0)) throw PreconditionError("R_max must be positive");
  if (grid.m != traj.m()) throw DimensionMismatch("grid dimension does not match the trajectory");
  const int m = grid.m;
  const double h = grid.h;

  // Sample times and their weights.
  std::vector<double> sample_t;
  double weight_t = time.dt;
  std::vector<double> levels;
  if (const auto* sim = dynamic_cast<const SimulatedTrajectory*>(&traj); sim && !traj.analytic()) {
    if (!sim->grid().same_layout(grid)) throw PreconditionError("recorded trajectories are integrated on their own grid");
    for (const auto& s : sim->snapshots()) {
      levels.push_back(s.t);
      if (s.t >= time.t0 && s.t <= time.end()) sample_t.push_back(s.t);
    }
    weight_t = sim->record_interval() > 0.0 ? sim->record_interval() : time.end() - time.t0;
  } else {
    const bool single = traj.static_on(time.t0 - R_max * R_max, time.end() + R_max * R_max);
    if (single) {
      sample_t.push_back(time.center(0));
      levels.push_back(time.center(0));
      weight_t = time.end() - time.t0;
    } else {
      for (int k = 0; k < time.n; ++k) sample_t.push_back(time.center(k));
      const auto margin = static_cast<long>(std::ceil(R_max * R_max / time.dt));
      for (long k = -margin; k < time.n + margin; ++k) {
        const double s = time.t0 + (static_cast<double>(k) + 0.5) * time.dt;
        if (s >= traj.t_min() && s <= traj.t_max()) levels.push_back(s);
      }
    }
  }
  LpIntegral out;
  if (sample_t.empty()) return out;

  // r_u(X) <= rho_X, so the lattice only needs a margin of max_X min(R_max, rho_X).
  double reach = 0.0;
  {
    std::array<long, kMaxSpatialDim> lo{}, count{};
    for (int a = 0; a < m; ++a) count[static_cast<std::size_t>(a)] = grid.n_cells;
    Lattice inner(m, grid.origin, h, lo, count, sample_t);
    inner.fill(traj);
    for (std::size_t s = 0; s < inner.spatial_size(); ++s)
      for (std::size_t k = 0; k < inner.levels(); ++k) reach = std::max(reach, std::min(R_max, inner.value(s, k).rho));
  }
  const auto margin = static_cast<long>(std::ceil(reach / h));
  std::erase_if(levels, [&](double s) {
    return std::none_of(sample_t.begin(), sample_t.end(), [&](double t) { return std::abs(s - t) <= reach * reach; });
  });
  std::array<long, kMaxSpatialDim> lo{}, count{};
  for (int a = 0; a < m; ++a) {
    lo[static_cast<std::size_t>(a)] = -margin;
    count[static_cast<std::size_t>(a)] = grid.n_cells + 2 * margin;
  }
  Lattice L(m, grid.origin, h, lo, count, levels);
  L.fill(traj);
  const BlockIndex index(L);

  const double floor = std::min(4.0 * h, R_max);
  const std::size_t cells = grid.cell_count();
  const std::size_t n = cells * sample_t.size();
  std::vector<double> contrib(n, 0.0);
  std::vector<std::uint8_t> state(n, 0);
  // Rows along the last axis run sequentially so each search starts from the previous
  // minimizer, whose value at the new point is a tight attained upper bound.
  const auto row = static_cast<std::size_t>(grid.n_cells);
  const std::size_t levels_n = sample_t.size();
  parallel_for(n / row, [&](std::size_t r) {
    const std::size_t k_slot = r % levels_n;
    const std::size_t first_cell = (r / levels_n) * row;
    const double t = sample_t[k_slot];
    const auto level = static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), t) - levels.begin());
    std::optional<SearchResult> prev;
    std::array<int, kMaxSpatialDim> gi{};
    std::array<long, kMaxSpatialDim> li{};
    for (std::size_t c = 0; c < row; ++c) {
      const std::size_t cell = first_cell + c;
      const std::size_t i = cell * levels_n + k_slot;
      const SpaceTimePoint X(grid.node(cell), t);
      grid.unflatten(cell, std::span<int>(gi.data(), static_cast<std::size_t>(m)));
      for (int a = 0; a < m; ++a) li[static_cast<std::size_t>(a)] = gi[static_cast<std::size_t>(a)];
      const std::size_t own_s = L.spatial_flat(li);
      const NodeValue& own = L.value(own_s, level);
      SearchResult seed{own.rho, own.gradient_binds, own_s, level};
      if (prev) {
        std::array<long, kMaxSpatialDim> pi{};
        L.indices(prev->s, pi);
        const double v = std::max(node_distance(X.x, X.t, L.position(pi), L.time(prev->k)), L.value(prev->s, prev->k).rho);
        if (v < seed.value) seed = {v, L.value(prev->s, prev->k).gradient_binds, prev->s, prev->k};
      }
      const SearchResult res = seed.value > R_max ? index.search(X, SearchResult{R_max, true, own_s, level}) : index.search(X, seed);
      if (res.value < R_max || seed.value <= R_max) prev = res;
      else prev.reset();
      double ru = std::min(res.value, R_max);
      if (ru >= R_max) state[i] = 2;
      if (ru < floor) {
        ru = floor;
        state[i] = 1;
      }
      contrib[i] = std::pow(ru, -p);
    }
  });
  const double cell_volume = std::pow(h, m) * weight_t;
  out.value = deterministic_sum(n, [&](std::size_t i) { return contrib[i]; }) * cell_volume;
  out.cells = n;
  std::size_t floored = 0, capped = 0;
  for (auto s : state) {
    floored += s == 1 ? 1 : 0;
    capped += s == 2 ? 1 : 0;
  }
  out.floor_fraction = static_cast<double>(floored) / static_cast<double>(n);
  out.cap_fraction = static_cast<double>(capped) / static_cast<double>(n);
  return out;
}

}  // namespace qstrat
