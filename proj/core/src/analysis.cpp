#include "qstrat/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <utility>

#include "qstrat/parallel.hpp"

namespace qstrat {

std::vector<std::size_t> greedy_cover(std::span<const SpaceTimePoint> points, double radius,
                                      std::optional<double> period) {
  std::vector<std::size_t> centers;
  if (points.empty()) return centers;
  if (!(radius > 0.0)) throw PreconditionError("cover radius must be positive");
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  std::size_t next = 0;
  for (;;) {
    centers.push_back(next);
    const SpaceTimePoint c = points[next];
    for (std::size_t i = 0; i < points.size(); ++i)
      nearest[i] = std::min(nearest[i], parabolic_distance(points[i], c, period));
    next = static_cast<std::size_t>(std::max_element(nearest.begin(), nearest.end()) - nearest.begin());
    if (!(nearest[next] >= radius)) break;
  }
  return centers;
}

namespace {

bool prefix_matches(const CoverPoint& p, const std::vector<std::uint8_t>& prefix, std::uint8_t ext) {
  for (std::size_t a = 0; a < prefix.size(); ++a)
    if (p.bits[a] != prefix[a]) return false;
  return p.bits[prefix.size()] == ext;
}

struct PendingChild {
  std::size_t point;
  std::uint8_t extension;
};

struct StepResult {
  std::vector<PendingChild> children;
  std::size_t count[2] = {0, 0};
  bool nonempty[2] = {false, false};
};

}  // namespace

CoverTree recursive_cover(std::span<const CoverPoint> points, const CoverOptions& opt) {
  if (!(opt.gamma > 0.0 && opt.gamma < 0.5)) throw PreconditionError("scale ratio must satisfy 0<gamma<1/2");
  if (opt.beta_max < 0) throw PreconditionError("beta_max must be nonnegative");
  const auto depth_count = static_cast<std::size_t>(opt.beta_max + 1);
  for (const auto& p : points)
    if (p.member.size() != depth_count || p.bits.size() < static_cast<std::size_t>(opt.beta_max))
      throw PreconditionError("point labels do not match beta_max");

  CoverTree tree;
  tree.options = opt;
  tree.per_depth.assign(depth_count, 0);

  std::vector<std::size_t> level;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].member[0]) level.push_back(i);
  {
    std::vector<SpaceTimePoint> xs;
    for (auto i : level) xs.push_back(points[i].X);
    for (auto c : greedy_cover(xs, opt.R, opt.period)) {
      CoverNode node;
      node.center = xs[c];
      node.radius = opt.R;
      node.point = level[c];
      tree.roots.push_back(tree.nodes.size());
      tree.nodes.push_back(std::move(node));
    }
  }
  tree.per_depth[0] = tree.roots.size();

  // Candidates for a ball come from a time-sorted scan of [t - r^2, t + r^2].
  std::vector<std::size_t> by_time(points.size());
  std::iota(by_time.begin(), by_time.end(), std::size_t{0});
  std::stable_sort(by_time.begin(), by_time.end(),
                   [&](std::size_t a, std::size_t b) { return points[a].X.t < points[b].X.t; });
  std::vector<double> times(points.size());
  for (std::size_t k = 0; k < by_time.size(); ++k) times[k] = points[by_time[k]].X.t;

  std::vector<std::size_t> frontier = tree.roots;
  for (int beta = 0; beta < opt.beta_max; ++beta) {
    const double child_radius = opt.R * std::pow(opt.gamma, beta + 1);
    std::vector<StepResult> results(frontier.size());
    parallel_for(frontier.size(), [&](std::size_t f) {
      const CoverNode& parent = tree.nodes[frontier[f]];
      const ParabolicBall ball{parent.center, parent.radius, BallKind::kTwoSided};
      const double r2 = parent.radius * parent.radius;
      const auto lo = std::upper_bound(times.begin(), times.end(), parent.center.t - r2) - times.begin();
      const auto hi = std::lower_bound(times.begin(), times.end(), parent.center.t + r2) - times.begin();
      for (std::uint8_t ext : {std::uint8_t{0}, std::uint8_t{1}}) {
        std::vector<std::size_t> idx;
        for (auto k = lo; k < hi; ++k) {
          const std::size_t i = by_time[static_cast<std::size_t>(k)];
          const auto& p = points[i];
          if (p.member[static_cast<std::size_t>(beta + 1)] && prefix_matches(p, parent.prefix, ext) &&
              ball.contains(p.X, opt.period))
            idx.push_back(i);
        }
        if (idx.empty()) continue;
        std::sort(idx.begin(), idx.end());
        std::vector<SpaceTimePoint> xs;
        for (auto i : idx) xs.push_back(points[i].X);
        const auto centers = greedy_cover(xs, child_radius, opt.period);
        results[f].nonempty[ext] = true;
        results[f].count[ext] = centers.size();
        for (auto c : centers) results[f].children.push_back({idx[c], ext});
      }
    });
    std::vector<std::size_t> next;
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const std::size_t pi = frontier[f];
      // The centre lies in E_{T^beta}, so its bit T_beta is the last prefix entry.
      const bool good = beta >= 1 && tree.nodes[pi].prefix.back() == 0;
      for (std::uint8_t ext : {std::uint8_t{0}, std::uint8_t{1}})
        if (results[f].nonempty[ext]) tree.steps.push_back({pi, beta, ext, good, results[f].count[ext]});
      for (const auto& pc : results[f].children) {
        CoverNode node;
        node.center = points[pc.point].X;
        node.radius = child_radius;
        node.depth = beta + 1;
        node.point = pc.point;
        node.parent = pi;
        node.prefix = tree.nodes[pi].prefix;
        node.prefix.push_back(pc.extension);
        node.good_scale = good;
        node.bad_steps = tree.nodes[pi].bad_steps + (good ? 0 : 1);
        tree.max_bad_steps = std::max(tree.max_bad_steps, node.bad_steps);
        const std::size_t id = tree.nodes.size();
        tree.nodes[pi].children.push_back(id);
        tree.nodes.push_back(std::move(node));
        next.push_back(id);
      }
    }
    tree.per_depth[static_cast<std::size_t>(beta + 1)] = next.size();
    frontier = std::move(next);
  }
  return tree;
}

std::vector<SpaceTimePoint> full_ball_lattice(int m, double gamma) {
  if (m < 1 || m > kMaxSpatialDim) throw DimensionMismatch("dimension must lie in [1, 4]");
  if (!(gamma > 0.0 && gamma < 0.5)) throw PreconditionError("scale ratio must satisfy 0<gamma<1/2");
  const double hs = gamma / 2.0;
  const double ht = gamma * gamma / 2.0;
  const int ns = static_cast<int>(std::floor(1.0 / hs));
  const int nt = static_cast<int>(std::floor(1.0 / ht));
  std::vector<SpatialVec> spatial;
  std::vector<int> idx(static_cast<std::size_t>(m), -ns);
  for (;;) {
    SpatialVec x(m);
    for (int a = 0; a < m; ++a) x[a] = idx[static_cast<std::size_t>(a)] * hs;
    if (x.norm() < 1.0) spatial.push_back(x);
    int a = m - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] > ns) idx[static_cast<std::size_t>(a--)] = -ns;
    if (a < 0) break;
  }
  std::vector<SpaceTimePoint> out;
  for (int k = -nt; k <= nt; ++k) {
    const double t = k * ht;
    if (std::abs(t) >= 1.0) continue;
    for (const auto& x : spatial) out.emplace_back(x, t);
  }
  return out;
}

CoverCalibration calibrate_cover_constant(int m, double gamma) {
  static std::mutex mu;
  static std::map<std::pair<int, double>, CoverCalibration> cache;
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find({m, gamma}); it != cache.end()) return it->second;
  }
  const auto lattice = full_ball_lattice(m, gamma);
  CoverCalibration cal;
  cal.m = m;
  cal.gamma = gamma;
  cal.lattice_points = lattice.size();
  cal.cover_count = greedy_cover(lattice, gamma).size();
  cal.c = static_cast<double>(cal.cover_count) * std::pow(gamma, m + 2);
  std::lock_guard lock(mu);
  cache.emplace(std::pair{m, gamma}, cal);
  return cal;
}

CoverBoundCheck check_cover_bound(const CoverTree& tree, int m, int j, double c0) {
  CoverBoundCheck out;
  const double g = tree.options.gamma;
  for (std::size_t b = 0; b < tree.per_depth.size(); ++b) {
    const int beta = static_cast<int>(b);
    const int q = std::min(tree.max_bad_steps, beta);
    const double bound = c0 * std::pow(c0 * std::pow(g, -(m + 2)), q) * std::pow(c0 * std::pow(g, -j), beta - q);
    out.bound.push_back(bound);
    if (static_cast<double>(tree.per_depth[b]) > bound) out.holds = false;
  }
  return out;
}

// ---------------------------------------------------------------------------

SlopeFit fit_power_law(std::span<const double> radii, std::span<const double> volumes, int m) {
  if (radii.size() != volumes.size()) throw DimensionMismatch("radii and volumes differ in length");
  SlopeFit fit;
  fit.radii.assign(radii.begin(), radii.end());
  fit.volumes.assign(volumes.begin(), volumes.end());
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] > 0.0 && volumes[i] > 0.0) {
      lx.push_back(std::log(radii[i]));
      ly.push_back(std::log(volumes[i]));
    }
  if (lx.size() < 4) throw PreconditionError("need at least four radii with positive volume");
  const auto [lo, hi] = std::minmax_element(lx.begin(), lx.end());
  if (*hi - *lo < 3.0 * std::log(2.0) - 1e-12) throw PreconditionError("radii must span three octaves");
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += e * e;
  }
  fit.residual = std::sqrt(rss / n);
  fit.dimension = m + 2 - fit.slope;
  return fit;
}

SlopeFit minkowski_fit(std::span<const SpaceTimePoint> S, std::span<const double> radii, const GridSpec& grid,
                       const TimeAxis& time) {
  std::vector<double> volumes;
  for (double r : radii) {
    if (!(r > 0.0)) throw PreconditionError("radii must be positive");
    GridSpec g = grid;
    if (grid.h > r / 4.0) {
      const double length = grid.n_cells * grid.h;
      g.n_cells = static_cast<int>(std::ceil(length / (r / 4.0) - 1e-9));
      g.h = length / g.n_cells;
      g.origin = grid.origin.array() - 0.5 * grid.h + 0.5 * g.h;
    }
    TimeAxis ta = time;
    if (time.dt > r * r / 4.0) {
      const double length = time.n * time.dt;
      ta.n = static_cast<int>(std::ceil(length / (r * r / 4.0) - 1e-9));
      ta.dt = length / ta.n;
    }
    volumes.push_back(tubular_volume(S, r, g, ta));
  }
  return fit_power_law(radii, volumes, grid.m);
}

// ---------------------------------------------------------------------------

NoisyTrajectory::NoisyTrajectory(TrajectoryPtr base, double amplitude, std::uint64_t seed)
    : base_(std::move(base)), amplitude_(amplitude), seed_(seed) {
  if (!base_) throw PreconditionError("null base trajectory");
  if (!(amplitude >= 0.0)) throw PreconditionError("noise amplitude must be nonnegative");
}

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= h >> 31;
  h *= 0xbf58476d1ce4e5b9ULL;
  return h ^ (h >> 29);
}

}  // namespace

std::optional<TargetVec> NoisyTrajectory::value(const SpaceTimePoint& X) const {
  auto u = base_->value(X);
  if (!u || amplitude_ == 0.0) return u;
  std::uint64_t h = mix(0, seed_);
  for (int a = 0; a < X.dim(); ++a) h = mix(h, std::bit_cast<std::uint64_t>(X.x[a]));
  h = mix(h, std::bit_cast<std::uint64_t>(X.t));
  std::mt19937_64 rng(h);
  std::normal_distribution<double> normal;
  TargetVec g(u->size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = normal(rng);
  g -= g.dot(*u) * *u;
  TargetVec v = *u + amplitude_ * g;
  return TargetVec(v / v.norm());
}

std::optional<Jet> NoisyTrajectory::jet(const SpaceTimePoint& X) const {
  auto j = base_->jet(X);
  if (!j) return j;
  auto u = value(X);
  if (!u) return std::nullopt;
  j->u = *u;
  return j;
}

PropagationResult quasistatic_propagation_check(const Trajectory& traj, const InvariancePlane& W,
                                                const SpaceTimePoint& Y, double gamma, double epsilon,
                                                const Dictionary& dict, WindowGridPtr grid,
                                                const WindowOptions& wopt) {
  if (W.extent != TimeExtent::kHalfLine) throw PreconditionError("propagation needs a half-line plane");
  if (!(gamma > 0.0 && gamma < 0.5)) throw PreconditionError("scale ratio must satisfy 0<gamma<1/2");
  if (Y.t > W.t_end - 4.0 * gamma * gamma) throw PreconditionError("Y must satisfy s <= T - (2 gamma)^2");
  const Window w = sample_window(traj, Y, gamma, std::move(grid), wopt);
  PropagationResult out;
  out.fit = best_fit_static_containing(w, W.dim() + 2, W.V, dict);
  out.distance = out.fit.distance;
  out.selfsimilar = out.distance < epsilon;
  return out;
}

// ---------------------------------------------------------------------------

CorrelationReport eps_regularity_correlation(const Trajectory& traj, std::span<const SpaceTimePoint> cloud,
                                             std::span<const double> scales, int j,
                                             std::span<const double> epsilons, const Dictionary& dict,
                                             WindowGridPtr grid, const RegularityOptions& ropt,
                                             const WindowOptions& wopt) {
  if (scales.size() != 1 && scales.size() != cloud.size())
    throw DimensionMismatch("need one scale or one scale per point");
  CorrelationReport rep;
  rep.j = j;
  rep.samples.resize(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    auto& s = rep.samples[i];
    s.X = cloud[i];
    s.r = scales.size() == 1 ? scales[0] : scales[i];
    try {
      const Window w = sample_window(traj, s.X, 2.0 * s.r, grid, wopt);
      s.distance = distances_by_level(w, dict).at(static_cast<std::size_t>(j));
      RegularityOptions o = ropt;
      if (traj.analytic() && o.probe_step <= 0.0) o.probe_step = s.r / 32.0;
      s.r_u = regularity_scale(traj, s.X, 2.0 * s.r, o).r_u;
    } catch (const WindowRejected&) {
      s.determined = false;
    } catch (const RangeViolation&) {
      s.determined = false;
    }
  });
  std::size_t determined = 0;
  for (const auto& s : rep.samples) determined += s.determined ? 1 : 0;
  rep.undetermined = cloud.size() - determined;
  for (double eps : epsilons) {
    CorrelationRow row;
    row.epsilon = eps;
    for (const auto& s : rep.samples) {
      if (!s.determined || !(s.distance < eps)) continue;
      ++row.close;
      if (s.r_u < s.r) ++row.violations;
    }
    row.fraction = determined > 0 ? static_cast<double>(row.violations) / static_cast<double>(determined) : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace qstrat
