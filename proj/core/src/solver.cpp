#include "qstrat/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "qstrat/parallel.hpp"
#include "qstrat/target.hpp"

namespace qstrat {

double cfl_dt(double h, int m, double sigma) {
  if (!(sigma > 0.0 && sigma <= 0.5)) throw PreconditionError("CFL safety factor must lie in (0, 0.5]");
  if (!(h > 0.0) || m < 1) throw PreconditionError("bad grid for CFL step");
  return sigma * h * h / (2.0 * m);
}

Snapshot step(const Snapshot& s, double dt) {
  const GridSpec& g = s.grid;
  if (!g.periodic) throw PreconditionError("the flow solver runs on periodic grids only");
  if (!(dt > 0.0) || dt > cfl_dt(g.h, g.m, 0.5) * (1.0 + 1e-12))
    throw PreconditionError("time step violates the CFL bound");
  const int k = s.components();
  const double coef = dt / (g.h * g.h);
  Snapshot out(g, s.n, s.t + dt);
  std::atomic<std::size_t> failed{kNoCell};
  parallel_for(s.cell_count(), [&](std::size_t c) {
    const auto u = s.at(c);
    double v[kMaxComponents];
    for (int i = 0; i < k; ++i) v[i] = u[static_cast<std::size_t>(i)] * (1.0 - 2.0 * g.m * coef);
    for (int a = 0; a < g.m; ++a) {
      const auto up = s.at(g.neighbor(c, a, +1));
      const auto um = s.at(g.neighbor(c, a, -1));
      for (int i = 0; i < k; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        v[i] += coef * (up[ii] + um[ii]);
      }
    }
    double nrm = 0.0;
    for (int i = 0; i < k; ++i) nrm += v[i] * v[i];
    nrm = std::sqrt(nrm);
    if (!(nrm > kProjectionFloor)) {
      std::size_t prev = failed.load();
      while (c < prev && !failed.compare_exchange_weak(prev, c)) {
      }
      return;
    }
    auto dst = out.at(c);
    for (int i = 0; i < k; ++i) dst[static_cast<std::size_t>(i)] = v[i] / nrm;
  });
  if (failed.load() != kNoCell)
    throw BreakdownError("projection breakdown at cell " + std::to_string(failed.load()), failed.load());
  return out;
}

namespace {

double forward_sq(const Snapshot& s, std::size_t c) {
  const auto u = s.at(c);
  double sum = 0.0;
  for (int a = 0; a < s.grid.m; ++a) {
    const std::size_t nb = s.grid.neighbor(c, a, +1);
    if (nb == kNoCell) continue;
    const auto w = s.at(nb);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = w[i] - u[i];
      sum += d * d;
    }
  }
  return sum;
}

}  // namespace

double dirichlet_energy(const Snapshot& s) {
  const double scale = std::pow(s.grid.h, s.grid.m - 2);
  return scale * deterministic_sum(s.cell_count(), [&](std::size_t c) { return forward_sq(s, c); });
}

double max_forward_gradient(const Snapshot& s) {
  std::vector<double> per(s.cell_count());
  parallel_for(per.size(), [&](std::size_t c) { per[c] = forward_sq(s, c); });
  const double mx = per.empty() ? 0.0 : *std::max_element(per.begin(), per.end());
  return std::sqrt(mx) / s.grid.h;
}

std::shared_ptr<SimulatedTrajectory> run(Snapshot u0, double t_end, int record_every, const RunOptions& opt) {
  if (!(t_end > u0.t)) throw PreconditionError("run needs t_end beyond the initial time");
  if (record_every < 1) throw PreconditionError("record_every must be positive");
  u0.validate();
  const double dt = opt.dt > 0.0 ? opt.dt : cfl_dt(u0.grid.h, u0.grid.m, opt.sigma);
  const auto steps = static_cast<long>(std::ceil((t_end - u0.t) / dt - 1e-9));
  const double t0 = u0.t;
  std::vector<Snapshot> recorded;
  recorded.push_back(u0);
  Snapshot cur = std::move(u0);
  bool blown = false;
  std::optional<double> breakdown_time;
  std::optional<std::size_t> breakdown_cell;
  for (long i = 1; i <= steps; ++i) {
    try {
      cur = step(cur, dt);
    } catch (const BreakdownError& e) {
      blown = true;
      breakdown_time = cur.t + dt;
      breakdown_cell = e.cell();
      break;
    }
    cur.t = t0 + static_cast<double>(i) * dt;
    if (max_forward_gradient(cur) > 1.0 / cur.grid.h) {
      blown = true;
      breakdown_time = cur.t;
      break;
    }
    if (i % record_every == 0) recorded.push_back(cur);
  }
  auto traj = std::make_shared<SimulatedTrajectory>(std::move(recorded), dt, record_every);
  traj->blown_up = blown;
  traj->breakdown_time = breakdown_time;
  traj->breakdown_cell = breakdown_cell;
  return traj;
}

Snapshot random_smooth_data(const GridSpec& grid, int n, std::uint64_t seed, int modes, double amplitude) {
  if (n < 1 || n + 1 > kMaxComponents) throw PreconditionError("target dimension out of range");
  if (modes < 0 || !(amplitude >= 0.0)) throw PreconditionError("bad mode count or amplitude");
  struct Mode {
    int component;
    SpatialVec k;
    double phase;
    double coefficient;
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> freq(-2, 2);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal;
  std::vector<Mode> list;
  for (int c = 0; c <= n; ++c) {
    for (int q = 0; q < modes; ++q) {
      SpatialVec k = SpatialVec::Zero(grid.m);
      while (k.squaredNorm() == 0.0)
        for (int a = 0; a < grid.m; ++a) k[a] = freq(rng);
      const double ph = phase(rng);
      list.push_back({c, k, ph, amplitude * normal(rng) / k.squaredNorm()});
    }
  }
  const double w = 2.0 * std::numbers::pi / grid.period();
  return sample_snapshot(grid, n, 0.0, [&](const SpatialVec& x) {
    TargetVec v = TargetVec::Zero(n + 1);
    v[n] = 1.0;
    for (const auto& md : list) v[md.component] += md.coefficient * std::cos(w * md.k.dot(x) + md.phase);
    return project(v);
  });
}

TrajectoryPtr make_analytic(AnalyticKind kind, const AnalyticParams& prm) {
  if (prm.m < 1 || prm.m > kMaxSpatialDim) throw PreconditionError("spatial dimension must lie in [1, 4]");
  switch (kind) {
    case AnalyticKind::kConstant: {
      TargetVec p = prm.p;
      if (p.size() == 0) {
        p = TargetVec::Zero(prm.n + 1);
        p[prm.n] = 1.0;
      }
      return std::make_shared<ConstantTrajectory>(prm.m, p);
    }
    case AnalyticKind::kStaticCone:
    case AnalyticKind::kQuasistaticCone: {
      if (prm.m < 3) throw PreconditionError("cone fields need m >= 3");
      if (kind == AnalyticKind::kStaticCone) return ConeTrajectory::standard(prm.m, prm.n);
      Basis P = Basis::Zero(3, prm.m);
      for (int i = 0; i < 3; ++i) P(i, i) = 1.0;
      Embedding E = Embedding::Zero(prm.n + 1, 3);
      for (int i = 0; i < 3; ++i) E(i, i) = 1.0;
      return std::make_shared<ConeTrajectory>(prm.m, prm.n, SpatialVec::Zero(prm.m), P, E, prm.time, prm.p);
    }
    case AnalyticKind::kShrinkingProfile:
      if (!prm.profile) throw PreconditionError("shrinking fields need a tabulated profile");
      if (prm.m < prm.profile->ell() || prm.n < prm.profile->ell())
        throw PreconditionError("profile dimension exceeds m or n");
      return ShrinkingTrajectory::standard(prm.m, prm.n, prm.profile, prm.time);
  }
  throw PreconditionError("unsupported analytic kind");
}

}  // namespace qstrat
