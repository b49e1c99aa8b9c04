#include "qstrat/energies.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <numbers>

#include "qstrat/parallel.hpp"

namespace qstrat {
namespace {

void require_time(const Trajectory& traj, double t0, double t1) {
  const double tol = 1e-12 * std::max({1.0, std::abs(t0), std::abs(t1)});
  if (t0 < traj.t_min() - tol || t1 > traj.t_max() + tol)
    throw RangeViolation("quadrature region exceeds the recorded time range");
}

// Cell-centered lattice over [-extent, extent]^m with the given step, kept inside the ball.
std::vector<SpatialVec> ball_lattice(int m, double extent, double step) {
  const int per_axis = static_cast<int>(std::lround(2.0 * extent / step));
  std::vector<SpatialVec> pts;
  std::array<int, kMaxSpatialDim> idx{};
  for (;;) {
    SpatialVec x(m);
    for (int a = 0; a < m; ++a) x[a] = -extent + (idx[static_cast<std::size_t>(a)] + 0.5) * step;
    if (x.norm() < extent) pts.push_back(x);
    int a = m - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= per_axis) {
      idx[static_cast<std::size_t>(a)] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return pts;
}

template <class Density>
EnergyReport ball_energy(const Trajectory& traj, const SpaceTimePoint& X, double r, const BallQuadrature& q,
                         double power, Density&& density) {
  if (X.dim() != traj.m()) throw DimensionMismatch("point dimension differs from trajectory");
  if (!(r > 0.0)) throw PreconditionError("radius must be positive");
  if (q.cells_per_radius < 1 || q.time_cells < 1) throw PreconditionError("bad quadrature resolution");
  const double r2 = r * r;
  require_time(traj, X.t - r2, X.t + r2);
  const int m = traj.m();
  const double step = r / q.cells_per_radius;
  const auto cells = ball_lattice(m, r, step);
  const bool is_static = traj.static_on(X.t - r2, X.t + r2);
  const int slices = is_static ? 1 : q.time_cells;
  const double dt = 2.0 * r2 / slices;
  std::atomic<std::uint64_t> used{0};
  const double sum = deterministic_sum(cells.size(), [&](std::size_t i) {
    double acc = 0.0;
    std::uint64_t k = 0;
    for (int s = 0; s < slices; ++s) {
      const double t = is_static ? X.t : X.t - r2 + (s + 0.5) * dt;
      if (const auto j = traj.jet(SpaceTimePoint(X.x + cells[i], t))) {
        acc += density(*j);
        ++k;
      }
    }
    used.fetch_add(k, std::memory_order_relaxed);
    return acc;
  });
  EnergyReport rep;
  rep.X = X;
  rep.r1 = r;
  rep.value = sum * std::pow(step, m) * dt / std::pow(r, power);
  rep.quadrature_cells = used.load();
  return rep;
}

}  // namespace

EnergyReport dirichlet_scale_invariant(const Trajectory& traj, const SpaceTimePoint& X, double r,
                                       const BallQuadrature& q) {
  return ball_energy(traj, X, r, q, traj.m(), [](const Jet& j) { return j.grad.squaredNorm(); });
}

EnergyReport time_derivative_energy(const Trajectory& traj, const SpaceTimePoint& X, double r,
                                    const BallQuadrature& q) {
  return ball_energy(traj, X, r, q, traj.m() - 2, [](const Jet& j) { return j.dt.squaredNorm(); });
}

namespace {

std::vector<double> layers_impl(const Trajectory& traj, const SpaceTimePoint& X0, std::span<const double> radii,
                                const StruweQuadrature& q, std::uint64_t* cells_used) {
  if (X0.dim() != traj.m()) throw DimensionMismatch("point dimension differs from trajectory");
  if (radii.size() < 2) throw PreconditionError("need at least two radii");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    if (!(radii[k] > radii[k + 1]) || !(radii[k + 1] > 0.0)) throw PreconditionError("radii must decrease strictly");
  if (!(q.xi_step > 0.0) || !(q.sigma_step > 0.0) || !(q.xi_extent > q.xi_step))
    throw PreconditionError("bad Struwe quadrature");
  const double r_out = radii.front();
  const double r_in = radii.back();
  require_time(traj, X0.t - r_out * r_out, X0.t);

  const int m = traj.m();
  const double L = q.xi_extent;
  const auto xi = ball_lattice(m, L, q.xi_step);
  // sigma cells [k ds, (k+1) ds) with centers inside [2 log(r_in / L), 2 log r_out).
  const double ds = q.sigma_step;
  const double s_lo = 2.0 * std::log(r_in / L);
  const double s_hi = 2.0 * std::log(r_out);
  const auto k_lo = static_cast<long>(std::floor(s_lo / ds)) - 1;
  const auto k_hi = static_cast<long>(std::ceil(s_hi / ds)) + 1;
  const auto n_sigma = static_cast<std::size_t>(k_hi - k_lo + 1);
  const std::size_t layers = radii.size() - 1;
  std::vector<double> partial(n_sigma * layers, 0.0);
  std::vector<double> rsq(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) rsq[k] = radii[k] * radii[k];

  // Layer index of a point, 0..layers-1, `layers` inside the innermost ball, -1 outside.
  auto layer_of = [&](double dist2, double tau) -> long {
    if (!(dist2 < rsq.front() && tau < rsq.front())) return -1;
    std::size_t k = 0;
    while (k + 1 < radii.size() && dist2 < rsq[k + 1] && tau < rsq[k + 1]) ++k;
    return static_cast<long>(k);
  };
  // Cells cut by a layer boundary are split on a sub-lattice; the integrand is taken at the
  // centroid of each piece.
  constexpr int kSub = 2;
  std::vector<double> xi_norm;
  for (const auto& e : xi) xi_norm.push_back(e.norm());
  const double half_diag = 0.5 * q.xi_step * std::sqrt(static_cast<double>(m));
  std::vector<SpatialVec> sub_offsets;
  {
    std::array<int, kMaxSpatialDim> idx{};
    for (;;) {
      SpatialVec o(m);
      for (int a = 0; a < m; ++a) o[a] = ((idx[static_cast<std::size_t>(a)] + 0.5) / kSub - 0.5) * q.xi_step;
      sub_offsets.push_back(o);
      int a = m - 1;
      while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= kSub) idx[static_cast<std::size_t>(a--)] = 0;
      if (a < 0) break;
    }
  }
  const double sub_count = static_cast<double>(sub_offsets.size() * kSub);
  std::vector<double> sub_norm2;
  for (const auto& o : sub_offsets) sub_norm2.push_back(o.squaredNorm());

  std::atomic<std::uint64_t> used{0};
  parallel_for(n_sigma, [&](std::size_t si) {
    const double sigma = (static_cast<double>(k_lo + static_cast<long>(si)) + 0.5) * ds;
    const double tau = std::exp(sigma);
    const double tau_lo = std::exp(sigma - 0.5 * ds);
    const double tau_hi = std::exp(sigma + 0.5 * ds);
    if (!(tau_lo < rsq.front())) return;
    std::vector<double> acc(layers, 0.0);
    std::vector<double> frac(layers);
    std::vector<SpatialVec> centroid(layers, SpatialVec::Zero(m));
    std::vector<double> csigma(layers);
    std::vector<double> osum(layers * kMaxSpatialDim);
    std::array<double, kSub> sub_sigma{}, sub_tau{};
    for (int b = 0; b < kSub; ++b) {
      sub_sigma[static_cast<std::size_t>(b)] = sigma + ((b + 0.5) / kSub - 0.5) * ds;
      sub_tau[static_cast<std::size_t>(b)] = std::exp(sub_sigma[static_cast<std::size_t>(b)]);
    }
    std::uint64_t local = 0;
    auto integrand = [&](const SpatialVec& e, double tau_e) {
      const double st = std::sqrt(tau_e);
      const auto j = traj.jet(SpaceTimePoint(X0.x + st * e, X0.t - tau_e));
      if (!j) return -1.0;
      TargetVec v = -2.0 * tau_e * j->dt;
      for (int a = 0; a < m; ++a) v += (st * e[a]) * j->grad.row(a).transpose();
      return v.squaredNorm() * std::exp(-0.25 * e.squaredNorm());
    };
    for (std::size_t xi_i = 0; xi_i < xi.size(); ++xi_i) {
      const auto& e = xi[xi_i];
      const double en = xi_norm[xi_i];
      const double r_lo = std::max(0.0, en - half_diag), r_hi = en + half_diag;
      if (!(tau_lo * r_lo * r_lo < rsq.front())) continue;
      const long outer = layer_of(tau_hi * r_hi * r_hi, tau_hi);
      const long inner = layer_of(tau_lo * r_lo * r_lo, tau_lo);
      if (outer == inner) {
        if (outer < 0 || outer == static_cast<long>(layers)) continue;
        const double f = integrand(e, tau);
        if (f < 0.0) continue;
        ++local;
        acc[static_cast<std::size_t>(outer)] += f;
        continue;
      }
      std::fill(frac.begin(), frac.end(), 0.0);
      std::fill(csigma.begin(), csigma.end(), 0.0);
      std::fill(osum.begin(), osum.end(), 0.0);
      const double e2 = en * en;
      for (std::size_t oi = 0; oi < sub_offsets.size(); ++oi) {
        const auto& o = sub_offsets[oi];
        double eo = 0.0;
        for (int a = 0; a < m; ++a) eo += e[a] * o[a];
        const double y2 = e2 + 2.0 * eo + sub_norm2[oi];
        for (int b = 0; b < kSub; ++b) {
          const double tb = sub_tau[static_cast<std::size_t>(b)];
          const long k = layer_of(tb * y2, tb);
          if (k < 0 || k == static_cast<long>(layers)) continue;
          const auto kk = static_cast<std::size_t>(k);
          frac[kk] += 1.0;
          for (int a = 0; a < m; ++a) osum[kk * kMaxSpatialDim + static_cast<std::size_t>(a)] += o[a];
          csigma[kk] += sub_sigma[static_cast<std::size_t>(b)];
        }
      }
      for (std::size_t k = 0; k < layers; ++k)
        for (int a = 0; a < m; ++a) centroid[k][a] = frac[k] * e[a] + osum[k * kMaxSpatialDim + static_cast<std::size_t>(a)];
      for (std::size_t k = 0; k < layers; ++k) {
        if (frac[k] == 0.0) continue;
        const double f = integrand(centroid[k] / frac[k], std::exp(csigma[k] / frac[k]));
        if (f < 0.0) continue;
        ++local;
        acc[k] += f * frac[k] / sub_count;
      }
    }
    for (std::size_t k = 0; k < layers; ++k) partial[k * n_sigma + si] = acc[k];
    used.fetch_add(local, std::memory_order_relaxed);
  });
  if (cells_used) *cells_used = used.load();
  const double cell = std::pow(q.xi_step, m) * ds;
  std::vector<double> out(layers);
  for (std::size_t k = 0; k < layers; ++k)
    out[k] = cell * pairwise_sum(std::span<const double>(partial.data() + k * n_sigma, n_sigma));
  return out;
}

}  // namespace

std::vector<double> struwe_layers(const Trajectory& traj, const SpaceTimePoint& X0, std::span<const double> radii,
                                  const StruweQuadrature& q) {
  return layers_impl(traj, X0, radii, q, nullptr);
}

EnergyReport struwe_annulus(const Trajectory& traj, const SpaceTimePoint& X0, double r1, double r2,
                            const StruweQuadrature& q) {
  if (!(r1 > r2)) throw PreconditionError("annulus needs r1 > r2");
  if (!(r2 > 0.0)) throw PreconditionError("annulus needs r2 > 0");
  const std::array<double, 2> radii{r1, r2};
  EnergyReport rep;
  rep.X = X0;
  rep.r1 = r1;
  rep.r2 = r2;
  rep.value = layers_impl(traj, X0, radii, q, &rep.quadrature_cells).front();
  // Deepest sampled time lag: |x - x0| >= r2 together with |xi| < L.
  rep.inner_cutoff = r2 * r2 / (q.xi_extent * q.xi_extent);
  return rep;
}

EnergyReport struwe_total(const Trajectory& traj, const SpaceTimePoint& X0, double R, double rho_min,
                          const StruweQuadrature& q) {
  if (!(rho_min > 0.0)) throw PreconditionError("rho_min must be positive");
  return struwe_annulus(traj, X0, 2.0 * R, rho_min, q);
}

EnergyReport gaussian_scale_energy(const Trajectory& traj, const SpaceTimePoint& X0, double r,
                                   const GaussianQuadrature& q) {
  if (X0.dim() != traj.m()) throw DimensionMismatch("point dimension differs from trajectory");
  if (!(r > 0.0)) throw PreconditionError("radius must be positive");
  const double t = X0.t - r * r;
  require_time(traj, t, t);
  const int m = traj.m();
  const auto xi = ball_lattice(m, q.xi_extent, q.xi_step);
  std::atomic<std::uint64_t> used{0};
  const double sum = deterministic_sum(xi.size(), [&](std::size_t i) {
    const auto j = traj.jet(SpaceTimePoint(X0.x + r * xi[i], t));
    if (!j) return 0.0;
    used.fetch_add(1, std::memory_order_relaxed);
    return j->grad.squaredNorm() * std::exp(-0.25 * xi[i].squaredNorm());
  });
  EnergyReport rep;
  rep.X = X0;
  rep.r1 = r;
  rep.value = r * r * std::pow(4.0 * std::numbers::pi, -0.5 * m) * sum * std::pow(q.xi_step, m);
  rep.quadrature_cells = used.load();
  return rep;
}

}  // namespace qstrat
