#include "qstrat/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "qstrat/target.hpp"

namespace qstrat {

Snapshot::Snapshot(GridSpec g, int n_in, double t_in) : grid(std::move(g)), n(n_in), t(t_in) {
  if (n < 1 || n + 1 > kMaxComponents) throw DimensionMismatch("sphere dimension must lie in [1, 7]");
  values.assign(grid.cell_count() * static_cast<std::size_t>(components()), 0.0);
}

TargetVec Snapshot::value(std::size_t cell) const {
  const auto v = at(cell);
  TargetVec out(components());
  for (int i = 0; i < components(); ++i) out[i] = v[static_cast<std::size_t>(i)];
  return out;
}

void Snapshot::set(std::size_t cell, const TargetVec& v) {
  auto dst = at(cell);
  for (int i = 0; i < components(); ++i) dst[static_cast<std::size_t>(i)] = v[i];
}

void Snapshot::validate(double tol) const {
  if (values.size() != cell_count() * static_cast<std::size_t>(components()))
    throw PreconditionError("snapshot value array has the wrong length");
  for (std::size_t c = 0; c < cell_count(); ++c)
    if (std::abs(value(c).norm() - 1.0) > tol) throw PreconditionError("snapshot value off the sphere");
}

std::optional<double> Trajectory::hessian_norm(const SpaceTimePoint& X) const {
  constexpr double kStep = 1e-6;
  double sum = 0.0;
  for (int a = 0; a < m(); ++a) {
    SpaceTimePoint xp = X, xm = X;
    xp.x[a] += kStep;
    xm.x[a] -= kStep;
    const auto jp = jet(xp);
    const auto jm = jet(xm);
    if (!jp || !jm) return std::nullopt;
    sum += ((jp->grad - jm->grad) / (2.0 * kStep)).squaredNorm();
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------

ConstantTrajectory::ConstantTrajectory(int m, TargetVec p) : m_(m), p_(project(p)) {
  if (m < 1 || m > kMaxSpatialDim) throw DimensionMismatch("spatial dimension must lie in [1, 4]");
}

std::optional<TargetVec> ConstantTrajectory::value(const SpaceTimePoint&) const { return p_; }

std::optional<Jet> ConstantTrajectory::jet(const SpaceTimePoint&) const {
  return Jet{p_, Gradient::Zero(m_, p_.size()), TargetVec::Zero(p_.size())};
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kSingularRadius = 1e-12;

Embedding identity_embedding(int rows, int cols) {
  Embedding e = Embedding::Zero(rows, cols);
  for (int i = 0; i < std::min(rows, cols); ++i) e(i, i) = 1.0;
  return e;
}

Basis leading_coordinates(int k, int m) {
  Basis p = Basis::Zero(k, m);
  for (int i = 0; i < k; ++i) p(i, i) = 1.0;
  return p;
}

}  // namespace

ConeTrajectory::ConeTrajectory(int m, int n, SpatialVec x0, Basis transverse, Embedding embed,
                               std::optional<double> truncation, TargetVec after)
    : m_(m), n_(n), x0_(std::move(x0)), P_(std::move(transverse)), E_(std::move(embed)),
      truncation_(truncation), after_(std::move(after)) {
  if (m < 3 || m > kMaxSpatialDim) throw PreconditionError("cone fields need 3 <= m <= 4");
  if (n < 2) throw PreconditionError("cone fields need a target sphere of dimension >= 2");
  if (P_.rows() != 3 || P_.cols() != m) throw DimensionMismatch("cone transverse basis must be 3 x m");
  if (E_.rows() != n + 1 || E_.cols() != 3) throw DimensionMismatch("cone embedding must be (n+1) x 3");
  if (x0_.size() != m) throw DimensionMismatch("cone center dimension mismatch");
  if (truncation_) {
    if (after_.size() == 0) {
      after_ = TargetVec::Zero(n + 1);
      after_[n] = 1.0;
    }
    if (after_.size() != n + 1) throw DimensionMismatch("truncation value has the wrong size");
    after_ = project(after_);
  }
}

std::shared_ptr<ConeTrajectory> ConeTrajectory::standard(int m, int n, std::optional<double> truncation) {
  return std::make_shared<ConeTrajectory>(m, n, SpatialVec::Zero(m), leading_coordinates(3, m),
                                          identity_embedding(n + 1, 3), truncation);
}

double ConeTrajectory::axis_distance(const SpatialVec& x) const { return (P_ * (x - x0_)).norm(); }

bool ConeTrajectory::static_on(double t0, double t1) const {
  if (!truncation_) return true;
  return t1 <= *truncation_ || t0 > *truncation_;
}

std::optional<TargetVec> ConeTrajectory::value(const SpaceTimePoint& X) const {
  if (truncation_ && X.t > *truncation_) return after_;
  const Eigen::Vector3d y = P_ * (X.x - x0_);
  const double r = y.norm();
  if (r < kSingularRadius) return std::nullopt;
  return TargetVec(E_ * (y / r));
}

std::optional<Jet> ConeTrajectory::jet(const SpaceTimePoint& X) const {
  const int k = n_ + 1;
  if (truncation_ && X.t > *truncation_) return Jet{after_, Gradient::Zero(m_, k), TargetVec::Zero(k)};
  const Eigen::Vector3d y = P_ * (X.x - x0_);
  const double r = y.norm();
  if (r < kSingularRadius) return std::nullopt;
  const Eigen::Vector3d yh = y / r;
  Jet j{TargetVec(E_ * yh), Gradient(m_, k), TargetVec::Zero(k)};
  for (int i = 0; i < m_; ++i) {
    const Eigen::Vector3d col = P_.col(i);
    const Eigen::Vector3d d = (col - yh.dot(col) * yh) / r;
    j.grad.row(i) = (E_ * d).transpose();
  }
  return j;
}

std::optional<double> ConeTrajectory::hessian_norm(const SpaceTimePoint& X) const {
  if (truncation_ && X.t > *truncation_) return 0.0;
  const double r = axis_distance(X.x);
  if (r < kSingularRadius) return std::nullopt;
  // Isometric P and E: the norm equals that of the Hessian of y/|y| in R^3.
  return std::sqrt(6.0) / (r * r);
}

// ---------------------------------------------------------------------------

ShrinkingTrajectory::ShrinkingTrajectory(int m, int n, std::shared_ptr<const ShrinkProfile> profile,
                                         SpatialVec x0, double blowup_time, Basis transverse,
                                         Embedding embed)
    : m_(m), n_(n), profile_(std::move(profile)), x0_(std::move(x0)), blowup_time_(blowup_time),
      P_(std::move(transverse)), E_(std::move(embed)) {
  if (!profile_) throw PreconditionError("shrinking field needs a profile");
  const int ell = profile_->ell();
  if (m < ell || m > kMaxSpatialDim) throw PreconditionError("profile dimension exceeds the spatial dimension");
  if (n < ell) throw PreconditionError("shrinking field needs n >= profile dimension");
  if (P_.rows() != ell || P_.cols() != m) throw DimensionMismatch("transverse basis must be ell x m");
  if (E_.rows() != n + 1 || E_.cols() != ell + 1) throw DimensionMismatch("embedding must be (n+1) x (ell+1)");
}

std::shared_ptr<ShrinkingTrajectory> ShrinkingTrajectory::standard(
    int m, int n, std::shared_ptr<const ShrinkProfile> profile, double blowup_time) {
  const int ell = profile->ell();
  return std::make_shared<ShrinkingTrajectory>(m, n, std::move(profile), SpatialVec::Zero(m), blowup_time,
                                               leading_coordinates(ell, m), identity_embedding(n + 1, ell + 1));
}

namespace {

// psi and its xi-derivatives for the equivariant ansatz; column k of dpsi is d psi / d xi_k.
struct ProfileJet {
  TargetVec psi;
  Embedding dpsi;
};

ProfileJet profile_jet(const ShrinkProfile& p, const TargetVec& xi) {
  const int ell = static_cast<int>(xi.size());
  ProfileJet out{TargetVec::Zero(ell + 1), Embedding::Zero(ell + 1, ell)};
  const double rho = xi.norm();
  if (rho < 1e-9) {
    out.psi[ell] = 1.0;
    for (int k = 0; k < ell; ++k) out.dpsi(k, k) = p.a();
    return out;
  }
  const double h = p.h(rho), dh = p.dh(rho);
  const double sh = std::sin(h), ch = std::cos(h);
  const TargetVec xh = xi / rho;
  out.psi.head(ell) = sh * xh;
  out.psi[ell] = ch;
  for (int k = 0; k < ell; ++k) {
    TargetVec ek = TargetVec::Zero(ell);
    ek[k] = 1.0;
    out.dpsi.col(k).head(ell) = ch * dh * xh[k] * xh + sh * (ek - xh[k] * xh) / rho;
    out.dpsi(ell, k) = -sh * dh * xh[k];
  }
  return out;
}

}  // namespace

std::optional<TargetVec> ShrinkingTrajectory::value(const SpaceTimePoint& X) const {
  const TargetVec y = P_ * (X.x - x0_);
  const int ell = profile_->ell();
  const double w = blowup_time_ - X.t;
  TargetVec psi(ell + 1);
  if (w > 0.0) {
    const TargetVec xi = y / std::sqrt(w);
    const double rho = xi.norm();
    if (rho < 1e-9) {
      psi.setZero();
      psi[ell] = 1.0;
    } else {
      const double h = profile_->h(rho);
      psi.head(ell) = std::sin(h) / rho * xi;
      psi[ell] = std::cos(h);
    }
  } else {
    const double r = y.norm();
    if (r < kSingularRadius) return std::nullopt;
    psi.head(ell) = std::sin(profile_->h_inf()) / r * y;
    psi[ell] = std::cos(profile_->h_inf());
  }
  return TargetVec(E_ * psi);
}

std::optional<Jet> ShrinkingTrajectory::jet(const SpaceTimePoint& X) const {
  const TargetVec y = P_ * (X.x - x0_);
  const int ell = profile_->ell();
  const int k = n_ + 1;
  const double w = blowup_time_ - X.t;
  Jet j{TargetVec(k), Gradient(m_, k), TargetVec::Zero(k)};
  if (w > 0.0) {
    const double s = std::sqrt(w);
    const TargetVec xi = y / s;
    const ProfileJet pj = profile_jet(*profile_, xi);
    j.u = E_ * pj.psi;
    const Embedding dx = E_ * pj.dpsi;  // (n+1) x ell, derivatives in xi
    for (int i = 0; i < m_; ++i) j.grad.row(i) = (dx * P_.col(i)).transpose() / s;
    j.dt = dx * (xi / (2.0 * w));
    return j;
  }
  const double r = y.norm();
  if (r < kSingularRadius) return std::nullopt;
  const TargetVec yh = y / r;
  const double sh = std::sin(profile_->h_inf());
  TargetVec psi(ell + 1);
  psi.head(ell) = sh * yh;
  psi[ell] = std::cos(profile_->h_inf());
  j.u = E_ * psi;
  for (int i = 0; i < m_; ++i) {
    TargetVec col = P_.col(i);
    TargetVec d = TargetVec::Zero(ell + 1);
    d.head(ell) = sh * (col - yh.dot(col) * yh) / r;
    j.grad.row(i) = (E_ * d).transpose();
  }
  return j;
}

// ---------------------------------------------------------------------------

RescaledTrajectory::RescaledTrajectory(TrajectoryPtr base, SpaceTimePoint X, double lambda)
    : base_(std::move(base)), X_(std::move(X)), lambda_(lambda) {
  if (!(lambda_ > 0.0)) throw PreconditionError("rescaling factor must be positive");
  if (X_.dim() != base_->m()) throw DimensionMismatch("rescaling base point dimension mismatch");
}

SpaceTimePoint RescaledTrajectory::map(const SpaceTimePoint& X) const {
  return SpaceTimePoint(X_.x + lambda_ * X.x, X_.t + lambda_ * lambda_ * X.t);
}

double RescaledTrajectory::t_min() const { return (base_->t_min() - X_.t) / (lambda_ * lambda_); }
double RescaledTrajectory::t_max() const { return (base_->t_max() - X_.t) / (lambda_ * lambda_); }

std::optional<TargetVec> RescaledTrajectory::value(const SpaceTimePoint& X) const {
  return base_->value(map(X));
}

std::optional<Jet> RescaledTrajectory::jet(const SpaceTimePoint& X) const {
  auto j = base_->jet(map(X));
  if (!j) return std::nullopt;
  j->grad *= lambda_;
  j->dt *= lambda_ * lambda_;
  return j;
}

std::optional<double> RescaledTrajectory::hessian_norm(const SpaceTimePoint& X) const {
  const auto hn = base_->hessian_norm(map(X));
  if (!hn) return std::nullopt;
  return *hn * lambda_ * lambda_;
}

bool RescaledTrajectory::static_on(double t0, double t1) const {
  const double l2 = lambda_ * lambda_;
  return base_->static_on(X_.t + l2 * t0, X_.t + l2 * t1);
}

// ---------------------------------------------------------------------------

SimulatedTrajectory::SimulatedTrajectory(std::vector<Snapshot> snapshots, double dt, int record_every)
    : snapshots_(std::move(snapshots)), dt_(dt), record_every_(record_every) {
  if (snapshots_.empty()) throw PreconditionError("trajectory needs at least one snapshot");
  for (std::size_t i = 1; i < snapshots_.size(); ++i) {
    if (!(snapshots_[i].t > snapshots_[i - 1].t)) throw PreconditionError("snapshot times must increase");
    if (!snapshots_[i].grid.same_layout(snapshots_[0].grid) || snapshots_[i].n != snapshots_[0].n)
      throw PreconditionError("snapshots must share one grid");
  }
}

double SimulatedTrajectory::record_interval() const {
  if (snapshots_.size() < 2) return 0.0;
  return (snapshots_.back().t - snapshots_.front().t) / static_cast<double>(snapshots_.size() - 1);
}

TargetVec SimulatedTrajectory::spatial_interp(const Snapshot& s, const SpatialVec& x) const {
  const GridSpec& g = s.grid;
  const int m = g.m;
  std::array<int, kMaxSpatialDim> i0{};
  std::array<double, kMaxSpatialDim> f{};
  for (int a = 0; a < m; ++a) {
    const double q = (x[a] - g.origin[a]) / g.h;
    const double fl = std::floor(q);
    f[a] = q - fl;
    i0[a] = static_cast<int>(fl);
  }
  TargetVec v = TargetVec::Zero(s.components());
  std::array<int, kMaxSpatialDim> idx{};
  for (int corner = 0; corner < (1 << m); ++corner) {
    double w = 1.0;
    for (int a = 0; a < m; ++a) {
      const int bit = (corner >> a) & 1;
      w *= bit ? f[a] : 1.0 - f[a];
      int i = i0[a] + bit;
      if (g.periodic) i = ((i % g.n_cells) + g.n_cells) % g.n_cells;
      else i = std::clamp(i, 0, g.n_cells - 1);
      idx[a] = i;
    }
    if (w == 0.0) continue;
    const auto src = s.at(g.flat_index(std::span<const int>(idx.data(), m)));
    for (int c = 0; c < s.components(); ++c) v[c] += w * src[static_cast<std::size_t>(c)];
  }
  return v;
}

std::optional<TargetVec> SimulatedTrajectory::value(const SpaceTimePoint& X) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_max()));
  if (X.t < t_min() - tol || X.t > t_max() + tol) return std::nullopt;
  TargetVec v;
  if (snapshots_.size() == 1) {
    v = spatial_interp(snapshots_[0], X.x);
  } else {
    const double span = record_interval();
    const double q = (X.t - t_min()) / span;
    const auto last = snapshots_.size() - 2;
    const auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(q))), last);
    const double theta = std::clamp((X.t - snapshots_[k].t) / (snapshots_[k + 1].t - snapshots_[k].t), 0.0, 1.0);
    v = (1.0 - theta) * spatial_interp(snapshots_[k], X.x);
    if (theta > 0.0) v += theta * spatial_interp(snapshots_[k + 1], X.x);
  }
  const double norm = v.norm();
  if (!(norm > kProjectionFloor)) return std::nullopt;
  return TargetVec(v / norm);
}

std::optional<Jet> SimulatedTrajectory::jet(const SpaceTimePoint& X) const {
  const auto u = value(X);
  if (!u) return std::nullopt;
  const int k = components();
  const double h = grid().h;
  Jet j{*u, Gradient(m(), k), TargetVec::Zero(k)};
  for (int a = 0; a < m(); ++a) {
    SpaceTimePoint xp = X, xm = X;
    xp.x[a] += h;
    xm.x[a] -= h;
    const auto up = value(xp), um = value(xm);
    if (!up || !um) return std::nullopt;
    j.grad.row(a) = ((*up - *um) / (2.0 * h)).transpose();
  }
  const double span = record_interval();
  if (span > 0.0) {
    SpaceTimePoint tp = X, tm = X;
    tp.t = std::min(X.t + span, t_max());
    tm.t = std::max(X.t - span, t_min());
    const auto up = value(tp), um = value(tm);
    if (!up || !um) return std::nullopt;
    j.dt = (*up - *um) / (tp.t - tm.t);
  }
  return j;
}

std::optional<double> SimulatedTrajectory::hessian_norm(const SpaceTimePoint& X) const {
  const double h = grid().h;
  const auto u0 = value(X);
  if (!u0) return std::nullopt;
  double sum = 0.0;
  for (int a = 0; a < m(); ++a) {
    for (int b = a; b < m(); ++b) {
      TargetVec d;
      if (a == b) {
        SpaceTimePoint xp = X, xm = X;
        xp.x[a] += h;
        xm.x[a] -= h;
        const auto up = value(xp), um = value(xm);
        if (!up || !um) return std::nullopt;
        d = (*up - 2.0 * *u0 + *um) / (h * h);
        sum += d.squaredNorm();
      } else {
        std::array<std::optional<TargetVec>, 4> c;
        int idx = 0;
        for (int sa : {1, -1})
          for (int sb : {1, -1}) {
            SpaceTimePoint y = X;
            y.x[a] += sa * h;
            y.x[b] += sb * h;
            c[static_cast<std::size_t>(idx++)] = value(y);
          }
        for (const auto& ci : c)
          if (!ci) return std::nullopt;
        d = (*c[0] - *c[1] - *c[2] + *c[3]) / (4.0 * h * h);
        sum += 2.0 * d.squaredNorm();
      }
    }
  }
  return std::sqrt(sum);
}

}  // namespace qstrat
