#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qstrat/shrink_profile.hpp"
#include "qstrat/snapshot.hpp"
#include "qstrat/types.hpp"

namespace qstrat {

/// Value and first derivatives at one space-time point.
struct Jet {
  TargetVec u;
  Gradient grad;  // m x (n+1)
  TargetVec dt;
};

using Basis = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents, kMaxSpatialDim>;
using Embedding = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents, kMaxComponents>;

/// A sphere-valued map on space-time, evaluated lazily. nullopt marks a singular sentinel.
class Trajectory {
 public:
  virtual ~Trajectory() = default;

  virtual int m() const = 0;
  virtual int n() const = 0;
  virtual double t_min() const { return -std::numeric_limits<double>::infinity(); }
  virtual double t_max() const { return std::numeric_limits<double>::infinity(); }
  virtual std::optional<double> period() const { return std::nullopt; }
  virtual bool analytic() const = 0;
  /// Grid spacing of stored data; 0 for closed-form fields.
  virtual double spacing() const { return 0.0; }
  virtual std::string kind() const = 0;

  virtual std::optional<TargetVec> value(const SpaceTimePoint& X) const = 0;
  virtual std::optional<Jet> jet(const SpaceTimePoint& X) const = 0;
  /// Frobenius norm of the spatial Hessian. Default: central differences of jet gradients.
  virtual std::optional<double> hessian_norm(const SpaceTimePoint& X) const;
  /// True when u(., t) does not depend on t for t in [t0, t1].
  virtual bool static_on(double /*t0*/, double /*t1*/) const { return false; }

  bool covers_time(double t0, double t1) const { return t0 >= t_min() && t1 <= t_max(); }
  int components() const { return n() + 1; }
};

using TrajectoryPtr = std::shared_ptr<const Trajectory>;

class ConstantTrajectory final : public Trajectory {
 public:
  ConstantTrajectory(int m, TargetVec p);
  int m() const override { return m_; }
  int n() const override { return static_cast<int>(p_.size()) - 1; }
  bool analytic() const override { return true; }
  std::string kind() const override { return "constant"; }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;
  std::optional<double> hessian_norm(const SpaceTimePoint&) const override { return 0.0; }
  bool static_on(double, double) const override { return true; }
  const TargetVec& point() const { return p_; }

 private:
  int m_;
  TargetVec p_;
};

/// u(x, t) = E (y / |y|) with y = P (x - x0), P a 3 x m matrix with orthonormal rows and
/// E an (n+1) x 3 isometric embedding. With a truncation time T the map equals the
/// constant p for t > T.
class ConeTrajectory final : public Trajectory {
 public:
  ConeTrajectory(int m, int n, SpatialVec x0, Basis transverse, Embedding embed,
                 std::optional<double> truncation = std::nullopt, TargetVec after = {});
  /// Standard split cone on the first three coordinates, identity embedding into S^n.
  static std::shared_ptr<ConeTrajectory> standard(int m, int n, std::optional<double> truncation = std::nullopt);

  int m() const override { return m_; }
  int n() const override { return n_; }
  bool analytic() const override { return true; }
  std::string kind() const override { return truncation_ ? "quasistatic_cone" : "static_cone"; }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;
  std::optional<double> hessian_norm(const SpaceTimePoint& X) const override;
  bool static_on(double t0, double t1) const override;

  /// Distance from x to the singular set x0 + ker P.
  double axis_distance(const SpatialVec& x) const;
  std::optional<double> truncation() const { return truncation_; }
  const TargetVec& after_value() const { return after_; }

 private:
  int m_;
  int n_;
  SpatialVec x0_;
  Basis P_;
  Embedding E_;
  std::optional<double> truncation_;
  TargetVec after_;
};

/// u(x, t) = E psi(P (x - x0) / sqrt(T* - t)) with psi the equivariant profile on R^ell.
/// For t >= T* the blow-up limit E psi_inf(P (x - x0)) is returned (0-homogeneous).
class ShrinkingTrajectory final : public Trajectory {
 public:
  ShrinkingTrajectory(int m, int n, std::shared_ptr<const ShrinkProfile> profile, SpatialVec x0,
                      double blowup_time, Basis transverse, Embedding embed);
  static std::shared_ptr<ShrinkingTrajectory> standard(int m, int n,
                                                       std::shared_ptr<const ShrinkProfile> profile,
                                                       double blowup_time = 0.0);

  int m() const override { return m_; }
  int n() const override { return n_; }
  bool analytic() const override { return true; }
  std::string kind() const override { return "shrinking_profile"; }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;
  double blowup_time() const { return blowup_time_; }
  const ShrinkProfile& profile() const { return *profile_; }

 private:
  int m_;
  int n_;
  std::shared_ptr<const ShrinkProfile> profile_;
  SpatialVec x0_;
  double blowup_time_;
  Basis P_;
  Embedding E_;
};

/// u_{X,lambda}(x, t) = u(x0 + lambda x, t0 + lambda^2 t).
class RescaledTrajectory final : public Trajectory {
 public:
  RescaledTrajectory(TrajectoryPtr base, SpaceTimePoint X, double lambda);
  int m() const override { return base_->m(); }
  int n() const override { return base_->n(); }
  double t_min() const override;
  double t_max() const override;
  bool analytic() const override { return base_->analytic(); }
  double spacing() const override { return base_->spacing() / lambda_; }
  std::string kind() const override { return base_->kind(); }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;
  std::optional<double> hessian_norm(const SpaceTimePoint& X) const override;
  bool static_on(double t0, double t1) const override;

 private:
  SpaceTimePoint map(const SpaceTimePoint& X) const;
  TrajectoryPtr base_;
  SpaceTimePoint X_;
  double lambda_;
};

/// Recorded solver output on a torus. Snapshots share one grid and are equally spaced in time.
class SimulatedTrajectory final : public Trajectory {
 public:
  SimulatedTrajectory(std::vector<Snapshot> snapshots, double dt, int record_every);

  int m() const override { return snapshots_.front().grid.m; }
  int n() const override { return snapshots_.front().n; }
  double t_min() const override { return snapshots_.front().t; }
  double t_max() const override { return snapshots_.back().t; }
  std::optional<double> period() const override { return grid().torus_period(); }
  bool analytic() const override { return false; }
  double spacing() const override { return grid().h; }
  std::string kind() const override { return "simulated"; }
  std::optional<TargetVec> value(const SpaceTimePoint& X) const override;
  std::optional<Jet> jet(const SpaceTimePoint& X) const override;
  std::optional<double> hessian_norm(const SpaceTimePoint& X) const override;

  const GridSpec& grid() const { return snapshots_.front().grid; }
  const std::vector<Snapshot>& snapshots() const { return snapshots_; }
  double dt() const { return dt_; }
  int record_every() const { return record_every_; }
  double record_interval() const;

  bool blown_up = false;
  std::optional<double> breakdown_time;
  std::optional<std::size_t> breakdown_cell;

 private:
  TargetVec spatial_interp(const Snapshot& s, const SpatialVec& x) const;
  std::vector<Snapshot> snapshots_;
  double dt_;
  int record_every_;
};

}  // namespace qstrat
