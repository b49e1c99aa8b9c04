#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qstrat {

inline constexpr int kMaxSpatialDim = 4;
inline constexpr int kMaxComponents = 8;  // values live in R^{n+1}, n <= 7

// Fixed-capacity Eigen types: no heap traffic in per-sample inner loops.
using SpatialVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSpatialDim, 1>;
using TargetVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxComponents, 1>;
// Row i holds the derivative of u along spatial axis i: shape m x (n+1).
using Gradient = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSpatialDim, kMaxComponents>;

/// A point X = (x, t) of parabolic space-time. Time carries units of length^2.
struct SpaceTimePoint {
  SpatialVec x;
  double t = 0.0;

  SpaceTimePoint() = default;
  SpaceTimePoint(SpatialVec x_in, double t_in) : x(std::move(x_in)), t(t_in) {}

  int dim() const { return static_cast<int>(x.size()); }
};

inline SpaceTimePoint origin_point(int m, double t = 0.0) {
  return SpaceTimePoint(SpatialVec::Zero(m), t);
}

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A query reached outside the recorded space-time range of a trajectory.
class RangeViolation : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse for the requested scale.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Violated operation precondition (hypotheses of a verification check, bad parameters).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Projection onto the target failed: |v| below the breakdown threshold.
class BreakdownError : public Error {
 public:
  BreakdownError(const std::string& what, std::size_t cell) : Error(what), cell_(cell) {}
  std::size_t cell() const { return cell_; }

 private:
  std::size_t cell_;
};

/// A window whose masked fraction exceeds the acceptance threshold.
class WindowRejected : public Error {
 public:
  using Error::Error;
};

/// A checked bound or structural property failed on computed data.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace qstrat
