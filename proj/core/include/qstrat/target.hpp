#pragma once

#include <vector>

#include "qstrat/snapshot.hpp"
#include "qstrat/types.hpp"

namespace qstrat {

inline constexpr double kProjectionFloor = 1e-14;

/// Round sphere S^n inside R^{n+1}.
struct TargetSphere {
  int n = 2;
  int components() const { return n + 1; }
};

/// Nearest-point retraction v / |v|. Throws BreakdownError (cell 0) when |v| <= 1e-14.
TargetVec project(const TargetVec& v);

/// Second fundamental form term for the sphere: |grad|^2 u.
TargetVec tension_nonlinearity(const TargetVec& u, const Gradient& grad);

/// |Delta_h u + |grad_h u|^2 u| per cell with central differences. Box-grid cells
/// without a full stencil get NaN.
std::vector<double> harmonic_residual(const Snapshot& s);

}  // namespace qstrat
