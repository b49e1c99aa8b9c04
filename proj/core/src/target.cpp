#include "qstrat/target.hpp"

#include <cmath>
#include <limits>

#include "qstrat/parallel.hpp"

namespace qstrat {

TargetVec project(const TargetVec& v) {
  const double norm = v.norm();
  if (!(norm > kProjectionFloor)) throw BreakdownError("projection of a near-zero vector", 0);
  return v / norm;
}

TargetVec tension_nonlinearity(const TargetVec& u, const Gradient& grad) {
  if (grad.cols() != u.size()) throw DimensionMismatch("gradient columns must match target components");
  return grad.squaredNorm() * u;
}

std::vector<double> harmonic_residual(const Snapshot& s) {
  const GridSpec& g = s.grid;
  const int k = s.components();
  const double inv_h2 = 1.0 / (g.h * g.h);
  std::vector<double> out(s.cell_count(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(s.cell_count(), [&](std::size_t c) {
    const TargetVec u = s.value(c);
    TargetVec lap = TargetVec::Zero(k);
    double grad_sq = 0.0;
    for (int a = 0; a < g.m; ++a) {
      const std::size_t cp = g.neighbor(c, a, +1);
      const std::size_t cm = g.neighbor(c, a, -1);
      if (cp == kNoCell || cm == kNoCell) return;
      const TargetVec up = s.value(cp);
      const TargetVec um = s.value(cm);
      lap += (up - 2.0 * u + um) * inv_h2;
      grad_sq += (up - um).squaredNorm() * 0.25 * inv_h2;
    }
    out[c] = (lap + grad_sq * u).norm();
  });
  return out;
}

}  // namespace qstrat
