#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "qstrat/geometry.hpp"
#include "qstrat/types.hpp"

namespace qstrat {

/// One time level of a sphere-valued grid map. Values are stored cell-major:
/// the n+1 components of cell c occupy values[c*(n+1) .. c*(n+1)+n].
struct Snapshot {
  GridSpec grid;
  int n = 2;
  double t = 0.0;
  std::vector<double> values;

  Snapshot() = default;
  Snapshot(GridSpec g, int n_in, double t_in);

  int components() const { return n + 1; }
  std::size_t cell_count() const { return grid.cell_count(); }
  std::span<double> at(std::size_t cell) {
    return {values.data() + cell * static_cast<std::size_t>(components()),
            static_cast<std::size_t>(components())};
  }
  std::span<const double> at(std::size_t cell) const {
    return {values.data() + cell * static_cast<std::size_t>(components()),
            static_cast<std::size_t>(components())};
  }
  TargetVec value(std::size_t cell) const;
  void set(std::size_t cell, const TargetVec& v);

  /// Throws PreconditionError if the layout is inconsistent or a value leaves the sphere.
  void validate(double tol = 1e-10) const;
};

/// Snapshot filled with f(node position).
template <class F>
Snapshot sample_snapshot(const GridSpec& grid, int n, double t, F&& f) {
  Snapshot s(grid, n, t);
  for (std::size_t c = 0; c < s.cell_count(); ++c) s.set(c, f(grid.node(c)));
  return s;
}

}  // namespace qstrat
