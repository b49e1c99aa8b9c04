#include "qstrat/cone_split.hpp"

#include <cmath>
#include <limits>

namespace qstrat {

std::string to_string(SplitCase c) {
  switch (c) {
    case SplitCase::kSliceSpatial: return "slice_spatial";
    case SplitCase::kSliceQuasiPast: return "slice_quasistatic_past";
    case SplitCase::kSliceQuasiFuture: return "slice_quasistatic_future";
    case SplitCase::kSliceQuasiSplit: return "slice_quasistatic_split";
    case SplitCase::kHalfLineExtend: return "half_line_extend";
    case SplitCase::kHalfLineSplit: return "half_line_split";
    case SplitCase::kStaticSplit: return "static_split";
  }
  return "?";
}

int plane_symmetry(const InvariancePlane& W) {
  return W.dim() + (W.extent == TimeExtent::kFullLine ? 2 : 0);
}

namespace {

// Orthonormal basis of span{y, V}; y must have a component off V.
Basis add_direction(const Basis& V, const SpatialVec& y) {
  SpatialVec r = y;
  if (V.rows() > 0) r -= V.transpose() * (V * y);
  Basis out(V.rows() + 1, y.size());
  if (V.rows() > 0) out.topRows(V.rows()) = V;
  out.row(V.rows()) = (r / r.norm()).transpose();
  return out;
}

double off_plane(const Basis& V, const SpatialVec& y) {
  SpatialVec r = y;
  if (V.rows() > 0) r -= V.transpose() * (V * y);
  return r.norm();
}

}  // namespace

SplitOutcome cone_split_classify(const InvariancePlane& W, const SpaceTimePoint& Y, double rho) {
  if (!(rho > 0.0)) throw PreconditionError("rho must be positive");
  if (Y.dim() != static_cast<int>(W.anchor.x.size())) throw DimensionMismatch("point and plane dimensions differ");
  if (W.distance(Y) < rho) throw PreconditionError("Y lies inside the rho-neighbourhood of W");
  const SpatialVec y = Y.x - W.anchor.x;
  const double s = Y.t - W.anchor.t;
  const double dV = off_plane(W.V, y);
  const bool on_plane = dV < rho;

  SplitOutcome out;
  out.symmetry_before = plane_symmetry(W);
  InvariancePlane P;
  P.anchor = W.anchor;
  P.V = on_plane ? W.V : add_direction(W.V, y);
  switch (W.extent) {
    case TimeExtent::kSlice:
      if (std::abs(s) < rho * rho) {
        out.which = SplitCase::kSliceSpatial;
        P.extent = TimeExtent::kSlice;
      } else {
        out.which = on_plane ? (s < 0.0 ? SplitCase::kSliceQuasiPast : SplitCase::kSliceQuasiFuture)
                             : SplitCase::kSliceQuasiSplit;
        P.extent = TimeExtent::kHalfLine;
        P.t_end = W.anchor.t + std::max(s, 0.0);
      }
      break;
    case TimeExtent::kHalfLine: {
      const double T = W.t_end - W.anchor.t;
      P.extent = TimeExtent::kHalfLine;
      if (on_plane) {
        out.which = SplitCase::kHalfLineExtend;
        P.t_end = W.anchor.t + s;
      } else {
        out.which = SplitCase::kHalfLineSplit;
        P.t_end = W.anchor.t + std::max(s, T);
      }
      break;
    }
    case TimeExtent::kFullLine:
      out.which = SplitCase::kStaticSplit;
      P.extent = TimeExtent::kFullLine;
      break;
  }
  out.plane = P;
  out.symmetry_after = plane_symmetry(P);
  out.increments = out.symmetry_after > out.symmetry_before;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kM = 4;
constexpr int kN = 3;

SpatialVec axis_point(double a) {
  SpatialVec y = SpatialVec::Zero(kM);
  y[3] = a;
  return y;
}

Basis axis_plane() {
  Basis V = Basis::Zero(1, kM);
  V(0, 3) = 1.0;
  return V;
}

InvariancePlane plane(Basis V, TimeExtent e, double t_end = 0.0) {
  InvariancePlane W;
  W.anchor = origin_point(kM);
  W.V = std::move(V);
  W.extent = e;
  W.t_end = t_end;
  return W;
}

TrajectoryPtr cone_field(std::optional<double> truncation) {
  Basis P = Basis::Zero(3, kM);
  P.leftCols(3).setIdentity();
  Embedding E = Embedding::Zero(kN + 1, 3);
  E.topRows(3).setIdentity();
  TargetVec after = TargetVec::Zero(kN + 1);
  after[kN] = 1.0;
  return std::make_shared<ConeTrajectory>(kM, kN, SpatialVec::Zero(kM), P, E, truncation, after);
}

struct Setup {
  TrajectoryPtr field;
  std::string name;
  InvariancePlane W;
  SpaceTimePoint Y;
};

Setup setup(SplitCase which, const SplitVerifyOptions& opt) {
  const Basis none(0, kM);
  switch (which) {
    case SplitCase::kSliceSpatial: {
      if (!opt.profile || opt.profile->ell() != 3)
        throw PreconditionError("spatial slice case needs an ell=3 shrinking profile");
      Basis P = Basis::Zero(3, kM);
      P.leftCols(3).setIdentity();
      Embedding E = Embedding::Identity(kN + 1, 4);
      auto f = std::make_shared<ShrinkingTrajectory>(kM, kN, opt.profile, SpatialVec::Zero(kM), 0.0, P, E);
      return {f, "split_shrinker", plane(none, TimeExtent::kSlice), SpaceTimePoint(axis_point(0.6), 0.0)};
    }
    case SplitCase::kSliceQuasiPast:
      return {cone_field(0.0), "quasistatic_split_cone(T=0)", plane(axis_plane(), TimeExtent::kSlice),
              SpaceTimePoint(axis_point(0.0), -0.25)};
    case SplitCase::kSliceQuasiFuture:
      return {cone_field(0.25), "quasistatic_split_cone(T=0.25)", plane(axis_plane(), TimeExtent::kSlice),
              SpaceTimePoint(axis_point(0.2), 0.25)};
    case SplitCase::kSliceQuasiSplit:
      return {cone_field(0.0), "quasistatic_split_cone(T=0)", plane(none, TimeExtent::kSlice),
              SpaceTimePoint(axis_point(0.6), -0.25)};
    case SplitCase::kHalfLineExtend:
      return {cone_field(0.5), "quasistatic_split_cone(T=0.5)", plane(axis_plane(), TimeExtent::kHalfLine, 0.0),
              SpaceTimePoint(axis_point(0.1), 0.5)};
    case SplitCase::kHalfLineSplit:
      return {cone_field(0.0), "quasistatic_split_cone(T=0)", plane(none, TimeExtent::kHalfLine, 0.0),
              SpaceTimePoint(axis_point(0.6), -0.25)};
    case SplitCase::kStaticSplit:
      return {cone_field(std::nullopt), "static_split_cone", plane(none, TimeExtent::kFullLine),
              SpaceTimePoint(axis_point(0.6), 0.0)};
  }
  throw PreconditionError("unknown case");
}

int detected_level(const std::vector<double>& levels, double eps) {
  int best = -1;
  for (std::size_t j = 0; j < levels.size(); ++j)
    if (levels[j] <= eps) best = static_cast<int>(j);
  return best;
}

}  // namespace

SplitReport cone_split_verify(SplitCase which, const SplitVerifyOptions& opt) {
  const Setup s = setup(which, opt);
  SplitReport rep;
  rep.which = which;
  rep.field = s.name;
  rep.W = s.W;
  rep.Y = s.Y;
  rep.predicted = cone_split_classify(s.W, s.Y, opt.rho);

  std::vector<std::shared_ptr<const ShrinkProfile>> profiles;
  if (opt.profile) profiles.push_back(opt.profile);
  const Dictionary dict(kM, kN, opt.dictionary, profiles);
  const auto grid = std::make_shared<const WindowGrid>(kM, opt.window_cells, opt.window_cells);
  const Window w0 = sample_window(*s.field, s.W.anchor, 1.0, grid);
  const Window wy = sample_window(*s.field, s.Y, 1.0, grid);
  const auto at0 = distances_by_level(w0, dict);
  const auto atY = distances_by_level(wy, dict);
  rep.hypothesis_at_0 = at0[static_cast<std::size_t>(plane_symmetry(s.W))];
  rep.hypothesis_at_Y = atY[0];
  rep.detected_symmetry = detected_level(at0, opt.epsilon);
  if (rep.detected_symmetry >= 0) {
    const BestFit fit = best_fit(w0, rep.detected_symmetry, dict);
    rep.detected_extent = fit.plane.extent;
    rep.detected_t_end = fit.plane.t_end;
    const auto& P = rep.predicted.plane;
    bool match = fit.plane.dim() == P.dim() && fit.plane.extent == P.extent;
    for (int r = 0; r < P.dim() && match; ++r) match = fit.plane.contains_direction(P.V.row(r).transpose(), 1e-6);
    if (match && P.extent == TimeExtent::kHalfLine) match = std::abs(fit.plane.t_end - P.t_end) <= 1e-9;
    rep.plane_matches = match;
  }
  rep.passed = rep.hypothesis_at_0 <= opt.epsilon && rep.hypothesis_at_Y <= opt.epsilon &&
               rep.detected_symmetry == rep.predicted.symmetry_after && rep.plane_matches;
  return rep;
}

bool cone_split_negative_control(double rho) {
  InvariancePlane W = plane(axis_plane(), TimeExtent::kFullLine);
  try {
    cone_split_classify(W, SpaceTimePoint(axis_point(0.1), 0.0), rho);
  } catch (const PreconditionError&) {
    return true;
  }
  return false;
}

}  // namespace qstrat
