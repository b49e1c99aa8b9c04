#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qstrat/candidates.hpp"
#include "qstrat/windows.hpp"

namespace qstrat {

/// The seven rows of the cone-splitting table.
enum class SplitCase {
  kSliceSpatial = 1,       // W slice, |s| < rho^2
  kSliceQuasiPast = 2,     // W slice, |s| >= rho^2, d(y, V) < rho, s < 0
  kSliceQuasiFuture = 3,   // W slice, |s| >= rho^2, d(y, V) < rho, s > 0
  kSliceQuasiSplit = 4,    // W slice, |s| >= rho^2, d(y, V) >= rho
  kHalfLineExtend = 5,     // W half-line, d(y, V) < rho
  kHalfLineSplit = 6,      // W half-line, d(y, V) >= rho
  kStaticSplit = 7,        // W full line
};

std::string to_string(SplitCase c);

struct SplitOutcome {
  SplitCase which = SplitCase::kSliceSpatial;
  InvariancePlane plane;  // predicted upgraded plane
  int symmetry_before = 0;
  int symmetry_after = 0;
  bool increments = false;
};

/// Symmetry count carried by an invariance plane: dim V, plus 2 for a full line.
int plane_symmetry(const InvariancePlane& W);

/// Pure case analysis. Throws PreconditionError when Y lies in T_rho(W).
SplitOutcome cone_split_classify(const InvariancePlane& W, const SpaceTimePoint& Y, double rho);

struct SplitVerifyOptions {
  double rho = 0.4;
  double epsilon = 1e-8;  // detection threshold on the L2 distance
  int window_cells = 9;
  std::shared_ptr<const ShrinkProfile> profile;  // needed by the spatial slice case
  DictionaryConfig dictionary{8, 2, 17, true, true, true, true, true, 0};
};

struct SplitReport {
  SplitCase which = SplitCase::kSliceSpatial;
  std::string field;
  InvariancePlane W;
  SpaceTimePoint Y;
  SplitOutcome predicted;
  double hypothesis_at_0 = 0.0;  // best distance at level j(W) at 0
  double hypothesis_at_Y = 0.0;  // best distance at level 0 at Y
  int detected_symmetry = 0;     // largest level with distance <= epsilon
  TimeExtent detected_extent = TimeExtent::kSlice;
  double detected_t_end = 0.0;
  bool plane_matches = false;
  bool passed = false;
};

/// Builds an exact synthetic field for the case (m = 4, n = 3), checks both hypotheses and
/// compares the detected upgrade at 0 with the classifier.
SplitReport cone_split_verify(SplitCase which, const SplitVerifyOptions& opt);

/// The negative control: a split cone with Y on its own axis within rho. Returns true when the
/// classifier refuses it.
bool cone_split_negative_control(double rho);

}  // namespace qstrat
