#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qstrat/candidates.hpp"
#include "qstrat/energies.hpp"
#include "qstrat/trajectory.hpp"
#include "qstrat/windows.hpp"

namespace qstrat {

/// Scale parameters shared by the bit vectors and the strata ladder. Scales are R gamma^k.
struct ScaleParams {
  double gamma = 0.25;
  int q = 1;
  double delta = 0.1;
  int beta = 8;
  double R = 1.0;

  bool operator==(const ScaleParams&) const = default;
  /// Throws PreconditionError unless 0 < gamma < 1/2, q >= 1, beta >= 1, delta > 0, R > 0.
  void validate() const;
  double scale(int k) const;
};

/// Q = floor((2q+1) Lambda_2 / delta) + q.
long ones_bound(const ScaleParams& p, double lambda2);

struct ScaleBitVector {
  std::vector<std::uint8_t> bits;  // bits[alpha - 1], alpha = 1..beta
  ScaleParams params;
  std::vector<double> W;  // W_alpha = W_{R gamma^{alpha-q}, R gamma^{alpha+q}}
  int K = 0;              // #{alpha > q : W_alpha > delta}
  double lambda2 = 0.0;   // Struwe energy over the union of all annuli and P^-_{2R}

  int ones() const;
};

/// Bits from one layered Struwe pass. Throws ResolutionError when R gamma^{beta+q} < 4h and
/// InvariantViolation when K exceeds (2q+1) Lambda_2 / delta.
ScaleBitVector scale_bits(const Trajectory& traj, const SpaceTimePoint& X, const ScaleParams& p,
                          const StruweQuadrature& q = {});

/// Throws InvariantViolation unless K <= (2q+1) lambda2 / delta.
void check_differentiation_bound(const ScaleBitVector& b, double lambda2);

struct Decomposition {
  std::map<std::vector<std::uint8_t>, std::vector<std::size_t>> classes;
  long Q = 0;        // from the supplied Lambda_2
  long Q_upper = 0;  // from 2 Lambda_2
};

/// Groups point indices by bit vector. Throws PreconditionError on mixed parameters and
/// InvariantViolation when a key has more than Q ones or there are more than beta^Q classes.
Decomposition decompose(std::span<const ScaleBitVector> bits, double lambda2);

/// Best-fit distances along the ladder R, R gamma, ... down to r_min.
struct LadderFit {
  SpaceTimePoint X;
  std::vector<double> scales;
  double next_scale = 0.0;  // first ladder scale below r_min
  std::vector<std::vector<double>> by_level;  // [scale][j], from distances_by_level
  bool determined = true;
  std::string failure;
};

LadderFit ladder_fit(const Trajectory& traj, const SpaceTimePoint& X, const ScaleParams& p, double r_min,
                     const Dictionary& dict, WindowGridPtr grid, const WindowOptions& wopt = {});

struct StrataLabel {
  int j = 0;
  double eta = 0.0;
  double r = 0.0;
  bool member = false;
  bool determined = true;
  std::optional<double> witness_scale;
  double witness_distance = 0.0;
};

/// Membership in S^j_{eta,r}: distance to every (j+1)-selfsimilar member exceeds eta at every
/// ladder scale in [r, R].
StrataLabel label_from(const LadderFit& fit, int j, double eta, double r);

StrataLabel strata_membership(const Trajectory& traj, const SpaceTimePoint& X, int j, double eta, double r,
                              const ScaleParams& p, const Dictionary& dict, WindowGridPtr grid,
                              const WindowOptions& wopt = {});

}  // namespace qstrat
