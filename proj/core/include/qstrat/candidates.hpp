#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qstrat/shrink_profile.hpp"
#include "qstrat/trajectory.hpp"
#include "qstrat/windows.hpp"

namespace qstrat {

enum class CandidateKind { kStatic, kQuasistatic, kShrinking };
enum class ProfileKind { kConstant, kCone, kEquivariant };
enum class TimeExtent { kSlice, kHalfLine, kFullLine };

std::string to_string(CandidateKind k);
std::string to_string(ProfileKind k);
std::string to_string(TimeExtent e);

/// W_X: (x + V) x {t}, (x + V) x (-inf, t_end], or (x + V) x R.
struct InvariancePlane {
  SpaceTimePoint anchor;
  Basis V;  // d x m, orthonormal rows; d may be 0
  TimeExtent extent = TimeExtent::kFullLine;
  double t_end = 0.0;

  int dim() const { return static_cast<int>(V.rows()); }
  /// Parabolic distance from Y to the plane (spatial part to x + V, time part to the extent).
  double distance(const SpaceTimePoint& Y) const;
  /// True when y - x lies in V within tol.
  bool contains_direction(const SpatialVec& v, double tol = 1e-9) const;
};

/// A selfsimilar comparison map in window coordinates (anchored at the window center).
/// Profile values live in R^k (k = 1, 3 or ell+1) and reach the target through `embed`.
struct SelfSimilarCandidate {
  CandidateKind kind = CandidateKind::kStatic;
  ProfileKind profile = ProfileKind::kConstant;
  int m = 1;
  int n = 2;
  Basis plane;       // d x m basis of V
  Basis transverse;  // 3 x m for cones, ell x m for equivariant profiles
  Embedding embed;   // (n+1) x k isometry applied to profile values
  double truncation = 1.0;  // quasistatic: static for t <= truncation
  TargetVec after;          // quasistatic value for t > truncation
  std::shared_ptr<const ShrinkProfile> shrink;

  int plane_dim() const { return static_cast<int>(plane.rows()); }
  /// Value at window coordinates (x, t); nullopt when singular or masked.
  std::optional<TargetVec> at(const SpatialVec& x, double t, bool backward_only = true) const;
};

/// D(phi): dim V, plus 2 when static.
int symmetry_count(const SelfSimilarCandidate& c);

/// Samples the candidate on the window grid (base and scale left default).
Window evaluate(const SelfSimilarCandidate& c, WindowGridPtr grid, bool backward_only = true);

struct DictionaryConfig {
  int planes_per_dim = 64;
  int refine_rounds = 3;
  int truncations = 17;  // T grid on [0, 1]
  bool backward_only = true;
  bool include_constant = true;
  bool include_cones = true;
  bool include_quasistatic = true;
  bool include_shrinking = true;
  std::uint64_t seed = 0;
};

/// Immutable comparison dictionary for one (m, n).
class Dictionary {
 public:
  Dictionary(int m, int n, DictionaryConfig cfg = {},
             std::vector<std::shared_ptr<const ShrinkProfile>> profiles = {});

  int m() const { return m_; }
  int n() const { return n_; }
  const DictionaryConfig& config() const { return cfg_; }
  const std::vector<std::shared_ptr<const ShrinkProfile>>& profiles() const { return profiles_; }
  /// Seed planes of dimension d: coordinate subspaces first, then quasi-random samples.
  const std::vector<Basis>& planes(int d) const { return planes_[static_cast<std::size_t>(d)]; }
  /// Largest symmetry count any member can reach.
  int max_symmetry() const;
  /// True when some member has D >= j.
  bool supports(int j) const;

 private:
  int m_;
  int n_;
  DictionaryConfig cfg_;
  std::vector<std::shared_ptr<const ShrinkProfile>> profiles_;
  std::vector<std::vector<Basis>> planes_;
};

struct BestFit {
  double distance = 0.0;
  SelfSimilarCandidate candidate;
  InvariancePlane plane;
  int symmetry = 0;
};

/// Minimizes l2_distance_sq(window, phi) over dictionary members with D(phi) >= j.
/// Throws PreconditionError when no member reaches j.
BestFit best_fit(const Window& w, int j, const Dictionary& dict);

/// Best static member with D >= j whose invariant plane contains V. Throws PreconditionError
/// when no static family qualifies.
BestFit best_fit_static_containing(const Window& w, int j, const Basis& V, const Dictionary& dict);

/// Entry j is the best distance over members with D >= j, for j = 0..m+2; infinity when none.
/// Each family is fitted once, so the entries agree with best_fit.
std::vector<double> distances_by_level(const Window& w, const Dictionary& dict);

/// Orthonormal complement rows of V inside R^m.
Basis orthogonal_complement(const Basis& V, int m);

/// Quasi-random d-planes in R^m: Halton points mapped to Gaussian matrices, then QR.
std::vector<Basis> grassmannian_sample(int m, int d, int count, std::uint64_t seed);

struct StructureTensor {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSpatialDim, kMaxSpatialDim> Q;
  double tau = 0.0;
  SpatialVec eigenvalues;  // ascending
  int null_directions = 0;
  bool is_static = false;
  int symmetry_estimate = 0;
};

/// Sample means of d_i u . d_j u and |d_t u|^2 over the window by central differences.
StructureTensor structure_tensor(const Window& w, double tol_sym = 1e-6);

}  // namespace qstrat
