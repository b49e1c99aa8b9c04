#include "qstrat/candidates.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <boost/math/special_functions/erf.hpp>

#include "qstrat/parallel.hpp"

namespace qstrat {

std::string to_string(CandidateKind k) {
  switch (k) {
    case CandidateKind::kStatic: return "static";
    case CandidateKind::kQuasistatic: return "quasistatic";
    case CandidateKind::kShrinking: return "shrinking";
  }
  return "?";
}

std::string to_string(ProfileKind k) {
  switch (k) {
    case ProfileKind::kConstant: return "constant";
    case ProfileKind::kCone: return "cone";
    case ProfileKind::kEquivariant: return "equivariant";
  }
  return "?";
}

std::string to_string(TimeExtent e) {
  switch (e) {
    case TimeExtent::kSlice: return "slice";
    case TimeExtent::kHalfLine: return "half_line";
    case TimeExtent::kFullLine: return "full_line";
  }
  return "?";
}

double InvariancePlane::distance(const SpaceTimePoint& Y) const {
  SpatialVec v = Y.x - anchor.x;
  if (dim() > 0) v -= V.transpose() * (V * v);
  double dt = 0.0;
  switch (extent) {
    case TimeExtent::kSlice: dt = std::abs(Y.t - anchor.t); break;
    case TimeExtent::kHalfLine: dt = std::max(0.0, Y.t - t_end); break;
    case TimeExtent::kFullLine: dt = 0.0; break;
  }
  return std::max(v.norm(), std::sqrt(dt));
}

bool InvariancePlane::contains_direction(const SpatialVec& v, double tol) const {
  SpatialVec r = v;
  if (dim() > 0) r -= V.transpose() * (V * v);
  return r.norm() <= tol * std::max(1.0, v.norm());
}

// ---------------------------------------------------------------------------

namespace {

using ProfileVec = TargetVec;  // profile values in R^k, k <= ell + 1

std::optional<ProfileVec> profile_value(const SelfSimilarCandidate& c, const SpatialVec& x, double t,
                                        bool backward_only) {
  switch (c.profile) {
    case ProfileKind::kConstant: {
      ProfileVec v(1);
      v[0] = 1.0;
      return v;
    }
    case ProfileKind::kCone: {
      const ProfileVec y = c.transverse * x;
      const double r = y.norm();
      if (r < 1e-12) return std::nullopt;
      return ProfileVec(y / r);
    }
    case ProfileKind::kEquivariant: {
      const int ell = c.shrink->ell();
      const ProfileVec y = c.transverse * x;
      ProfileVec out(ell + 1);
      if (t < 0.0) {
        const double rho = y.norm() / std::sqrt(-t);
        if (rho < 1e-9) {
          out.setZero();
          out[ell] = 1.0;
          return out;
        }
        const double h = c.shrink->h(rho);
        out.head(ell) = std::sin(h) * y / y.norm();
        out[ell] = std::cos(h);
        return out;
      }
      if (backward_only) return std::nullopt;
      const double r = y.norm();
      if (r < 1e-12) return std::nullopt;
      out.head(ell) = std::sin(c.shrink->h_inf()) * y / r;
      out[ell] = std::cos(c.shrink->h_inf());
      return out;
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<TargetVec> SelfSimilarCandidate::at(const SpatialVec& x, double t, bool backward_only) const {
  if (kind == CandidateKind::kQuasistatic && t > truncation) return after;
  const auto p = profile_value(*this, x, t, backward_only);
  if (!p) return std::nullopt;
  return TargetVec(embed * *p);
}

int symmetry_count(const SelfSimilarCandidate& c) {
  return c.plane_dim() + (c.kind == CandidateKind::kStatic ? 2 : 0);
}

Window evaluate(const SelfSimilarCandidate& c, WindowGridPtr grid, bool backward_only) {
  Window w(grid, c.n + 1);
  w.base = origin_point(grid->m());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    if (const auto v = c.at(grid->x(i), grid->t(i), backward_only)) {
      w.set(i, *v);
      w.valid[i] = 1;
    }
  }
  return w;
}

// ---------------------------------------------------------------------------

Basis orthogonal_complement(const Basis& V, int m) {
  const int d = static_cast<int>(V.rows());
  if (d == 0) {
    Basis I = Basis::Identity(m, m);
    return I;
  }
  Eigen::MatrixXd A = V.transpose();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, m);
  Basis out(m - d, m);
  for (int r = 0; r < m - d; ++r) out.row(r) = Q.col(d + r).transpose();
  return out;
}

std::vector<Basis> grassmannian_sample(int m, int d, int count, std::uint64_t seed) {
  static constexpr std::array<int, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  std::vector<Basis> out;
  if (d <= 0 || d >= m) return out;
  const int dims = m * d;
  for (int s = 0; s < count; ++s) {
    const std::uint64_t index = seed * 1000003ULL + static_cast<std::uint64_t>(s) + 1;
    Eigen::MatrixXd G(m, d);
    for (int k = 0; k < dims; ++k) {
      // Radical inverse in base p.
      const int p = kPrimes[static_cast<std::size_t>(k)];
      double f = 1.0, u = 0.0;
      for (std::uint64_t i = index; i > 0; i /= static_cast<std::uint64_t>(p)) {
        f /= p;
        u += f * static_cast<double>(i % static_cast<std::uint64_t>(p));
      }
      u = std::clamp(u, 1e-12, 1.0 - 1e-12);
      G(k % m, k / m) = std::sqrt(2.0) * boost::math::erf_inv(2.0 * u - 1.0);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(m, d);
    out.emplace_back(Q.transpose());
  }
  return out;
}

namespace {

std::vector<Basis> coordinate_planes(int m, int d) {
  std::vector<Basis> out;
  if (d < 0 || d > m) return out;
  std::vector<int> pick(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) pick[static_cast<std::size_t>(i)] = i;
  for (;;) {
    Basis b = Basis::Zero(d, m);
    for (int i = 0; i < d; ++i) b(i, pick[static_cast<std::size_t>(i)]) = 1.0;
    out.push_back(b);
    int i = d - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - d + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < d; ++k) pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

}  // namespace

Dictionary::Dictionary(int m, int n, DictionaryConfig cfg, std::vector<std::shared_ptr<const ShrinkProfile>> profiles)
    : m_(m), n_(n), cfg_(cfg), profiles_(std::move(profiles)) {
  if (m < 1 || m > kMaxSpatialDim) throw DimensionMismatch("dictionary dimension must lie in [1, 4]");
  if (cfg_.truncations < 1) throw PreconditionError("need at least one truncation time");
  planes_.resize(static_cast<std::size_t>(m + 1));
  for (int d = 0; d <= m; ++d) {
    auto& list = planes_[static_cast<std::size_t>(d)];
    list = coordinate_planes(m, d);
    auto extra = grassmannian_sample(m, d, cfg_.planes_per_dim, cfg_.seed);
    list.insert(list.end(), extra.begin(), extra.end());
  }
  for (const auto& p : profiles_)
    if (!p) throw PreconditionError("null shrinking profile");
}

namespace {

struct Family {
  CandidateKind kind;
  ProfileKind profile;
  int d;
  std::shared_ptr<const ShrinkProfile> shrink;
  int D() const { return d + (kind == CandidateKind::kStatic ? 2 : 0); }
};

std::vector<Family> families(const Dictionary& dict) {
  const int m = dict.m(), n = dict.n();
  const auto& cfg = dict.config();
  std::vector<Family> out;
  if (cfg.include_constant) {
    out.push_back({CandidateKind::kStatic, ProfileKind::kConstant, m, nullptr});
    if (cfg.include_quasistatic) out.push_back({CandidateKind::kQuasistatic, ProfileKind::kConstant, m, nullptr});
  }
  if (cfg.include_cones && m >= 3 && n >= 2) {
    out.push_back({CandidateKind::kStatic, ProfileKind::kCone, m - 3, nullptr});
    if (cfg.include_quasistatic) out.push_back({CandidateKind::kQuasistatic, ProfileKind::kCone, m - 3, nullptr});
  }
  if (cfg.include_shrinking)
    for (const auto& p : dict.profiles())
      if (p->ell() <= m && p->ell() <= n)
        out.push_back({CandidateKind::kShrinking, ProfileKind::kEquivariant, m - p->ell(), p});
  return out;
}

}  // namespace

int Dictionary::max_symmetry() const {
  int best = -1;
  for (const auto& f : families(*this)) best = std::max(best, f.D());
  return best;
}

bool Dictionary::supports(int j) const { return max_symmetry() >= j; }

// ---------------------------------------------------------------------------

namespace {

using Moment = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxComponents, kMaxComponents>;

// Per-slice sums of w_i c_i^T over jointly valid samples, plus their counts.
struct SliceMoments {
  std::vector<Moment> M;
  std::vector<std::size_t> N;
};

// Window-only per-slice sums for constant continuations.
struct WindowSums {
  std::vector<TargetVec> S;
  std::vector<std::size_t> N;
};

WindowSums window_sums(const Window& w) {
  const auto& g = *w.grid;
  WindowSums out{std::vector<TargetVec>(static_cast<std::size_t>(g.w_t()), TargetVec::Zero(w.components)),
                 std::vector<std::size_t>(static_cast<std::size_t>(g.w_t()), 0)};
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.valid[i]) continue;
    const auto k = static_cast<std::size_t>(g.slice(i));
    out.S[k] += w.value(i);
    ++out.N[k];
  }
  return out;
}

SliceMoments slice_moments(const Window& w, const SelfSimilarCandidate& proto, bool backward_only) {
  const auto& g = *w.grid;
  const int k = proto.profile == ProfileKind::kConstant ? 1
                : proto.profile == ProfileKind::kCone  ? 3
                                                       : proto.shrink->ell() + 1;
  const auto slices = static_cast<std::size_t>(g.w_t());
  SliceMoments out{std::vector<Moment>(slices, Moment::Zero(w.components, k)), std::vector<std::size_t>(slices, 0)};
  // Slices are independent; each writes only its own entry.
  parallel_for(slices, [&](std::size_t s) {
    const std::size_t per = g.per_slice();
    for (std::size_t c = 0; c < per; ++c) {
      const std::size_t i = s * per + c;
      if (!w.valid[i]) continue;
      const auto p = profile_value(proto, g.x(i), g.t(i), backward_only);
      if (!p) continue;
      out.M[s].noalias() += w.value(i) * p->transpose();
      ++out.N[s];
    }
  });
  return out;
}

struct Score {
  double distance = std::numeric_limits<double>::infinity();
  double truncation = 1.0;
};

double nuclear(const Moment& M) {
  Eigen::JacobiSVD<Moment> svd(M);
  return svd.singularValues().sum();
}

Score score_family(const Family& f, const SliceMoments& sm, const WindowSums& ws, const WindowGrid& g,
                   const DictionaryConfig& cfg, double volume) {
  Score best;
  if (f.kind != CandidateKind::kQuasistatic) {
    Moment M = Moment::Zero(sm.M.front().rows(), sm.M.front().cols());
    std::size_t N = 0;
    for (std::size_t s = 0; s < sm.M.size(); ++s) {
      M += sm.M[s];
      N += sm.N[s];
    }
    if (N == 0) return best;
    best.distance = std::max(0.0, volume * (2.0 - 2.0 * nuclear(M) / static_cast<double>(N)));
    return best;
  }
  for (int ti = 0; ti < cfg.truncations; ++ti) {
    const double T = cfg.truncations == 1 ? 0.0 : static_cast<double>(ti) / (cfg.truncations - 1);
    Moment M = Moment::Zero(sm.M.front().rows(), sm.M.front().cols());
    TargetVec S = TargetVec::Zero(sm.M.front().rows());
    std::size_t N = 0;
    for (std::size_t s = 0; s < sm.M.size(); ++s) {
      if (g.slice_time(static_cast<int>(s)) <= T) {
        M += sm.M[s];
        N += sm.N[s];
      } else {
        S += ws.S[s];
        N += ws.N[s];
      }
    }
    if (N == 0) continue;
    const double d = std::max(0.0, volume * (2.0 - 2.0 * (nuclear(M) + S.norm()) / static_cast<double>(N)));
    if (d < best.distance - 1e-12) {
      best.distance = d;
      best.truncation = T;
    }
  }
  return best;
}

SelfSimilarCandidate prototype(const Family& f, int m, int n, const Basis& V) {
  SelfSimilarCandidate c;
  c.kind = f.kind;
  c.profile = f.profile;
  c.m = m;
  c.n = n;
  c.plane = V;
  c.transverse = f.profile == ProfileKind::kConstant ? Basis(0, m) : orthogonal_complement(V, m);
  c.shrink = f.shrink;
  return c;
}

// Rotates the frame [V; V_perp] in the plane of V row a and V_perp row b.
Basis rotate_plane(const Basis& V, const Basis& perp, int a, int b, double theta) {
  Basis out = V;
  out.row(a) = std::cos(theta) * V.row(a) + std::sin(theta) * perp.row(b);
  return out;
}

// Completes the minimizer: target alignment and the continuation value.
void finish_candidate(SelfSimilarCandidate& c, const SliceMoments& sm, const WindowSums& ws, const WindowGrid& g) {
  const int rows = static_cast<int>(sm.M.front().rows());
  Moment M = Moment::Zero(rows, sm.M.front().cols());
  TargetVec S = TargetVec::Zero(rows);
  for (std::size_t s = 0; s < sm.M.size(); ++s) {
    if (c.kind != CandidateKind::kQuasistatic || g.slice_time(static_cast<int>(s)) <= c.truncation) M += sm.M[s];
    else S += ws.S[s];
  }
  Eigen::JacobiSVD<Moment> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  c.embed = svd.matrixU() * svd.matrixV().transpose();
  if (c.kind == CandidateKind::kQuasistatic) {
    if (S.norm() > 0.0) {
      c.after = S / S.norm();
    } else {
      c.after = TargetVec::Zero(rows);
      c.after[rows - 1] = 1.0;
    }
  }
}

}  // namespace

namespace {

struct FamilyFit {
  Score score;
  Basis V;
};

// Rows [0, fixed) of every seed are held in place during refinement.
FamilyFit fit_family(const Family& f, const Window& w, const WindowSums& ws, const Dictionary& dict,
                     const std::vector<Basis>& seeds, int fixed) {
  const auto& cfg = dict.config();
  const auto& g = *w.grid;
  const double vol = g.volume();
  const int m = dict.m();
  auto eval = [&](const Basis& V) {
    const auto proto = prototype(f, m, dict.n(), V);
    return score_family(f, slice_moments(w, proto, cfg.backward_only), ws, g, cfg, vol);
  };
  FamilyFit best;
  for (const auto& V : seeds) {
    const Score sc = eval(V);
    if (sc.distance < best.score.distance - 1e-12) best = {sc, V};
  }
  if (!std::isfinite(best.score.distance) || f.d == 0 || f.d == m) return best;
  // Local refinement by rotations between V and its complement.
  double step = std::acos(-1.0) / 32.0;
  for (int round = 0; round < cfg.refine_rounds; ++round, step *= 0.25) {
    for (int a = fixed; a < f.d; ++a) {
      for (int b = 0; b < m - f.d; ++b) {
        for (int dir : {1, -1}) {
          for (int tries = 0; tries < 8; ++tries) {
            const Basis V2 = rotate_plane(best.V, orthogonal_complement(best.V, m), a, b, dir * step);
            const Score sc = eval(V2);
            if (!(sc.distance < best.score.distance - 1e-12)) break;
            best = {sc, V2};
          }
        }
      }
    }
  }
  return best;
}

FamilyFit fit_family(const Family& f, const Window& w, const WindowSums& ws, const Dictionary& dict) {
  return fit_family(f, w, ws, dict, dict.planes(f.d), 0);
}

void check_window(const Window& w, const Dictionary& dict) {
  if (!w.grid) throw PreconditionError("window grid missing");
  if (w.grid->m() != dict.m() || w.components != dict.n() + 1)
    throw PreconditionError("window does not match dictionary");
}

InvariancePlane plane_of(const SelfSimilarCandidate& c, const Window& w) {
  InvariancePlane W;
  W.anchor = w.base;
  W.V = c.plane;
  switch (c.kind) {
    case CandidateKind::kStatic: W.extent = TimeExtent::kFullLine; break;
    case CandidateKind::kQuasistatic:
      W.extent = TimeExtent::kHalfLine;
      W.t_end = w.base.t + w.scale * w.scale * c.truncation;
      break;
    case CandidateKind::kShrinking: W.extent = TimeExtent::kSlice; break;
  }
  return W;
}

}  // namespace

BestFit best_fit(const Window& w, int j, const Dictionary& dict) {
  check_window(w, dict);
  const WindowSums ws = window_sums(w);
  bool any = false;
  BestFit best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& f : families(dict)) {
    if (f.D() < j) continue;
    any = true;
    const FamilyFit fit = fit_family(f, w, ws, dict);
    if (fit.score.distance < best.distance - 1e-12) {
      auto cand = prototype(f, dict.m(), dict.n(), fit.V);
      cand.truncation = fit.score.truncation;
      finish_candidate(cand, slice_moments(w, cand, dict.config().backward_only), ws, *w.grid);
      best.distance = fit.score.distance;
      best.candidate = cand;
      best.symmetry = f.D();
    }
  }
  if (!any || !std::isfinite(best.distance))
    throw PreconditionError("dictionary has no member with the requested symmetry count");
  best.plane = plane_of(best.candidate, w);
  return best;
}

BestFit best_fit_static_containing(const Window& w, int j, const Basis& V, const Dictionary& dict) {
  check_window(w, dict);
  const int m = dict.m();
  const int l = static_cast<int>(V.rows());
  if (V.cols() != m) throw DimensionMismatch("plane dimension differs from the dictionary");
  const WindowSums ws = window_sums(w);
  const Basis perp = orthogonal_complement(V, m);
  BestFit best;
  best.distance = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& f : families(dict)) {
    if (f.kind != CandidateKind::kStatic || f.D() < j || f.d < l) continue;
    any = true;
    std::vector<Basis> seeds;
    std::vector<Basis> local{Basis(0, m - l)};
    if (f.d > l) local = coordinate_planes(m - l, f.d - l);
    if (f.d > l) {
      auto extra = grassmannian_sample(m - l, f.d - l, dict.config().planes_per_dim, dict.config().seed);
      local.insert(local.end(), extra.begin(), extra.end());
    }
    for (const auto& E : local) {
      Basis S(f.d, m);
      if (l > 0) S.topRows(l) = V;
      if (f.d > l) S.bottomRows(f.d - l) = E * perp;
      seeds.push_back(S);
    }
    const FamilyFit fit = fit_family(f, w, ws, dict, seeds, l);
    if (fit.score.distance < best.distance - 1e-12) {
      auto cand = prototype(f, m, dict.n(), fit.V);
      finish_candidate(cand, slice_moments(w, cand, dict.config().backward_only), ws, *w.grid);
      best.distance = fit.score.distance;
      best.candidate = cand;
      best.symmetry = f.D();
    }
  }
  if (!any || !std::isfinite(best.distance))
    throw PreconditionError("no static member contains the requested plane");
  best.plane = plane_of(best.candidate, w);
  return best;
}


std::vector<double> distances_by_level(const Window& w, const Dictionary& dict) {
  check_window(w, dict);
  const WindowSums ws = window_sums(w);
  std::vector<double> out(static_cast<std::size_t>(dict.m() + 3), std::numeric_limits<double>::infinity());
  for (const auto& f : families(dict)) {
    const double d = fit_family(f, w, ws, dict).score.distance;
    for (int j = 0; j <= f.D(); ++j) {
      auto& slot = out[static_cast<std::size_t>(j)];
      if (d < slot - 1e-12) slot = d;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StructureTensor structure_tensor(const Window& w, double tol_sym) {
  const auto& g = *w.grid;
  const int m = g.m();
  StructureTensor st;
  st.Q = decltype(st.Q)::Zero(m, m);
  std::size_t used = 0;
  const double hx = g.spatial_step(), ht = g.time_step();
  auto derivative = [&](std::size_t i, int axis, double step, TargetVec& out) {
    const long p = g.neighbor(i, axis, +1), q = g.neighbor(i, axis, -1);
    const bool vp = p >= 0 && w.valid[static_cast<std::size_t>(p)];
    const bool vq = q >= 0 && w.valid[static_cast<std::size_t>(q)];
    if (vp && vq) out = (w.value(static_cast<std::size_t>(p)) - w.value(static_cast<std::size_t>(q))) / (2.0 * step);
    else if (vp) out = (w.value(static_cast<std::size_t>(p)) - w.value(i)) / step;
    else if (vq) out = (w.value(i) - w.value(static_cast<std::size_t>(q))) / step;
    else return false;
    return true;
  };
  Gradient grad(m, w.components);
  TargetVec d;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!w.valid[i]) continue;
    bool ok = true;
    for (int a = 0; a < m && ok; ++a) {
      ok = derivative(i, a, hx, d);
      if (ok) grad.row(a) = d.transpose();
    }
    TargetVec dt;
    if (ok) ok = derivative(i, m, ht, dt);
    if (!ok) continue;
    st.Q += grad * grad.transpose();
    st.tau += dt.squaredNorm();
    ++used;
  }
  if (used > 0) {
    st.Q /= static_cast<double>(used);
    st.tau /= static_cast<double>(used);
  }
  Eigen::SelfAdjointEigenSolver<decltype(st.Q)> es(st.Q);
  st.eigenvalues = es.eigenvalues();
  for (int a = 0; a < m; ++a) st.null_directions += st.eigenvalues[a] < tol_sym ? 1 : 0;
  st.is_static = st.tau < tol_sym;
  st.symmetry_estimate = st.null_directions + (st.is_static ? 2 : 0);
  return st;
}

}  // namespace qstrat
