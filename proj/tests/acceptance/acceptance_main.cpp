// Acceptance suite: one PASS/FAIL line per criterion.
//
//   qstrat_acceptance [--only N] [--qstrat PATH] [--configs DIR] [--work DIR]
//
// Exit status is 0 iff every selected criterion passed.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qstrat/analysis.hpp"
#include "qstrat/cone_split.hpp"
#include "qstrat/energies.hpp"
#include "qstrat/parallel.hpp"
#include "qstrat/regularity.hpp"
#include "qstrat/shrink_profile.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/strata.hpp"

namespace fs = std::filesystem;
using namespace qstrat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Paths {
  std::string qstrat;
  fs::path configs;
  fs::path work;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

std::shared_ptr<const ShrinkProfile> ell3_profile() {
  static const auto p = [] {
    auto found = find_shrink_profiles(3);
    if (found.empty()) throw Error("no shrinking profile for ell = 3");
    return std::make_shared<const ShrinkProfile>(found.front());
  }();
  return p;
}

SpatialVec vec3(double a, double b, double c) {
  SpatialVec x(3);
  x << a, b, c;
  return x;
}

// ---------------------------------------------------------------------------
// 1. Struwe integrand on selfsimilar fields

Outcome criterion1() {
  const double R = 1.0, gamma = 0.25;
  std::vector<double> ladder;
  for (int k = 0; k <= 3; ++k) ladder.push_back(R * std::pow(gamma, k));
  // The pipeline quadrature against one four times finer in every coordinate.
  const StruweQuadrature base{6.0, 0.5, 0.25};
  const StruweQuadrature fine{6.0, 0.125, 0.0625};

  TargetVec pole = TargetVec::Zero(3);
  pole[2] = 1.0;
  struct Case {
    std::string name;
    TrajectoryPtr traj;
    SpaceTimePoint center;
    bool off_positive;
  };
  std::vector<Case> cases{
      {"constant", std::make_shared<ConstantTrajectory>(3, pole), origin_point(3), false},
      {"static_cone", ConeTrajectory::standard(3, 2), origin_point(3), true},
      {"quasistatic_cone", ConeTrajectory::standard(3, 2, 0.5), origin_point(3, 0.0), true},
      {"shrinking_profile", ShrinkingTrajectory::standard(3, 3, ell3_profile(), 0.0), origin_point(3), true},
  };
  bool ok = true;
  double worst_center = 0.0, worst_dev = 0.0, min_off = std::numeric_limits<double>::infinity();
  for (const auto& c : cases) {
    const auto at_center = struwe_layers(*c.traj, c.center, ladder, base);
    for (double v : at_center) {
      worst_center = std::max(worst_center, std::abs(v));
      ok = ok && std::abs(v) <= 1e-8;
    }
    if (!c.off_positive) continue;
    // Off-center point whose backward balls stay away from the singular set.
    SpaceTimePoint off = c.center;
    off.x[0] += 1.5;
    const auto coarse = struwe_layers(*c.traj, off, ladder, base);
    const auto oracle = struwe_layers(*c.traj, off, ladder, fine);
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      min_off = std::min(min_off, coarse[k]);
      ok = ok && coarse[k] > 0.0 && oracle[k] > 0.0;
      const double dev = std::abs(coarse[k] - oracle[k]) / oracle[k];
      worst_dev = std::max(worst_dev, dev);
      ok = ok && dev <= 0.02;
    }
  }
  return {ok, fmt("max |center| %.2e, min off-center %.3e, max deviation from 4x oracle %.2f%%", worst_center,
                  min_off, 100.0 * worst_dev)};
}

// ---------------------------------------------------------------------------
// 2. Scale-invariant Dirichlet energy of the cone

Outcome criterion2() {
  const auto cone = ConeTrajectory::standard(3, 2);
  // |grad u|^2 = 2/|x|^2; r^-3 int_{P_r} 2/|x|^2 = 2 r^-3 * 2r^2 * 4 pi r = 16 pi.
  const double exact = 16.0 * std::numbers::pi;
  std::vector<double> vals;
  for (double r : {0.25, 0.5, 1.0}) vals.push_back(dirichlet_scale_invariant(*cone, origin_point(3), r).value);
  double worst = 0.0;
  for (double v : vals) worst = std::max(worst, std::abs(v - exact) / exact);
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  const double spread = (*hi - *lo) / *lo;
  return {worst <= 0.02 && spread <= 0.01,
          fmt("values %.4f %.4f %.4f vs %.4f, max error %.2f%%, spread %.3f%%", vals[0], vals[1], vals[2], exact,
              100.0 * worst, 100.0 * spread)};
}

// ---------------------------------------------------------------------------
// 3. Quantitative differentiation on every shipped field

struct BitsRun {
  std::string name;
  TrajectoryPtr traj;
  std::vector<SpaceTimePoint> cloud;
  ScaleParams p;
};

std::vector<SpaceTimePoint> cube_cloud(int m, int k, double extent, double t, const SpatialVec& center) {
  std::vector<SpaceTimePoint> out;
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  for (;;) {
    SpatialVec x(m);
    for (int a = 0; a < m; ++a) x[a] = center[a] - extent + (idx[static_cast<std::size_t>(a)] + 0.5) * 2 * extent / k;
    out.emplace_back(x, t);
    int a = m - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= k) idx[static_cast<std::size_t>(a--)] = 0;
    if (a < 0) return out;
  }
}

Outcome criterion3() {
  std::vector<BitsRun> runs;
  ScaleParams p;
  p.beta = 4;
  TargetVec pole = TargetVec::Zero(3);
  pole[2] = 1.0;
  const SpatialVec o3 = SpatialVec::Zero(3);
  runs.push_back({"constant", std::make_shared<ConstantTrajectory>(3, pole), cube_cloud(3, 3, 0.5, 0.0, o3), p});
  runs.push_back({"static_cone", ConeTrajectory::standard(3, 2), cube_cloud(3, 4, 0.5, 0.0, o3), p});
  runs.push_back({"quasistatic_cone", ConeTrajectory::standard(3, 2, 0.25), cube_cloud(3, 3, 0.5, 0.5, o3), p});
  runs.push_back({"shrinking_profile", ShrinkingTrajectory::standard(3, 3, ell3_profile(), 0.0),
                  cube_cloud(3, 3, 0.5, 0.0, o3), p});
  {
    // Recorded flow: circle of length 1, 256 cells; Rgamma^(beta+q) = 4h and the backward
    // region P^-_{2R} fits in the recorded time range.
    const GridSpec g(1, 256, 1.0 / 256, true);
    auto traj = run(random_smooth_data(g, 2, 5, 3, 0.8), 0.3, 64);
    ScaleParams ps;
    ps.R = 0.25;
    ps.beta = 1;
    SpatialVec c(1);
    c << 0.5;
    runs.push_back({"simulated_m1", traj, cube_cloud(1, 16, 0.5, 0.28, c), ps});
  }
  bool ok = true;
  std::size_t points = 0;
  std::string notes;
  for (const auto& r : runs) {
    std::vector<ScaleBitVector> bits(r.cloud.size());
    std::vector<std::string> errors(r.cloud.size());
    parallel_for(r.cloud.size(), [&](std::size_t i) {
      try {
        bits[i] = scale_bits(*r.traj, r.cloud[i], r.p, StruweQuadrature{6.0, 0.5, 0.25});
      } catch (const InvariantViolation& e) {
        errors[i] = e.what();
      }
    });
    double lambda2 = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (!errors[i].empty()) {
        ok = false;
        notes += " " + r.name + ": " + errors[i];
        continue;
      }
      const auto& b = bits[i];
      lambda2 = std::max(lambda2, b.lambda2);
      if (static_cast<double>(b.K) > (2 * r.p.q + 1) * b.lambda2 / r.p.delta) ok = false;
      ++points;
    }
    try {
      const Decomposition d = decompose(bits, lambda2);
      const double log_bound = static_cast<double>(d.Q) * std::log(static_cast<double>(r.p.beta));
      if (std::log(static_cast<double>(d.classes.size())) > log_bound + 1e-12) ok = false;
      notes += fmt(" %s:%zu classes", r.name.c_str(), d.classes.size());
    } catch (const InvariantViolation& e) {
      ok = false;
      notes += " " + r.name + ": " + e.what();
    }
  }
  return {ok, fmt("%zu points on %zu fields;", points, runs.size()) + notes};
}

// ---------------------------------------------------------------------------
// 4. Minkowski exponent of the top stratum on the cone, decay of S^0 on a smooth run

struct ConeCloud {
  std::vector<SpatialVec> xs;
  std::vector<int> level;  // finest refinement region containing the point
};

// Nested lattices: level k has spacing gamma^k * h0 inside radius rad0 * gamma^k (level 0 inside
// rad_top). Duplicates are dropped; the result is sorted by distance to the origin.
ConeCloud multiscale_cloud(double gamma, int levels, double h0, double rad0, double rad_top, double key_step) {
  ConeCloud c;
  std::set<std::array<long, 3>> seen;
  auto radius = [&](int k) { return k == 0 ? rad_top : rad0 * std::pow(gamma, k); };
  for (int k = 0; k <= levels; ++k) {
    const double h = std::pow(gamma, k) * h0;
    const double rad = radius(k);
    const int n = static_cast<int>(std::ceil(rad / h));
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j)
        for (int l = -n; l <= n; ++l) {
          const SpatialVec x = vec3(i * h, j * h, l * h);
          if (x.norm() >= rad) continue;
          const std::array<long, 3> key{std::lround(x[0] / key_step), std::lround(x[1] / key_step),
                                        std::lround(x[2] / key_step)};
          if (!seen.insert(key).second) continue;
          int lev = 0;
          for (int kk = 0; kk <= levels; ++kk)
            if (x.norm() < radius(kk)) lev = kk;
          c.xs.push_back(x);
          c.level.push_back(lev);
        }
  }
  std::vector<std::size_t> order(c.xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return c.xs[a].norm() < c.xs[b].norm(); });
  ConeCloud sorted;
  for (auto i : order) {
    sorted.xs.push_back(c.xs[i]);
    sorted.level.push_back(c.level[i]);
  }
  return sorted;
}

// Volume of T_r(S x time copies) over the box [-L/2, L/2]^m x [t0, t0 + span].
double lifted_volume(const std::vector<SpatialVec>& S, double r, int m, const SpatialVec& box_lo, double L,
                     double t0, double span) {
  std::vector<SpaceTimePoint> pts;
  const int nt = static_cast<int>(std::ceil(span / (r * r / 2)));
  for (const auto& x : S)
    for (int k = 0; k <= nt; ++k) pts.emplace_back(x, t0 + k * span / nt);
  if (pts.empty()) return 0.0;
  const int cells = static_cast<int>(std::ceil(L / (r / 4)));
  const double h = L / cells;
  const GridSpec g(m, cells, h, false, (box_lo.array() + 0.5 * h).matrix());
  const int tc = static_cast<int>(std::ceil(span / (r * r / 4)));
  return tubular_volume(pts, r, g, TimeAxis{t0, span / tc, tc});
}

Outcome criterion4_cone() {
  const auto cone = ConeTrajectory::standard(3, 2);
  const Dictionary dict(3, 2, DictionaryConfig{});
  const auto grid = std::make_shared<const WindowGrid>(3, 9, 9);
  ScaleParams p;
  p.beta = 3;
  const double eta = 1.0;
  const std::vector<double> radii{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
  const ConeCloud cloud = multiscale_cloud(0.25, 3, 0.25, 2.5, 0.75, 1.0 / 256);
  std::vector<LadderFit> fits(cloud.xs.size());
  parallel_for(fits.size(), [&](std::size_t i) {
    fits[i] = ladder_fit(*cone, SpaceTimePoint(cloud.xs[i], 0.0), p, radii.back(), dict, grid);
  });
  std::vector<double> vols;
  bool concentrated = true;
  std::string spread;
  for (double r : radii) {
    std::vector<SpatialVec> S;
    double far = 0.0;
    for (const auto& f : fits)
      if (label_from(f, 2, eta, r).member) {
        S.push_back(f.X.x);
        far = std::max(far, f.X.x.norm());
      }
    // Concentration: every member lies within a few multiples of r of the singular point.
    concentrated = concentrated && !S.empty() && far <= 8.0 * r;
    spread += fmt(" %.3g", far);
    vols.push_back(lifted_volume(S, r, 3, SpatialVec::Constant(3, -0.5), 1.0, -1.0 / 32, 1.0 / 16));
  }
  const SlopeFit fit = fit_power_law(radii, vols, 3);
  const bool ok = concentrated && fit.slope >= 2.5;
  return {ok, fmt("cone: %zu points, slope %.3f (need >= 2.5), residual %.2f, member radius", cloud.xs.size(), fit.slope,
               fit.residual) +
                  spread};
}

Outcome criterion4_smooth() {
  const int N = 64;
  const GridSpec g(3, N, 1.0 / N, true);
  const double R = 0.125;
  const double t0 = R * R + 0.002;
  auto traj = run(random_smooth_data(g, 2, 17, 3, 0.5), t0 + R * R + 0.002, 16);
  if (traj->blown_up) {
    return {false, "smooth run broke down"};
  }
  const Dictionary dict(3, 2, DictionaryConfig{16, 2, 9, true, true, true, true, false, 17});
  const auto grid = std::make_shared<const WindowGrid>(3, 9, 9);
  ScaleParams p;
  p.R = R;
  p.beta = 3;
  // Labels only change at ladder scales R gamma^k, so the radii follow the ladder.
  const std::vector<double> radii{R, R * p.gamma, R * p.gamma * p.gamma};
  const auto cloud = cube_cloud(3, 8, 0.5, t0, SpatialVec::Constant(3, 0.5));
  std::vector<LadderFit> fits(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) { fits[i] = ladder_fit(*traj, cloud[i], p, radii.back(), dict, grid); });
  // eta: upper quartile of the level-1 distances at R, so that S^0 at R is a proper subset.
  std::vector<double> top;
  for (const auto& f : fits)
    if (f.determined) top.push_back(f.by_level.front()[1]);
  if (top.empty()) {
    return {false, "no determined fits on the smooth run"};
  }
  std::sort(top.begin(), top.end());
  const double eta = top[top.size() * 3 / 4];
  std::vector<double> vols;
  std::vector<std::size_t> counts;
  for (double r : radii) {
    std::vector<SpatialVec> S;
    for (const auto& f : fits)
      if (label_from(f, 0, eta, r).member) S.push_back(f.X.x);
    counts.push_back(S.size());
    if (S.empty()) {
      vols.push_back(0.0);
      continue;
    }
    // Tight box around the tube keeps the fine radii affordable.
    SpatialVec lo = S.front(), hi = S.front();
    for (const auto& x : S) {
      lo = lo.cwiseMin(x);
      hi = hi.cwiseMax(x);
    }
    const double L = (hi - lo).maxCoeff() + 2.0 * r;
    vols.push_back(lifted_volume(S, r, 3, (lo.array() - r).matrix(), L, t0 - 0.001, 0.002));
  }
  // Decay envelope between consecutive radii: V(r) <= V(r') (r / r')^4.5. Empty strata count as
  // zero volume and satisfy it.
  bool ok = true;
  for (std::size_t k = 1; k < radii.size(); ++k)
    ok = ok && vols[k] <= vols[k - 1] * std::pow(radii[k] / radii[k - 1], 4.5) * (1.0 + 1e-12);
  std::string slope = "n/a";
  try {
    const SlopeFit fit = fit_power_law(radii, vols, 3);
    slope = fmt("%.3f", fit.slope);
    ok = ok && fit.slope >= 4.5;
  } catch (const PreconditionError&) {
  }
  return {ok, fmt("smooth: eta %.3g, members %zu %zu %zu, volumes %.3g %.3g %.3g, slope %s", eta, counts[0], counts[1],
               counts[2], vols[0], vols[1], vols[2], slope.c_str())};
}

Outcome criterion4() {
  const Outcome cone = criterion4_cone();
  const Outcome smooth = criterion4_smooth();
  return {cone.pass && smooth.pass, cone.detail + "; " + smooth.detail};
}

// ---------------------------------------------------------------------------
// 5. Covering structure on the cone labels

Outcome criterion5() {
  const double gamma = 0.25, eta = 1.0;
  const int B = 3;
  const auto cone = ConeTrajectory::standard(3, 2);
  const Dictionary dict(3, 2, DictionaryConfig{});
  const auto grid = std::make_shared<const WindowGrid>(3, 9, 9);
  ScaleParams p;
  p.gamma = gamma;
  p.beta = B;
  const ConeCloud cloud = multiscale_cloud(gamma, B, 0.5, 2.0, 1.0, 1.0 / 1024);
  std::vector<CoverPoint> spatial(cloud.xs.size());
  parallel_for(spatial.size(), [&](std::size_t i) {
    const SpaceTimePoint X(cloud.xs[i], 0.0);
    const auto f = ladder_fit(*cone, X, p, std::pow(gamma, B), dict, grid);
    auto& cp = spatial[i];
    cp.X = X;
    for (int b = 0; b <= B; ++b) cp.member.push_back(label_from(f, 2, eta, std::pow(gamma, b)).member);
    cp.bits.assign(static_cast<std::size_t>(B), 1);
    if (cp.member[1]) cp.bits = scale_bits(*cone, X, p, StruweQuadrature{6.0, 0.5, 0.25}).bits;
  });
  // Static field: lift with time copies at the spacing of the point's refinement level.
  std::vector<CoverPoint> pts;
  for (std::size_t i = 0; i < spatial.size(); ++i) {
    const int lev = cloud.level[i];
    const double tau = std::pow(gamma, 2 * lev) / 4;
    const double T = std::min(1.0, 4 * std::pow(gamma, 2 * (lev - 1)));
    const int nt = static_cast<int>(std::floor(T / tau));
    for (int k = -nt; k <= nt; ++k) {
      CoverPoint c = spatial[i];
      c.X.t = k * tau;
      if (std::abs(c.X.t) < T) pts.push_back(std::move(c));
    }
  }
  CoverOptions o;
  o.gamma = gamma;
  o.beta_max = B;
  const CoverTree tree = recursive_cover(pts, o);
  std::vector<double> good, bad;
  for (const auto& s : tree.steps) (s.good ? good : bad).push_back(static_cast<double>(s.children));
  const auto cal = calibrate_cover_constant(3, gamma);
  const double g2 = std::pow(gamma, -2.0);
  const double good_max = good.empty() ? 0.0 : *std::max_element(good.begin(), good.end());
  const double bad_max = bad.empty() ? 0.0 : *std::max_element(bad.begin(), bad.end());
  const double ratio = median(good) > 0.0 ? median(bad) / median(good) : 0.0;
  const bool good_bounded = !good.empty() && good_max <= cal.c * g2;
  const bool ratio_ok = ratio > g2;
  return {good_bounded && ratio_ok,
          fmt("%zu points, good steps %zu (median %.0f, max %.0f, bound c*gamma^-2 = %.0f), bad steps %zu (median "
              "%.0f, max %.0f), median ratio %.2f (need > %.0f), c = %.3f",
              pts.size(), good.size(), median(good), good_max, cal.c * g2, bad.size(), median(bad), bad_max, ratio,
              g2, cal.c)};
}

// ---------------------------------------------------------------------------
// 6. Cone splitting

Outcome criterion6() {
  SplitVerifyOptions opt;
  opt.profile = ell3_profile();
  bool ok = true;
  std::string failed;
  for (int k = 1; k <= 7; ++k) {
    const SplitReport r = cone_split_verify(static_cast<SplitCase>(k), opt);
    ok = ok && r.passed && r.detected_symmetry == r.predicted.symmetry_after;
    if (!r.passed) failed += " " + to_string(r.which);
  }
  const bool refused = cone_split_negative_control(opt.rho);
  ok = ok && refused;
  return {ok, std::string("7 cases") + (failed.empty() ? " matched" : ", mismatched:" + failed) +
                  (refused ? ", negative control refused" : ", negative control accepted")};
}

// ---------------------------------------------------------------------------
// 7. Regularity scale of the cone

// For the cone |grad u| = sqrt2/rho and |hess u| = sqrt6/rho^2 at distance rho from the vertex.
// At X with |x| = d the binding node sits at distance d - r, so r_u solves
// sqrt2 s + sqrt6 s^2 = 1 with s = r/(d - r), i.e. kappa = s/(1 + s).
double cone_kappa_oracle() {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::sqrt(2.0) * mid + std::sqrt(6.0) * mid * mid < 1.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  return s / (1.0 + s);
}

Outcome criterion7() {
  const auto cone = ConeTrajectory::standard(3, 2);
  const double kappa = cone_kappa_oracle();
  double worst = 0.0;
  for (double d : {0.1, 0.2, 0.4}) {
    const SpatialVec x = vec3(0.6 * d, 0.48 * d, 0.64 * d);
    const auto rec = regularity_scale(*cone, SpaceTimePoint(x, 0.0), 1.0, RegularityOptions{d / 50, 0.0});
    worst = std::max(worst, std::abs(rec.r_u / x.norm() - kappa) / kappa);
  }
  std::map<double, std::array<double, 3>> I;
  for (double p : {2.0, 4.0}) {
    int k = 0;
    for (int n : {24, 48, 96}) {
      const double h = 1.0 / n;
      const GridSpec g(3, n, h, false, SpatialVec::Constant(3, -0.5 + h / 2));
      I[p][static_cast<std::size_t>(k++)] = lp_reciprocal_integral(*cone, p, 1.0, g, TimeAxis{0.0, 1.0, 1}).value;
    }
  }
  // Three-point order: increments shrink like h^order.
  auto order = [](const std::array<double, 3>& v) { return -std::log2((v[2] - v[1]) / (v[1] - v[0])); };
  const double o2 = order(I[2.0]), o4 = order(I[4.0]);
  const bool ok = worst <= 0.05 && o2 > 0.5 && std::abs(o4 + 1.0) <= 0.3;
  return {ok, fmt("kappa %.5f, max deviation %.2f%%; p=2 order %.3f (convergent), p=4 exponent %.3f (need -1 +- 0.3)",
                  kappa, 100.0 * worst, o2, o4)};
}

// ---------------------------------------------------------------------------
// 8. Solver

Outcome criterion8() {
  // Energy monotonicity on random smooth data.
  double worst_rise = 0.0;
  std::size_t steps = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const int m = seed % 2 ? 2 : 3;
    const GridSpec g(m, m == 2 ? 32 : 16, m == 2 ? 1.0 / 32 : 1.0 / 16, true);
    Snapshot u = random_smooth_data(g, 2, seed, 3, 0.6);
    const double dt = cfl_dt(g.h, m, 0.25);
    double e = dirichlet_energy(u);
    for (int k = 0; k < 200; ++k, ++steps) {
      u = step(u, dt);
      const double e2 = dirichlet_energy(u);
      worst_rise = std::max(worst_rise, (e2 - e) / e);
      e = e2;
    }
  }
  // Circle-valued flow: u = (cos th, sin th) with th_t = th_xx, exact solution
  // th = k x + a e^{-t} sin x relaxing to the closed geodesic th = k x.
  const double a = 0.3, T = 0.5;
  const int kw = 1;
  std::vector<double> err;
  for (int N : {32, 64, 128}) {
    const double L = 2.0 * std::numbers::pi, h = L / N;
    const GridSpec g(1, N, h, true);
    auto theta = [&](double x, double t) { return kw * x + a * std::exp(-t) * std::sin(x); };
    Snapshot u = sample_snapshot(g, 1, 0.0, [&](const SpatialVec& x) {
      TargetVec v(2);
      v << std::cos(theta(x[0], 0.0)), std::sin(theta(x[0], 0.0));
      return v;
    });
    const int n_steps = static_cast<int>(std::ceil(T / cfl_dt(h, 1, 0.25)));
    const double dt = T / n_steps;
    for (int k = 0; k < n_steps; ++k) u = step(u, dt);
    double e = 0.0;
    for (std::size_t c = 0; c < u.cell_count(); ++c) {
      const double th = theta(g.node(c)[0], T);
      TargetVec ex(2);
      ex << std::cos(th), std::sin(th);
      e = std::max(e, (u.value(c) - ex).norm());
    }
    err.push_back(e);
  }
  const double r1 = std::log2(err[0] / err[1]), r2 = std::log2(err[1] / err[2]);
  const double rate = 0.5 * (r1 + r2);
  const bool ok = worst_rise <= 1e-8 && std::abs(rate - 2.0) <= 0.3;
  return {ok, fmt("%zu steps, max relative energy rise %.2e; errors %.2e %.2e %.2e, rate %.3f", steps, worst_rise,
                  err[0], err[1], err[2], rate)};
}

// ---------------------------------------------------------------------------
// 9. Determinism of the command line pipeline

std::map<std::string, std::string> read_outputs(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

Outcome criterion9(const Paths& paths) {
  if (paths.qstrat.empty()) return {false, "no qstrat executable given (--qstrat)"};
  std::string detail;
  bool ok = true;
  for (const char* name : {"smooth_run", "static_cone_small"}) {
    const fs::path cfg = paths.configs / (std::string(name) + ".json");
    std::vector<std::map<std::string, std::string>> outs;
    for (const char* tag : {"a1", "b1", "c8"}) {
      const fs::path dir = paths.work / (std::string(name) + "_" + tag);
      fs::remove_all(dir);
      const std::string cmd = "\"" + paths.qstrat + "\" all --config \"" + cfg.string() + "\" --out \"" +
                              dir.string() + "\" --seed 42 --threads " + (tag[1] == '8' ? "8" : "1");
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        ok = false;
        detail += fmt(" %s: exit %d", name, rc);
      }
      outs.push_back(read_outputs(dir));
    }
    const bool same = !outs[0].empty() && outs[0] == outs[1] && outs[0] == outs[2];
    ok = ok && same;
    detail += fmt(" %s: %zu files %s;", name, outs[0].size(), same ? "identical" : "DIFFER");
  }
  return {ok, "threads 1, 1, 8:" + detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  Paths paths;
  std::string configs = ".", work = "acceptance_work";
  app.add_option("--only", only, "Run a single criterion (1-9)")->check(CLI::Range(0, 9));
  app.add_option("--qstrat", paths.qstrat, "Path to the qstrat executable");
  app.add_option("--configs", configs, "Directory with the shipped run configs");
  app.add_option("--work", work, "Scratch directory for pipeline outputs");
  CLI11_PARSE(app, argc, argv);
  paths.configs = configs;
  paths.work = work;
  fs::create_directories(paths.work);

  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, [&] { return criterion9(paths); }};
  bool all = true;
  for (int k = 1; k <= 9; ++k) {
    if (only != 0 && only != k) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(k - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1fs) %s\n", k, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
