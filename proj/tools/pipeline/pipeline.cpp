#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "qstrat/analysis.hpp"
#include "qstrat/cone_split.hpp"
#include "qstrat/parallel.hpp"
#include "qstrat/regularity.hpp"
#include "qstrat/shrink_profile.hpp"
#include "qstrat/snapshot_io.hpp"
#include "qstrat/solver.hpp"
#include "qstrat/strata.hpp"

namespace qstrat::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("missing input file: " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::shared_ptr<const ShrinkProfile> shrink_profile_for(const RunConfig& cfg) {
  if (cfg.m < 3 || cfg.n < 3) throw ConfigError("config error at /source/kind: shrinking_profile needs m >= 3 and n >= 3");
  auto found = find_shrink_profiles(3);
  if (found.empty()) throw Error("no bounded shrinking profile found");
  return std::make_shared<const ShrinkProfile>(found.front());
}

Dictionary make_dictionary(const RunConfig& cfg) {
  std::vector<std::shared_ptr<const ShrinkProfile>> profiles;
  if (cfg.source.kind == SourceKind::kShrinkingProfile) profiles.push_back(shrink_profile_for(cfg));
  return Dictionary(cfg.m, cfg.n, cfg.dictionary, profiles);
}

bool same_radius(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(a, b); }

std::vector<double> cover_ladder(const RunConfig& cfg) {
  std::vector<double> out;
  if (cfg.strata.r.empty()) return out;
  const double r_min = *std::min_element(cfg.strata.r.begin(), cfg.strata.r.end());
  for (int b = 0;; ++b) {
    const double r = cfg.scales.scale(b);
    if (r < r_min * (1.0 - 1e-12)) break;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TrajectoryPtr load_source(const RunConfig& cfg, const fs::path& out) {
  AnalyticParams prm;
  prm.m = cfg.m;
  prm.n = cfg.n;
  prm.time = cfg.source.time;
  switch (cfg.source.kind) {
    case SourceKind::kSimulated: return read_trajectory(out / "trajectory");
    case SourceKind::kConstant:
      prm.p = TargetVec::Zero(cfg.n + 1);
      prm.p[cfg.n] = 1.0;
      return make_analytic(AnalyticKind::kConstant, prm);
    case SourceKind::kStaticCone: return make_analytic(AnalyticKind::kStaticCone, prm);
    case SourceKind::kQuasistaticCone:
      prm.p = TargetVec::Zero(cfg.n + 1);
      prm.p[cfg.n] = 1.0;
      return make_analytic(AnalyticKind::kQuasistaticCone, prm);
    case SourceKind::kShrinkingProfile:
      prm.profile = shrink_profile_for(cfg);
      return make_analytic(AnalyticKind::kShrinkingProfile, prm);
  }
  throw Error("unknown source kind");
}

std::vector<SpaceTimePoint> make_cloud(const RunConfig& cfg) {
  const auto& c = cfg.cloud;
  SpatialVec center = SpatialVec::Zero(cfg.m);
  for (std::size_t a = 0; a < c.center.size(); ++a) center[static_cast<Eigen::Index>(a)] = c.center[a];
  std::vector<SpaceTimePoint> pts;
  if (c.count == 0) return pts;
  if (c.kind == "random") {
    std::mt19937_64 rng(cfg.seed ^ 0x636c6f7564ULL);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < c.count; ++i) {
      SpatialVec x(cfg.m);
      for (int a = 0; a < cfg.m; ++a) x[a] = center[a] + c.extent * u(rng);
      const double t = c.t_center + c.t_extent * u(rng);
      pts.emplace_back(x, t);
    }
    return pts;
  }
  const int k = c.count;
  std::vector<int> idx(static_cast<std::size_t>(cfg.m), 0);
  std::vector<SpatialVec> xs;
  for (;;) {
    SpatialVec x(cfg.m);
    for (int a = 0; a < cfg.m; ++a)
      x[a] = center[a] - c.extent + (idx[static_cast<std::size_t>(a)] + 0.5) * 2.0 * c.extent / k;
    xs.push_back(x);
    int a = cfg.m - 1;
    while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >= k) idx[static_cast<std::size_t>(a--)] = 0;
    if (a < 0) break;
  }
  for (int l = 0; l < c.time_count; ++l) {
    const double t = c.time_count == 1 ? c.t_center
                                       : c.t_center - c.t_extent + (l + 0.5) * 2.0 * c.t_extent / c.time_count;
    for (const auto& x : xs) pts.emplace_back(x, t);
  }
  return pts;
}

std::vector<double> label_radii(const RunConfig& cfg) {
  std::vector<double> all = cfg.strata.r;
  for (double r : cfg.radii) all.push_back(r);
  for (double r : cover_ladder(cfg)) all.push_back(r);
  std::sort(all.begin(), all.end(), std::greater<>());
  std::vector<double> out;
  for (double r : all)
    if (out.empty() || !same_radius(out.back(), r)) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  json manifest;
  manifest["schema"] = kSchema;
  manifest["config"] = cfg.raw;
  manifest["seed"] = cfg.seed;
  manifest["source"] = cfg.source.kind == SourceKind::kSimulated ? "simulated" : "analytic";
  manifest["kind"] = to_string(cfg.source.kind);
  if (cfg.source.kind == SourceKind::kSimulated) {
    const GridSpec grid(cfg.m, cfg.source.n_cells, cfg.source.length / cfg.source.n_cells, true);
    Snapshot u0 = random_smooth_data(grid, cfg.n, cfg.seed, cfg.source.modes, cfg.source.amplitude);
    RunOptions ro;
    ro.dt = cfg.source.dt;
    ro.sigma = cfg.source.sigma;
    const auto traj = run(std::move(u0), cfg.source.t_end, cfg.source.record_every, ro);
    manifest["trajectory"] = write_trajectory(*traj, out / "trajectory");
    manifest["blown_up"] = traj->blown_up;
    write_json(out / "run_manifest.json", manifest);
    return traj->blown_up ? kBreakdown : kOk;
  }
  manifest["trajectory"] = nullptr;
  manifest["blown_up"] = false;
  write_json(out / "run_manifest.json", manifest);
  return kOk;
}

// ---------------------------------------------------------------------------

namespace {

struct PointAnalysis {
  bool bits_ok = true;
  ScaleBitVector bits;
  LadderFit fit;
  RegularityRecord reg;
  bool reg_ok = true;
};

}  // namespace

void cmd_analyze(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const TrajectoryPtr traj = load_source(cfg, out);
  const Dictionary dict = make_dictionary(cfg);
  const auto grid = std::make_shared<const WindowGrid>(cfg.m, cfg.window_cells, cfg.window_cells);
  const auto cloud = make_cloud(cfg);
  const auto radii = label_radii(cfg);
  const double r_min = radii.empty() ? cfg.scales.R : radii.back();

  std::vector<PointAnalysis> res(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    auto& pa = res[i];
    try {
      pa.bits = scale_bits(*traj, cloud[i], cfg.scales, cfg.quadrature);
    } catch (const RangeViolation&) {
      pa.bits_ok = false;
    } catch (const PreconditionError&) {
      pa.bits_ok = false;
    } catch (const ResolutionError&) {
      pa.bits_ok = false;
    }
    pa.fit = ladder_fit(*traj, cloud[i], cfg.scales, r_min, dict, grid);
    try {
      RegularityOptions ro;
      ro.probe_step = cfg.regularity.probe_step > 0.0 ? cfg.regularity.probe_step : cfg.regularity.R_max / 32.0;
      pa.reg = regularity_scale(*traj, cloud[i], cfg.regularity.R_max, ro);
    } catch (const RangeViolation&) {
      pa.reg_ok = false;
    }
  });

  std::ostringstream pts, en, lab, reg;
  pts << "index";
  for (int a = 0; a < cfg.m; ++a) pts << ",x" << a;
  pts << ",t\n";
  en << "index,determined,lambda2,K,ones";
  for (int a = 1; a <= cfg.scales.beta; ++a) en << ",W" << a;
  en << ",bits\n";
  lab << "index,j,r,member,determined,witness_scale,witness_distance\n";
  reg << "index,determined,r_u,binding\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& X = cloud[i];
    const auto& pa = res[i];
    pts << i;
    for (int a = 0; a < cfg.m; ++a) pts << ',' << num(X.x[a]);
    pts << ',' << num(X.t) << '\n';

    en << i << ',' << (pa.bits_ok ? 1 : 0);
    if (pa.bits_ok) {
      en << ',' << num(pa.bits.lambda2) << ',' << pa.bits.K << ',' << pa.bits.ones();
      for (double w : pa.bits.W) en << ',' << num(w);
      en << ',';
      for (auto b : pa.bits.bits) en << int(b);
    } else {
      en << ",0,0,0";
      for (int a = 0; a < cfg.scales.beta; ++a) en << ",0";
      en << ',';
    }
    en << '\n';

    for (int j : cfg.strata.j) {
      for (double r : radii) {
        const StrataLabel L = label_from(pa.fit, j, cfg.strata.eta, r);
        lab << i << ',' << j << ',' << num(r) << ',' << (L.member ? 1 : 0) << ',' << (L.determined ? 1 : 0) << ','
            << (L.witness_scale ? num(*L.witness_scale) : std::string()) << ',' << num(L.witness_distance) << '\n';
      }
    }
    reg << i << ',' << (pa.reg_ok ? 1 : 0) << ',' << num(pa.reg_ok ? pa.reg.r_u : 0.0) << ','
        << (pa.reg_ok ? to_string(pa.reg.binding) : std::string()) << '\n';
  }
  write_text(out / "points.csv", pts.str());
  write_text(out / "energies.csv", en.str());
  write_text(out / "labels.csv", lab.str());
  write_text(out / "regularity.csv", reg.str());
}

// ---------------------------------------------------------------------------

std::string slope_svg(const std::string& title, const std::vector<double>& radii, const std::vector<double>& volumes,
                      double slope, double intercept) {
  const double W = 480, H = 360, pad = 48;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] > 0.0 && volumes[i] > 0.0) {
      lx.push_back(std::log2(radii[i]));
      ly.push_back(std::log2(volumes[i]));
    }
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << pad << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  if (lx.empty()) {
    s << "<text x=\"" << pad << "\" y=\"" << H / 2 << "\" font-family=\"sans-serif\">no data</text>\n</svg>\n";
    return s.str();
  }
  auto [x0, x1] = std::minmax_element(lx.begin(), lx.end());
  auto [y0, y1] = std::minmax_element(ly.begin(), ly.end());
  const double ax = *x0 - 0.5, bx = *x1 + 0.5, ay = *y0 - 1.0, by = *y1 + 1.0;
  auto px = [&](double v) { return pad + (v - ax) / (bx - ax) * (W - 2 * pad); };
  auto py = [&](double v) { return H - pad - (v - ay) / (by - ay) * (H - 2 * pad); };
  s << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" font-family=\"sans-serif\" font-size=\"12\">log2 r</text>\n";
  s << "<text x=\"8\" y=\"" << H / 2 << "\" font-family=\"sans-serif\" font-size=\"12\">log2 V</text>\n";
  for (std::size_t i = 0; i < lx.size(); ++i)
    s << "<circle cx=\"" << num(px(lx[i])) << "\" cy=\"" << num(py(ly[i])) << "\" r=\"4\" fill=\"steelblue\"/>\n";
  const double ln2 = std::log(2.0);
  auto fit_y = [&](double l2x) { return (intercept + slope * l2x * ln2) / ln2; };
  s << "<line x1=\"" << num(px(ax)) << "\" y1=\"" << num(py(fit_y(ax))) << "\" x2=\"" << num(px(bx)) << "\" y2=\""
    << num(py(fit_y(bx))) << "\" stroke=\"firebrick\"/>\n";
  s << "<text x=\"" << W - 200 << "\" y=\"" << pad << "\" font-family=\"sans-serif\" font-size=\"12\">slope "
    << num(std::round(slope * 1000.0) / 1000.0) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

namespace {

struct Loaded {
  std::vector<SpaceTimePoint> points;
  std::vector<std::uint8_t> bits_ok;
  std::vector<ScaleBitVector> bits;
  // labels[j][r index][point]
  std::map<int, std::vector<std::vector<std::uint8_t>>> member;
  std::map<int, std::vector<std::vector<std::uint8_t>>> determined;
};

Loaded load_analysis(const RunConfig& cfg, const fs::path& out, const std::vector<double>& radii) {
  Loaded L;
  for (const auto& row : read_csv(out / "points.csv")) {
    if (static_cast<int>(row.size()) != cfg.m + 2) throw Error("malformed points.csv");
    SpatialVec x(cfg.m);
    for (int a = 0; a < cfg.m; ++a) x[a] = std::stod(row[static_cast<std::size_t>(a + 1)]);
    L.points.emplace_back(x, std::stod(row.back()));
  }
  const std::size_t N = L.points.size();
  for (const auto& row : read_csv(out / "energies.csv")) {
    if (static_cast<int>(row.size()) < 6 + cfg.scales.beta - 1) throw Error("malformed energies.csv");
    ScaleBitVector b;
    b.params = cfg.scales;
    L.bits_ok.push_back(row[1] == "1");
    b.lambda2 = std::stod(row[2]);
    b.K = std::stoi(row[3]);
    for (int a = 0; a < cfg.scales.beta; ++a) b.W.push_back(std::stod(row[static_cast<std::size_t>(5 + a)]));
    const std::string s = row.size() > static_cast<std::size_t>(5 + cfg.scales.beta)
                              ? row[static_cast<std::size_t>(5 + cfg.scales.beta)]
                              : std::string();
    for (char ch : s) b.bits.push_back(ch == '1' ? 1 : 0);
    L.bits.push_back(std::move(b));
  }
  if (L.bits.size() != N) throw Error("energies.csv does not match points.csv");
  for (int j : cfg.strata.j) {
    L.member[j].assign(radii.size(), std::vector<std::uint8_t>(N, 0));
    L.determined[j].assign(radii.size(), std::vector<std::uint8_t>(N, 0));
  }
  for (const auto& row : read_csv(out / "labels.csv")) {
    if (row.size() < 5) throw Error("malformed labels.csv");
    const auto i = static_cast<std::size_t>(std::stoul(row[0]));
    const int j = std::stoi(row[1]);
    const double r = std::stod(row[2]);
    auto it = std::find_if(radii.begin(), radii.end(), [&](double v) { return same_radius(v, r); });
    if (it == radii.end() || !L.member.contains(j) || i >= N) throw Error("labels.csv does not match the config");
    const auto k = static_cast<std::size_t>(it - radii.begin());
    L.member[j][k][i] = row[3] == "1";
    L.determined[j][k][i] = row[4] == "1";
  }
  return L;
}

std::size_t radius_index(const std::vector<double>& radii, double r) {
  return static_cast<std::size_t>(
      std::find_if(radii.begin(), radii.end(), [&](double v) { return same_radius(v, r); }) - radii.begin());
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace

int cmd_verify(const RunConfig& cfg, const fs::path& out) {
  fs::create_directories(out);
  const auto radii = label_radii(cfg);
  const Loaded L = load_analysis(cfg, out, radii);
  const std::size_t N = L.points.size();
  bool failed = false;
  json report;
  report["schema"] = kSchema;
  report["seed"] = cfg.seed;
  report["points"] = N;
  std::vector<std::pair<std::string, std::string>> summary;
  summary.emplace_back("points", std::to_string(N));
  if (N == 0) {
    report["passed"] = true;
    summary.emplace_back("passed", "1");
    write_json(out / "verify_report.json", report);
    std::ostringstream sum;
    sum << "metric,value\n";
    for (const auto& [k, v] : summary) sum << k << ',' << v << '\n';
    write_text(out / "summary.csv", sum.str());
    write_text(out / "exponents.csv", "j,predicted,slope,dimension,residual,status\n");
    return kOk;
  }

  // Quantitative differentiation.
  {
    std::vector<ScaleBitVector> ok;
    double lambda2 = 0.0;
    long worst = 0;
    bool bound = true;
    for (std::size_t i = 0; i < N; ++i) {
      if (!L.bits_ok[i]) continue;
      ok.push_back(L.bits[i]);
      lambda2 = std::max(lambda2, L.bits[i].lambda2);
      worst = std::max<long>(worst, L.bits[i].K);
      const double limit = (2 * cfg.scales.q + 1) * L.bits[i].lambda2 / cfg.scales.delta;
      if (static_cast<double>(L.bits[i].K) > limit) bound = false;
    }
    json d;
    d["determined"] = ok.size();
    d["lambda2_max"] = lambda2;
    d["K_max"] = worst;
    d["K_bound_holds"] = bound;
    failed = failed || !bound;
    if (!ok.empty()) {
      try {
        const Decomposition dec = decompose(ok, lambda2);
        d["classes"] = dec.classes.size();
        d["Q"] = dec.Q;
        d["Q_upper"] = dec.Q_upper;
        d["class_bound_holds"] = true;
      } catch (const InvariantViolation& e) {
        d["class_bound_holds"] = false;
        d["error"] = e.what();
        failed = true;
      }
    }
    report["differentiation"] = d;
    summary.emplace_back("K_bound_holds", bound ? "1" : "0");
  }

  // Covering per stratum.
  const auto ladder = cover_ladder(cfg);
  const bool can_cover = !ladder.empty() && static_cast<int>(ladder.size()) - 1 <= cfg.scales.beta;
  json covers = json::array();
  json fits = json::array();
  std::ostringstream exps;
  exps << "j,predicted,slope,dimension,residual,status\n";
  for (int j : cfg.strata.j) {
    if (can_cover) {
      const int beta_max = static_cast<int>(ladder.size()) - 1;
      std::vector<CoverPoint> cps;
      for (std::size_t i = 0; i < N; ++i) {
        if (!L.bits_ok[i]) continue;
        CoverPoint cp;
        cp.X = L.points[i];
        bool det = true;
        for (int b = 0; b <= beta_max; ++b) {
          const auto k = radius_index(radii, ladder[static_cast<std::size_t>(b)]);
          cp.member.push_back(L.member.at(j)[k][i]);
          det = det && L.determined.at(j)[k][i];
        }
        cp.bits = L.bits[i].bits;
        if (det) cps.push_back(std::move(cp));
      }
      CoverOptions co;
      co.gamma = cfg.scales.gamma;
      co.R = cfg.scales.R;
      co.beta_max = beta_max;
      const CoverTree tree = recursive_cover(cps, co);
      // Covering property: every member at depth b lies in a ball of its class at depth b.
      bool covered = true;
      for (const auto& cp : cps) {
        for (int b = 0; b <= beta_max && covered; ++b) {
          if (!cp.member[static_cast<std::size_t>(b)]) continue;
          bool found = false;
          for (const auto& node : tree.nodes) {
            if (node.depth != b) continue;
            if (!std::equal(node.prefix.begin(), node.prefix.end(), cp.bits.begin())) continue;
            if (ParabolicBall{node.center, node.radius, BallKind::kTwoSided}.contains(cp.X)) {
              found = true;
              break;
            }
          }
          covered = found;
        }
      }
      const auto cal = calibrate_cover_constant(cfg.m, cfg.scales.gamma);
      const auto bound = check_cover_bound(tree, cfg.m, j, std::max(1.0, cal.c));
      std::vector<double> good, bad;
      for (const auto& s : tree.steps) (s.good ? good : bad).push_back(static_cast<double>(s.children));
      json c;
      c["j"] = j;
      c["points"] = cps.size();
      c["per_depth"] = tree.per_depth;
      c["max_bad_steps"] = tree.max_bad_steps;
      c["good_steps"] = good.size();
      c["bad_steps"] = bad.size();
      c["good_median"] = median(good);
      c["bad_median"] = median(bad);
      c["good_max"] = good.empty() ? 0.0 : *std::max_element(good.begin(), good.end());
      c["bad_max"] = bad.empty() ? 0.0 : *std::max_element(bad.begin(), bad.end());
      c["calibrated_c"] = cal.c;
      c["calibration_count"] = cal.cover_count;
      c["depth_bound"] = bound.bound;
      c["depth_bound_holds"] = bound.holds;
      c["covering_property"] = covered;
      failed = failed || !covered;
      covers.push_back(c);
      summary.emplace_back("cover_j" + std::to_string(j) + "_covering_property", covered ? "1" : "0");
    }
    if (!cfg.radii.empty()) {
      json f;
      f["j"] = j;
      f["predicted"] = cfg.m + 2 - j;
      std::vector<double> vols;
      std::vector<double> used;
      const auto& c = cfg.cloud;
      for (double r : cfg.radii) {
        const auto k = radius_index(radii, r);
        std::vector<SpaceTimePoint> S;
        for (std::size_t i = 0; i < N; ++i)
          if (L.member.at(j)[k][i]) S.push_back(L.points[i]);
        // Region: the cloud box padded by r, refined so that h <= r/4 and dt <= r^2/4.
        const double len = 2.0 * (c.extent + r);
        const int ncell = static_cast<int>(std::ceil(len / (r / 4.0)));
        SpatialVec origin = SpatialVec::Constant(cfg.m, -0.5 * len + 0.5 * len / ncell);
        for (std::size_t a = 0; a < c.center.size(); ++a) origin[static_cast<Eigen::Index>(a)] += c.center[a];
        const GridSpec g(cfg.m, ncell, len / ncell, false, origin);
        const double tlen = 2.0 * (c.t_extent + r * r);
        const int nt = static_cast<int>(std::ceil(tlen / (r * r / 4.0)));
        const TimeAxis ta{c.t_center - 0.5 * tlen, tlen / nt, nt};
        used.push_back(r);
        vols.push_back(S.empty() ? 0.0 : tubular_volume(S, r, g, ta));
      }
      f["radii"] = used;
      f["volumes"] = vols;
      try {
        const SlopeFit sf = fit_power_law(used, vols, cfg.m);
        f["slope"] = sf.slope;
        f["intercept"] = sf.intercept;
        f["residual"] = sf.residual;
        f["dimension"] = sf.dimension;
        f["status"] = "fitted";
        exps << j << ',' << cfg.m + 2 - j << ',' << num(sf.slope) << ',' << num(sf.dimension) << ','
             << num(sf.residual) << ",fitted\n";
        write_text(out / ("minkowski_j" + std::to_string(j) + ".svg"),
                   slope_svg("S^" + std::to_string(j) + " tubular volume", used, vols, sf.slope, sf.intercept));
      } catch (const PreconditionError& e) {
        f["status"] = std::string("skipped: ") + e.what();
        exps << j << ',' << cfg.m + 2 - j << ",,,,skipped\n";
      }
      fits.push_back(f);
    }
  }
  report["covers"] = covers;
  report["minkowski"] = fits;

  // Cone splitting on the synthetic fields.
  if (cfg.verify.cone_split) {
    SplitVerifyOptions so;
    so.rho = cfg.verify.rho;
    auto profiles = find_shrink_profiles(3);
    if (!profiles.empty()) so.profile = std::make_shared<const ShrinkProfile>(profiles.front());
    json cs = json::array();
    bool all = true;
    for (int k = 1; k <= 7; ++k) {
      json row;
      row["case"] = k;
      try {
        const SplitReport r = cone_split_verify(static_cast<SplitCase>(k), so);
        row["name"] = to_string(r.which);
        row["field"] = r.field;
        row["predicted_symmetry"] = r.predicted.symmetry_after;
        row["detected_symmetry"] = r.detected_symmetry;
        row["hypothesis_at_0"] = r.hypothesis_at_0;
        row["hypothesis_at_Y"] = r.hypothesis_at_Y;
        row["plane_matches"] = r.plane_matches;
        row["passed"] = r.passed;
        all = all && r.passed;
      } catch (const PreconditionError& e) {
        row["passed"] = false;
        row["error"] = e.what();
        all = false;
      }
      cs.push_back(row);
    }
    const bool neg = cone_split_negative_control(cfg.verify.rho);
    report["cone_split"] = {{"cases", cs}, {"negative_control_refused", neg}, {"passed", all && neg}};
    failed = failed || !(all && neg);
    summary.emplace_back("cone_split_passed", all && neg ? "1" : "0");
  }

  // Selfsimilarity against regularity.
  if (!cfg.strata.r.empty()) {
    const TrajectoryPtr traj = load_source(cfg, out);
    const Dictionary dict = make_dictionary(cfg);
    const auto grid = std::make_shared<const WindowGrid>(cfg.m, cfg.window_cells, cfg.window_cells);
    const int j = cfg.verify.correlation_j >= 0 ? cfg.verify.correlation_j : cfg.m - 1;
    const double r = *std::min_element(cfg.strata.r.begin(), cfg.strata.r.end());
    const std::vector<double> scales{r};
    RegularityOptions ro;
    ro.probe_step = cfg.regularity.probe_step;
    const auto rep = eps_regularity_correlation(*traj, L.points, scales, j, cfg.verify.epsilons, dict, grid, ro);
    json rows = json::array();
    bool monotone = true;
    std::vector<std::pair<double, std::size_t>> order;
    for (const auto& row : rep.rows) {
      rows.push_back({{"epsilon", row.epsilon}, {"close", row.close}, {"violations", row.violations},
                      {"fraction", row.fraction}});
      order.emplace_back(row.epsilon, row.violations);
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 1; k < order.size(); ++k) monotone = monotone && order[k - 1].second <= order[k].second;
    report["eps_regularity"] = {{"j", j}, {"r", r}, {"rows", rows}, {"undetermined", rep.undetermined},
                                {"monotone", monotone}};
    failed = failed || !monotone;
  }

  report["passed"] = !failed;
  summary.emplace_back("passed", failed ? "0" : "1");
  write_json(out / "verify_report.json", report);
  std::ostringstream sum;
  sum << "metric,value\n";
  for (const auto& [k, v] : summary) sum << k << ',' << v << '\n';
  write_text(out / "summary.csv", sum.str());
  write_text(out / "exponents.csv", exps.str());
  return failed ? kInvariantFailed : kOk;
}

}  // namespace qstrat::pipeline
