#include "qstrat/shrink_profile.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "qstrat/types.hpp"

namespace qstrat {
namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 2>;

constexpr double kSeriesRadius = 1e-3;

double series_b(int ell, double a) {
  return (0.5 * a - (2.0 / 3.0) * (ell - 1) * a * a * a) / (2.0 * ell + 4.0);
}

double sphere_area(int dim_ambient) {
  const double half = 0.5 * dim_ambient;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

}  // namespace

double profile_second_derivative(int ell, double rho, double h, double dh) {
  return -((ell - 1) / rho - 0.5 * rho) * dh + (ell - 1) * std::sin(2.0 * h) / (2.0 * rho * rho);
}

ShootingResult shrink_profile_solve(int ell, double a, const ShootingOptions& opt) {
  if (ell < 3 || ell > 6) throw PreconditionError("equivariant profile dimension must lie in [3, 6]");
  if (!(opt.rho_max > 0.0) || !(opt.d_rho > 0.0)) throw PreconditionError("bad shooting grid");
  ShootingResult res;
  res.ell = ell;
  res.a = a;
  const auto steps = static_cast<std::size_t>(std::ceil(opt.rho_max / opt.d_rho));
  res.rho.reserve(steps + 1);
  res.h.reserve(steps + 1);
  res.dh.reserve(steps + 1);
  res.rho.push_back(0.0);
  res.h.push_back(0.0);
  res.dh.push_back(a);

  const double b = series_b(ell, a);
  const double rho1 = std::min(opt.d_rho, kSeriesRadius);
  State y{a * rho1 + b * rho1 * rho1 * rho1, a + 3.0 * b * rho1 * rho1};
  double rho = rho1;
  auto system = [ell](const State& s, State& ds, double r) {
    ds[0] = s[1];
    ds[1] = profile_second_derivative(ell, r, s[0], s[1]);
  };
  auto stepper = ode::make_controlled(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  for (std::size_t i = 1; i <= steps; ++i) {
    const double target = static_cast<double>(i) * opt.d_rho;
    if (target > rho) ode::integrate_adaptive(stepper, system, y, rho, target, 0.25 * opt.d_rho);
    rho = target;
    if (!std::isfinite(y[0]) || !std::isfinite(y[1])) {
      res.outcome = ShootingOutcome::kBlowupUp;
      break;
    }
    res.rho.push_back(rho);
    res.h.push_back(y[0]);
    res.dh.push_back(y[1]);
    if (rho > 4.0 && std::abs(y[1]) > opt.blowup_slope) {
      res.outcome = y[1] > 0.0 ? ShootingOutcome::kBlowupUp : ShootingOutcome::kBlowupDown;
      break;
    }
  }
  res.rho_reached = res.rho.back();
  return res;
}

ShrinkProfile::ShrinkProfile(int ell, double a, double rho_max, double d_rho, std::vector<double> h,
                             std::vector<double> dh)
    : ell_(ell), a_(a), rho_max_(rho_max), d_rho_(d_rho), h_(std::move(h)), dh_(std::move(dh)) {
  if (h_.size() < 2 || h_.size() != dh_.size()) throw PreconditionError("profile table too short");
  const std::size_t last = h_.size() - 1;
  const double rm = d_rho_ * static_cast<double>(last);
  rho_match_ = rm;
  // h = h_inf + c / rho^2 matched in value and slope.
  tail_c_ = -0.5 * dh_[last] * rm * rm * rm;
  h_inf_ = h_[last] - tail_c_ / (rm * rm);
}

double ShrinkProfile::h(double rho) const {
  rho = std::abs(rho);
  if (rho >= rho_match_) return h_inf_ + tail_c_ / (rho * rho);
  const double s = rho / d_rho_;
  const auto i = std::min(static_cast<std::size_t>(s), h_.size() - 2);
  const double u = s - static_cast<double>(i);
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * h_[i] + (u3 - 2 * u2 + u) * d_rho_ * dh_[i] +
         (-2 * u3 + 3 * u2) * h_[i + 1] + (u3 - u2) * d_rho_ * dh_[i + 1];
}

double ShrinkProfile::dh(double rho) const {
  rho = std::abs(rho);
  if (rho >= rho_match_) return -2.0 * tail_c_ / (rho * rho * rho);
  const double s = rho / d_rho_;
  const auto i = std::min(static_cast<std::size_t>(s), h_.size() - 2);
  const double u = s - static_cast<double>(i);
  const double u2 = u * u, u3 = u2 * u;
  const double r0 = d_rho_ * static_cast<double>(i), r1 = r0 + d_rho_;
  const double g0 = i == 0 ? 0.0 : profile_second_derivative(ell_, r0, h_[i], dh_[i]);
  const double g1 = profile_second_derivative(ell_, r1, h_[i + 1], dh_[i + 1]);
  return (2 * u3 - 3 * u2 + 1) * dh_[i] + (u3 - 2 * u2 + u) * d_rho_ * g0 +
         (-2 * u3 + 3 * u2) * dh_[i + 1] + (u3 - u2) * d_rho_ * g1;
}

double ShrinkProfile::d2h(double rho) const {
  rho = std::abs(rho);
  if (rho < kSeriesRadius) return 6.0 * series_b(ell_, a_) * rho;
  if (rho >= rho_match_) return 6.0 * tail_c_ / (rho * rho * rho * rho);
  return profile_second_derivative(ell_, rho, h(rho), dh(rho));
}

double ShrinkProfile::residual_max(double rho_hi) const {
  double worst = 0.0;
  // Fourth-order central differences; h' is even, which covers the first node.
  auto dh_at = [&](long i) { return i < 0 ? dh_[static_cast<std::size_t>(-i)] : dh_[static_cast<std::size_t>(i)]; };
  for (std::size_t i = 1; i + 2 < h_.size(); ++i) {
    const double rho = d_rho_ * static_cast<double>(i);
    if (rho > rho_hi) break;
    const auto k = static_cast<long>(i);
    const double d2 = (-dh_at(k + 2) + 8.0 * dh_at(k + 1) - 8.0 * dh_at(k - 1) + dh_at(k - 2)) / (12.0 * d_rho_);
    worst = std::max(worst, std::abs(d2 - profile_second_derivative(ell_, rho, h_[i], dh_[i])));
  }
  return worst;
}

double ShrinkProfile::gaussian_energy() const {
  const auto n = static_cast<std::size_t>(std::ceil(rho_max_ / d_rho_ / 2.0)) * 2;
  const double step = rho_max_ / static_cast<double>(n);
  auto f = [&](double rho) {
    if (rho == 0.0) return 0.0;
    const double hv = h(rho), dv = dh(rho);
    const double s = std::sin(hv) / rho;
    return (dv * dv + (ell_ - 1) * s * s) * std::pow(rho, ell_ - 1) * std::exp(-0.25 * rho * rho);
  };
  double sum = f(0.0) + f(rho_max_);
  for (std::size_t i = 1; i < n; ++i) sum += (i % 2 ? 4.0 : 2.0) * f(step * static_cast<double>(i));
  return sphere_area(ell_) * sum * step / 3.0;
}

ShrinkProfile build_profile(int ell, double a_lo, double a_hi, const ProfileSearchOptions& opt) {
  const double a_mid = 0.5 * (a_lo + a_hi);
  const auto lo = shrink_profile_solve(ell, a_lo, opt.shooting);
  const auto hi = shrink_profile_solve(ell, a_hi, opt.shooting);
  auto mid = shrink_profile_solve(ell, a_mid, opt.shooting);
  std::size_t keep = std::min({lo.h.size(), hi.h.size(), mid.h.size()});
  for (std::size_t i = 0; i < keep; ++i) {
    if (std::abs(lo.h[i] - hi.h[i]) > opt.spread_tol) {
      keep = i;
      break;
    }
  }
  if (keep < 2) throw PreconditionError("shooting bracket too wide to tabulate a profile");
  mid.h.resize(keep);
  mid.dh.resize(keep);
  return ShrinkProfile(ell, a_mid, opt.shooting.rho_max, opt.shooting.d_rho, std::move(mid.h),
                       std::move(mid.dh));
}

std::vector<ShrinkProfile> find_shrink_profiles(int ell, const ProfileSearchOptions& opt) {
  // Same table grid as the tabulation run so a bracket stays a bracket there.
  ShootingOptions probe = opt.shooting;
  probe.rho_max = std::max(30.0, probe.rho_max);
  auto sign_of = [&](double a) {
    const auto r = shrink_profile_solve(ell, a, probe);
    if (r.outcome == ShootingOutcome::kBlowupUp) return 1;
    if (r.outcome == ShootingOutcome::kBlowupDown) return -1;
    return r.dh.back() >= 0.0 ? 1 : -1;
  };
  std::vector<ShrinkProfile> found;
  double prev_a = opt.a_max / opt.scan_points;
  int prev_s = sign_of(prev_a);
  for (int k = 2; k <= opt.scan_points && static_cast<int>(found.size()) < opt.max_profiles; ++k) {
    const double a = opt.a_max * k / opt.scan_points;
    const int s = sign_of(a);
    if (s != prev_s) {
      double lo = prev_a, hi = a;
      for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (sign_of(mid) == prev_s ? lo : hi) = mid;
      }
      found.push_back(build_profile(ell, lo, hi, opt));
    }
    prev_a = a;
    prev_s = s;
  }
  return found;
}

void write_profile_csv(const ShrinkProfile& p, std::ostream& out) {
  out << std::setprecision(17);
  out << "# ell=" << p.ell() << " a=" << p.a() << " rho_max=" << p.rho_max()
      << " d_rho=" << p.table_step() << " rho_match=" << p.rho_match() << '\n';
  out << "rho,h,dh\n";
  for (std::size_t i = 0; i < p.table_h().size(); ++i) {
    const double rho = p.table_step() * static_cast<double>(i);
    out << rho << ',' << p.table_h()[i] << ',' << p.dh(rho) << '\n';
  }
}

ShrinkProfile read_profile_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw Error("profile CSV: missing header");
  int ell = 0;
  double a = 0, rho_max = 0, d_rho = 0;
  std::istringstream hs(line.substr(2));
  std::string tok;
  while (hs >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw Error("profile CSV: bad header field " + tok);
    const std::string key = tok.substr(0, eq);
    const double v = std::stod(tok.substr(eq + 1));
    if (key == "ell") ell = static_cast<int>(v);
    else if (key == "a") a = v;
    else if (key == "rho_max") rho_max = v;
    else if (key == "d_rho") d_rho = v;
  }
  std::getline(in, line);  // column names
  std::vector<double> h, dh;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string c0, c1, c2;
    std::getline(ls, c0, ',');
    std::getline(ls, c1, ',');
    std::getline(ls, c2, ',');
    h.push_back(std::stod(c1));
    dh.push_back(std::stod(c2));
  }
  return ShrinkProfile(ell, a, rho_max, d_rho, std::move(h), std::move(dh));
}

}  // namespace qstrat
