#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qstrat {

/// Equivariant ansatz psi(x) = (sin h(rho) x/rho, cos h(rho)) on R^ell into S^ell.
/// h solves h'' + ((ell-1)/rho - rho/2) h' - (ell-1) sin(2h) / (2 rho^2) = 0, h(0) = 0.

enum class ShootingOutcome {
  kReachedEnd,  // integrated to rho_max without leaving the bounded regime
  kBlowupUp,    // growing mode with positive sign
  kBlowupDown,  // growing mode with negative sign
};

struct ShootingOptions {
  double rho_max = 16.0;
  double d_rho = 5e-4;  // table spacing
  double rel_tol = 1e-12;
  double abs_tol = 1e-13;
  double blowup_slope = 2.0;  // |h'| threshold past rho = 4 that counts as the growing mode
};

struct ShootingResult {
  int ell = 3;
  double a = 0.0;
  ShootingOutcome outcome = ShootingOutcome::kReachedEnd;
  double rho_reached = 0.0;
  std::vector<double> rho;
  std::vector<double> h;
  std::vector<double> dh;
};

/// Integrates from h(0)=0, h'(0)=a and tabulates h on the uniform grid. Stops at the first
/// sign of the growing mode; the outcome is reported, never thrown.
ShootingResult shrink_profile_solve(int ell, double a, const ShootingOptions& opt = {});

/// Right-hand side h'' of the profile equation.
double profile_second_derivative(int ell, double rho, double h, double dh);

/// Bounded profile: tabulated core plus the tail h_inf + c / rho^2 past the matching radius.
class ShrinkProfile {
 public:
  ShrinkProfile() = default;
  /// Table nodes sit at i * d_rho; the tail is matched at the last node.
  ShrinkProfile(int ell, double a, double rho_max, double d_rho, std::vector<double> h,
                std::vector<double> dh);

  int ell() const { return ell_; }
  double a() const { return a_; }
  double rho_max() const { return rho_max_; }
  double rho_match() const { return rho_match_; }
  double h_inf() const { return h_inf_; }
  double tail_coefficient() const { return tail_c_; }
  const std::vector<double>& table_h() const { return h_; }
  double table_step() const { return d_rho_; }

  double h(double rho) const;
  double dh(double rho) const;
  double d2h(double rho) const;

  /// Max |ODE residual| at table nodes in (0, rho_hi], second derivative by central differences.
  double residual_max(double rho_hi) const;

  /// |S^{ell-1}| * int_0^rho_max (h'^2 + (ell-1) sin^2 h / rho^2) rho^{ell-1} e^{-rho^2/4} drho.
  double gaussian_energy() const;

 private:
  int ell_ = 3;
  double a_ = 0.0;
  double rho_max_ = 0.0;
  double d_rho_ = 0.0;
  double rho_match_ = 0.0;
  double h_inf_ = 0.0;
  double tail_c_ = 0.0;
  std::vector<double> h_;
  std::vector<double> dh_;
};

struct ProfileSearchOptions {
  double a_max = 12.0;
  int scan_points = 240;
  int max_profiles = 1;
  double spread_tol = 1e-6;  // bracket solutions must agree to this on the tabulated core
  ShootingOptions shooting{};
};

/// Scans a in (0, a_max], bisects every sign change of the growing mode and returns the
/// bounded profiles found (possibly none).
std::vector<ShrinkProfile> find_shrink_profiles(int ell, const ProfileSearchOptions& opt = {});

/// Builds the bounded profile from a bisected bracket [a_lo, a_hi].
ShrinkProfile build_profile(int ell, double a_lo, double a_hi, const ProfileSearchOptions& opt);

void write_profile_csv(const ShrinkProfile& p, std::ostream& out);
ShrinkProfile read_profile_csv(std::istream& in);

}  // namespace qstrat
