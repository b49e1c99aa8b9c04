#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qstrat/trajectory.hpp"
#include "qstrat/types.hpp"

namespace qstrat {

struct EnergyReport {
  SpaceTimePoint X;
  double r1 = 0.0;
  double r2 = 0.0;  // 0 for single-scale functionals
  double value = 0.0;
  std::uint64_t quadrature_cells = 0;
  double inner_cutoff = 0.0;  // |t - t0| below which the singular weight was not sampled
};

struct BallQuadrature {
  int cells_per_radius = 64;
  int time_cells = 8;
};

/// Midpoint rule in self-similar variables xi = (x - x0)/sqrt(tau), sigma = log tau with
/// tau = t0 - t. Cells cut by a region boundary are split on a sub-lattice.
struct StruweQuadrature {
  double xi_extent = 7.0;
  double xi_step = 0.25;
  double sigma_step = 0.125;
};

struct GaussianQuadrature {
  double xi_extent = 8.0;
  double xi_step = 0.25;
};

/// r^{-m} times the integral of |grad u|^2 over P_r(X).
EnergyReport dirichlet_scale_invariant(const Trajectory& traj, const SpaceTimePoint& X, double r,
                                       const BallQuadrature& q = {});

/// r^{2-m} times the integral of |d_t u|^2 over P_r(X).
EnergyReport time_derivative_energy(const Trajectory& traj, const SpaceTimePoint& X, double r,
                                    const BallQuadrature& q = {});

/// Gaussian-weighted self-similarity defect over P^-_{r1}(X0) minus P^-_{r2}(X0).
EnergyReport struwe_annulus(const Trajectory& traj, const SpaceTimePoint& X0, double r1, double r2,
                            const StruweQuadrature& q = {});

/// Layer k covers P^-_{radii[k]} minus P^-_{radii[k+1]}; radii strictly decreasing.
/// One quadrature pass. Summing consecutive layers matches struwe_annulus up to the splitting of
/// cells cut by the interior radii.
std::vector<double> struwe_layers(const Trajectory& traj, const SpaceTimePoint& X0,
                                  std::span<const double> radii, const StruweQuadrature& q = {});

/// struwe_annulus(X0, 2R, rho_min).
EnergyReport struwe_total(const Trajectory& traj, const SpaceTimePoint& X0, double R, double rho_min,
                          const StruweQuadrature& q = {});

/// r^2 (4 pi r^2)^{-m/2} int |grad u(x, t0 - r^2)|^2 exp(-|x - x0|^2 / 4r^2) dx.
EnergyReport gaussian_scale_energy(const Trajectory& traj, const SpaceTimePoint& X0, double r,
                                   const GaussianQuadrature& q = {});

}  // namespace qstrat
