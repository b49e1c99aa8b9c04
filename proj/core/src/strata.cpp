#include "qstrat/strata.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qstrat/parallel.hpp"

namespace qstrat {

void ScaleParams::validate() const {
  if (!(gamma > 0.0 && gamma < 0.5)) throw PreconditionError("scale ratio must satisfy 0<gamma<1/2");
  if (q < 1) throw PreconditionError("q must be at least 1");
  if (beta < 1) throw PreconditionError("beta must be at least 1");
  if (!(delta > 0.0)) throw PreconditionError("delta must be positive");
  if (!(R > 0.0)) throw PreconditionError("R must be positive");
}

double ScaleParams::scale(int k) const { return R * std::pow(gamma, k); }

long ones_bound(const ScaleParams& p, double lambda2) {
  return static_cast<long>(std::floor((2.0 * p.q + 1.0) * lambda2 / p.delta)) + p.q;
}

int ScaleBitVector::ones() const {
  return static_cast<int>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ScaleBitVector scale_bits(const Trajectory& traj, const SpaceTimePoint& X, const ScaleParams& p,
                          const StruweQuadrature& q) {
  p.validate();
  const double finest = p.scale(p.beta + p.q);
  if (traj.spacing() > 0.0 && finest < 4.0 * traj.spacing())
    throw ResolutionError("finest annulus radius R*gamma^(beta+q) is below 4h");
  // Radii R gamma^k for k = 1-q .. beta+q, preceded by 2R when that lies outside.
  std::vector<double> radii;
  const double top = p.scale(1 - p.q);
  const bool prefix = 2.0 * p.R > top;
  if (prefix) radii.push_back(2.0 * p.R);
  for (int k = 1 - p.q; k <= p.beta + p.q; ++k) radii.push_back(p.scale(k));
  const auto layers = struwe_layers(traj, X, radii, q);
  const std::size_t offset = prefix ? 1 : 0;

  ScaleBitVector out;
  out.params = p;
  out.lambda2 = pairwise_sum(layers);
  out.bits.resize(static_cast<std::size_t>(p.beta));
  out.W.resize(static_cast<std::size_t>(p.beta));
  for (int alpha = 1; alpha <= p.beta; ++alpha) {
    // Layers k = alpha-q .. alpha+q-1 make up the annulus between R gamma^{alpha-q} and R gamma^{alpha+q}.
    double w = 0.0;
    for (int k = alpha - p.q; k <= alpha + p.q - 1; ++k)
      w += layers[offset + static_cast<std::size_t>(k - (1 - p.q))];
    const auto a = static_cast<std::size_t>(alpha - 1);
    out.W[a] = w;
    const bool energetic = w > p.delta;
    out.bits[a] = alpha <= p.q || energetic ? 1 : 0;
    if (alpha > p.q && energetic) ++out.K;
  }
  check_differentiation_bound(out, out.lambda2);
  return out;
}

void check_differentiation_bound(const ScaleBitVector& b, double lambda2) {
  const double bound = (2.0 * b.params.q + 1.0) * lambda2 / b.params.delta;
  if (static_cast<double>(b.K) > bound)
    throw InvariantViolation("K=" + std::to_string(b.K) + " exceeds (2q+1)Lambda_2/delta=" + std::to_string(bound));
}

Decomposition decompose(std::span<const ScaleBitVector> bits, double lambda2) {
  Decomposition out;
  if (bits.empty()) return out;
  const ScaleParams& p = bits.front().params;
  for (const auto& b : bits)
    if (!(b.params == p)) throw PreconditionError("bit vectors carry different scale parameters");
  out.Q = ones_bound(p, lambda2);
  out.Q_upper = ones_bound(p, 2.0 * lambda2);
  for (std::size_t i = 0; i < bits.size(); ++i) out.classes[bits[i].bits].push_back(i);
  for (const auto& [key, members] : out.classes) {
    const auto ones = std::count(key.begin(), key.end(), std::uint8_t{1});
    if (ones > out.Q)
      throw InvariantViolation("bit vector with " + std::to_string(ones) + " ones exceeds Q=" + std::to_string(out.Q));
  }
  const double limit = std::pow(static_cast<double>(p.beta), static_cast<double>(out.Q));
  if (static_cast<double>(out.classes.size()) > limit)
    throw InvariantViolation("number of classes exceeds beta^Q");
  return out;
}

LadderFit ladder_fit(const Trajectory& traj, const SpaceTimePoint& X, const ScaleParams& p, double r_min,
                     const Dictionary& dict, WindowGridPtr grid, const WindowOptions& wopt) {
  p.validate();
  if (!(r_min > 0.0) || r_min > p.R) throw PreconditionError("ladder needs 0 < r <= R");
  LadderFit fit;
  fit.X = X;
  for (int k = 0;; ++k) {
    const double s = p.scale(k);
    if (s < r_min * (1.0 - 1e-12)) {
      fit.next_scale = s;
      break;
    }
    fit.scales.push_back(s);
  }
  for (const double s : fit.scales) {
    try {
      const Window w = sample_window(traj, X, s, grid, wopt);
      fit.by_level.push_back(distances_by_level(w, dict));
    } catch (const WindowRejected& e) {
      fit.determined = false;
      fit.failure = e.what();
      break;
    } catch (const RangeViolation& e) {
      fit.determined = false;
      fit.failure = e.what();
      break;
    }
  }
  return fit;
}

StrataLabel label_from(const LadderFit& fit, int j, double eta, double r) {
  StrataLabel label;
  label.j = j;
  label.eta = eta;
  label.r = r;
  if (!fit.determined) {
    label.determined = false;
    return label;
  }
  if (r <= fit.next_scale * (1.0 + 1e-12)) throw PreconditionError("ladder does not reach down to r");
  label.member = true;
  const auto level = static_cast<std::size_t>(j + 1);
  for (std::size_t k = 0; k < fit.scales.size(); ++k) {
    if (fit.scales[k] < r * (1.0 - 1e-12)) break;
    const auto& row = fit.by_level[k];
    const double d = level < row.size() ? row[level] : std::numeric_limits<double>::infinity();
    if (!(d > eta)) {
      label.member = false;
      label.witness_scale = fit.scales[k];
      label.witness_distance = d;
      break;
    }
  }
  return label;
}

StrataLabel strata_membership(const Trajectory& traj, const SpaceTimePoint& X, int j, double eta, double r,
                              const ScaleParams& p, const Dictionary& dict, WindowGridPtr grid,
                              const WindowOptions& wopt) {
  if (j < 0 || j > dict.m() + 2) throw PreconditionError("stratum index must lie in [0, m+2]");
  return label_from(ladder_fit(traj, X, p, r, dict, std::move(grid), wopt), j, eta, r);
}

}  // namespace qstrat
