#pragma once

#include <cmath>

#include "botlc/geometry.hpp"
#include "botlc/vec2.hpp"

namespace botlc {

/// Kreisselmeier regressor pair. Both filters start at zero and integrate
///   P' = -P + phi_perp phi_perp^T
///   q' = -q + phi_perp phi_perp^T y
/// so that P x_true == q holds identically for a stationary target.
/// `det` and `sigma_min` are conditioning diagnostics refreshed by the
/// engine whenever P changes; they are not part of the ODE state.
struct RegressorState {
  Mat2Sym P;
  Vec2 q;
  double det = 0.0;
  double sigma_min = 0.0;

  void refresh_diagnostics() {
    det = P.det();
    sigma_min = botlc::sigma_min(P);
  }
};

struct EstimatorParams {
  double alpha1 = 0.5;   ///< exponent in (0, 1]
  double t_c1 = 0.2;     ///< predefined settling time bound, seconds
  /// Smallest singular value of P below which the reconstructed error falls
  /// back to zero. The regressor matrix is provably nonsingular for t > 0
  /// only in exact arithmetic, so a numeric gate is unavoidable; sigma_min
  /// is used rather than det because det conflates conditioning with scale.
  double singularity_threshold = 1e-8;
  /// Bound on the argument of exp() in the estimator field. exp(50) ~ 5e21
  /// is far beyond any meaningful rate; the cap only engages outside the
  /// intended operating envelope and is surfaced as a diagnostic flag.
  double exp_arg_cap = 50.0;
};

struct RegressorDerivative {
  Mat2Sym dP;
  Vec2 dq;
};

/// Right-hand side of the regressor filters at one instant.
inline RegressorDerivative regressor_derivative(const RegressorState& state,
                                                const BearingObservation& obs,
                                                Vec2 agent) {
  const Mat2Sym op = outer(obs.phi_perp);
  // q's drive is phi_perp (phi_perp . y): associating this way keeps the
  // P x - q identity exact under the integrator, because phi_perp . y equals
  // phi_perp . x_true for every state on the bearing line.
  const double py = dot(obs.phi_perp, agent);
  return {op - state.P, py * obs.phi_perp - state.q};
}

/// How reconstruct_xi resolved the regressor inversion.
enum class XiBranch { kSolved, kZeroFallback };

/// Reconstructed estimation error xi = P^{-1} (P x_hat - q), equal to the
/// true error x_hat - x whenever P is invertible. Near-singular P (which
/// includes t = 0, where P == 0) yields the zero vector; `branch_out`, when
/// given, reports which case was taken.
inline Vec2 reconstruct_xi(const RegressorState& state, Vec2 x_hat,
                           const EstimatorParams& params,
                           XiBranch* branch_out = nullptr) {
  if (state.sigma_min < params.singularity_threshold) {
    if (branch_out) *branch_out = XiBranch::kZeroFallback;
    return {0.0, 0.0};
  }
  if (branch_out) *branch_out = XiBranch::kSolved;
  return solve(state.P, state.P * x_hat - state.q);
}

/// Estimator vector field
///   x_hat' = -(1 / (alpha1 T_c1)) exp(||xi||^alpha1) psi^alpha1(xi),
/// exactly zero at xi = 0. `cap_hit_out` reports exp-argument saturation.
inline Vec2 estimator_derivative(Vec2 xi, const EstimatorParams& params,
                                 bool* cap_hit_out = nullptr) {
  if (cap_hit_out) *cap_hit_out = false;
  const double n = norm(xi);
  if (n == 0.0) return {0.0, 0.0};
  double arg = std::pow(n, params.alpha1);
  if (arg > params.exp_arg_cap) {
    arg = params.exp_arg_cap;
    if (cap_hit_out) *cap_hit_out = true;
  }
  const double gain = -std::exp(arg) / (params.alpha1 * params.t_c1);
  return gain * psi_pow(xi, params.alpha1);
}

}  // namespace botlc
