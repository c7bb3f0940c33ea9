#pragma once

#include <cmath>

#include "botlc/estimator.hpp"
#include "botlc/geometry.hpp"
#include "botlc/vec2.hpp"

// Comparison algorithms, transcribed from their single-agent forms. Each
// exposes the same estimator-rate / control split as the proposed method so
// the engine runs all four through one code path.

namespace botlc {

// -------------------------------------------------------------------------
// Deghat et al.: projector-based estimator with a linear radial law.

struct DeghatParams {
  double k_est = 5.0;
  double k_alpha = 1.5;
  double k_beta = 5.0;
};

/// x_hat' = k_est (I - phi phi^T)(y - x_hat). Output is orthogonal to phi by
/// construction of the projector.
inline Vec2 deghat_estimator_derivative(Vec2 x_hat, const BearingObservation& obs,
                                        Vec2 agent, double k_est) {
  const Vec2 e = agent - x_hat;
  return k_est * (e - dot(obs.phi, e) * obs.phi);
}

/// u = k_alpha (d_hat - d_star) phi + k_beta phi_perp.
inline Vec2 deghat_control(const BearingObservation& obs, double d_hat_value,
                           double k_alpha, double k_beta, double d_star) {
  return k_alpha * (d_hat_value - d_star) * obs.phi + k_beta * obs.phi_perp;
}

// -------------------------------------------------------------------------
// Cao et al.: scalar range estimator riding on the measured bearing, with
// x_hat derived as y + rho_hat phi.

struct CaoParams {
  double k_e = 5.0;
  double kappa_alpha = 1.5;
  double kappa_beta = 5.0;
};

struct CaoState {
  double rho_hat = 0.0;  ///< range estimate, meters
};

/// Range-estimate rate. The published law gives rho_hat' in terms of
/// x_hat', while x_hat is itself defined through rho_hat; substituting
/// x_hat' = y' + rho_hat' phi + rho_hat phi' and using phi_perp . phi == 0
/// closes the loop:
///   rho_hat' = -phi . y' + k_e (phi_perp . y' + rho_hat (phi_perp . phi')).
/// The bearing rate phi' is supplied by the caller (the simulator provides
/// ground truth (I - phi phi^T)(x' - y') / d).
inline double cao_state_derivative(const CaoState& state, const BearingObservation& obs,
                                   Vec2 agent_velocity, Vec2 bearing_rate, double k_e) {
  return -dot(obs.phi, agent_velocity) +
         k_e * (dot(obs.phi_perp, agent_velocity) +
                state.rho_hat * dot(obs.phi_perp, bearing_rate));
}

/// u = kappa_alpha (rho_hat - d_star) phi + kappa_beta phi_perp.
inline Vec2 cao_control(const BearingObservation& obs, double rho_hat,
                        double kappa_alpha, double kappa_beta, double d_star) {
  return kappa_alpha * (rho_hat - d_star) * obs.phi + kappa_beta * obs.phi_perp;
}

// -------------------------------------------------------------------------
// Chen et al.: finite-time estimator driven by the Kreisselmeier regressors,
// with a signed-power radial law.

/// Published residual choices for the Chen estimator. The transcription
/// writes P x_hat - y; the regressor identity P x == q strongly suggests
/// P x_hat - q was meant. Both are available; q is the default.
enum class ChenResidual { kQ, kY };

struct ChenParams {
  double kappa_est = 5.0;
  double k_d = 1.5;
  double k_phi = 5.0;
  double beta1 = 0.5;
  double beta2 = 0.5;
  ChenResidual residual = ChenResidual::kQ;
};

/// x_hat' = -kappa_est P^T sig^beta1(P x_hat - r), r = q or y per config.
inline Vec2 chen_estimator_derivative(Vec2 x_hat, const RegressorState& regressors,
                                      Vec2 agent, double kappa_est, double beta1,
                                      ChenResidual residual = ChenResidual::kQ) {
  const Vec2 r = residual == ChenResidual::kQ ? regressors.q : agent;
  const Vec2 s = sig_pow(regressors.P * x_hat - r, beta1);
  return -kappa_est * (regressors.P * s);  // P symmetric, so P^T == P
}

/// u = k_d sig^beta2(d_hat - d_star) phi + k_phi phi_perp.
inline Vec2 chen_control(const BearingObservation& obs, double d_hat_value,
                         double k_d, double k_phi, double beta2, double d_star) {
  return k_d * sig_pow(d_hat_value - d_star, beta2) * obs.phi + k_phi * obs.phi_perp;
}

}  // namespace botlc
