#pragma once

#include <cmath>
#include <stdexcept>

#include "botlc/geometry.hpp"
#include "botlc/vec2.hpp"

namespace botlc {

/// Gains of the circumnavigation law. `k_omega` is always the product
/// omega_star * d_star of the stored fields; construct through make() so the
/// relation cannot drift.
struct ControllerParams {
  double alpha2 = 0.5;       ///< exponent in (0, 1]
  double t_c2 = 0.4;         ///< predefined settling time bound, seconds
  double d_star = 2.0;       ///< desired orbit radius, meters
  double omega_star = 2.5;   ///< desired angular rate, rad/s
  double k_omega = 5.0;      ///< tangential speed, == omega_star * d_star
  double exp_arg_cap = 50.0;

  static ControllerParams make(double alpha2, double t_c2, double d_star,
                               double omega_star, double exp_arg_cap = 50.0) {
    if (d_star <= 0.0) throw std::invalid_argument("d_star must be positive");
    if (t_c2 <= 0.0) throw std::invalid_argument("t_c2 must be positive");
    ControllerParams p;
    p.alpha2 = alpha2;
    p.t_c2 = t_c2;
    p.d_star = d_star;
    p.omega_star = omega_star;
    p.k_omega = omega_star * d_star;
    p.exp_arg_cap = exp_arg_cap;
    return p;
  }
};

/// Distance estimate d_hat = ||x_hat - y||.
inline double d_hat(Vec2 x_hat, Vec2 agent) { return norm(x_hat - agent); }

/// Circumnavigation velocity command
///   u = (exp(|dt|^alpha2) / (alpha2 T_c2)) sig^(1-alpha2)(dt) phi
///       + k_omega phi_perp,       dt := d_hat - d_star.
/// The radial component carries the sign of dt; the tangential component is
/// k_omega for every input.
inline Vec2 control(const BearingObservation& obs, double d_hat_value,
                    const ControllerParams& params, bool* cap_hit_out = nullptr) {
  if (cap_hit_out) *cap_hit_out = false;
  const double dt = d_hat_value - params.d_star;
  double arg = std::pow(std::fabs(dt), params.alpha2);
  if (arg > params.exp_arg_cap) {
    arg = params.exp_arg_cap;
    if (cap_hit_out) *cap_hit_out = true;
  }
  const double radial = std::exp(arg) / (params.alpha2 * params.t_c2) *
                        sig_pow(dt, 1.0 - params.alpha2);
  return radial * obs.phi + params.k_omega * obs.phi_perp;
}

}  // namespace botlc
