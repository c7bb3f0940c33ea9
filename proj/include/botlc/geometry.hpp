#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "botlc/vec2.hpp"

namespace botlc {

/// Thrown when agent and target (near-)coincide and the bearing is
/// undefined. The simulation engine converts this into an aborted run.
class DegenerateGeometry : public std::runtime_error {
 public:
  explicit DegenerateGeometry(const std::string& what) : std::runtime_error(what) {}
};

/// Agent-to-target separation below which the bearing is treated as
/// singular: far below any distance in the supported scenarios (meters),
/// far above double-precision noise.
inline constexpr double kCoincidenceThreshold = 1e-12;

/// One instant of bearing geometry. `phi` points from the agent to the
/// target; `phi_perp` is its clockwise quarter turn, computed algebraically
/// as (phi.y, -phi.x) so that dot(phi, phi_perp) == 0 exactly.
///
/// `distance` is simulator-internal ground truth; controllers never see it.
struct BearingObservation {
  Vec2 phi;
  Vec2 phi_perp;
  double theta = 0.0;    ///< atan2(phi.y, phi.x), in (-pi, pi]
  double distance = 0.0;
};

/// Bearing from `agent` to `target`. Throws DegenerateGeometry when the two
/// points are closer than kCoincidenceThreshold.
inline BearingObservation bearing(Vec2 target, Vec2 agent) {
  const Vec2 r = target - agent;
  const double d = norm(r);
  if (d < kCoincidenceThreshold) {
    throw DegenerateGeometry("agent and target coincide; bearing undefined");
  }
  BearingObservation obs;
  obs.phi = r / d;
  obs.phi_perp = {obs.phi.y, -obs.phi.x};
  obs.theta = std::atan2(obs.phi.y, obs.phi.x);
  obs.distance = d;
  return obs;
}

/// Signed power: sign(z) |z|^alpha, with sig_pow(0, alpha) == 0. Odd in z.
inline double sig_pow(double z, double alpha) {
  if (z == 0.0) return 0.0;
  const double m = std::pow(std::fabs(z), alpha);
  return z > 0.0 ? m : -m;
}

/// Componentwise signed power.
inline Vec2 sig_pow(Vec2 z, double alpha) {
  return {sig_pow(z.x, alpha), sig_pow(z.y, alpha)};
}

/// Normalizing power map: z / ||z||^beta for z != 0, zero vector at z = 0.
/// Satisfies ||psi_pow(z, beta)|| == ||z||^(1 - beta).
inline Vec2 psi_pow(Vec2 z, double beta) {
  const double n = norm(z);
  if (n == 0.0) return {0.0, 0.0};
  return std::pow(n, -beta) * z;
}

}  // namespace botlc
