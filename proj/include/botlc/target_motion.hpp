#pragma once

#include <cmath>

#include "botlc/vec2.hpp"

namespace botlc {

/// Target motion models. `kDriftProfile` is the slowly drifting velocity
/// used by the moving-target benchmark:
///   vx(t) = -0.0125 - 0.0125 e^(-0.05 t) |sin(2 pi 0.03 t)|  [m/s]
///   vy(t) = -0.075 e^(-0.1 t) |cos(2 pi 0.03 t)|             [m/s]
enum class MotionKind { kStationary, kDriftProfile, kConstantVelocity };

struct TargetMotion {
  MotionKind kind = MotionKind::kStationary;
  Vec2 constant_velocity;  ///< used by kConstantVelocity only

  Vec2 velocity(double t) const {
    switch (kind) {
      case MotionKind::kStationary:
        return {0.0, 0.0};
      case MotionKind::kDriftProfile: {
        const double w = 2.0 * M_PI * 0.03 * t;
        return {-0.0125 - 0.0125 * std::exp(-0.05 * t) * std::fabs(std::sin(w)),
                -0.075 * std::exp(-0.1 * t) * std::fabs(std::cos(w))};
      }
      case MotionKind::kConstantVelocity:
        return constant_velocity;
    }
    return {0.0, 0.0};
  }

  bool stationary() const { return kind == MotionKind::kStationary; }
};

}  // namespace botlc
