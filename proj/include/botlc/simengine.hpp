#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "botlc/baselines.hpp"
#include "botlc/controller.hpp"
#include "botlc/estimator.hpp"
#include "botlc/geometry.hpp"
#include "botlc/scenario.hpp"
#include "botlc/trajectory.hpp"

namespace botlc {

/// Thrown when integration produces a non-finite state component. The run
/// loop converts this into an aborted trajectory.
class NonFiniteState : public std::runtime_error {
 public:
  explicit NonFiniteState(const std::string& what) : std::runtime_error(what) {}
};

/// Full ODE state at one instant. `cao_rho` is integrated only when the Cao
/// method is selected; `x_hat` is then derived as y + rho phi after each
/// step instead of being integrated.
struct WorldState {
  double t = 0.0;
  Vec2 agent;
  Vec2 target;
  Vec2 x_hat;
  RegressorState regressors;
  double cao_rho = 0.0;
};

/// Tangent of the integrated fields (everything in WorldState except time
/// and diagnostics).
struct WorldTangent {
  Vec2 agent;
  Vec2 target;
  Vec2 x_hat;
  Mat2Sym P;
  Vec2 q;
  double cao_rho = 0.0;
};

inline WorldTangent operator+(WorldTangent a, const WorldTangent& b) {
  return {a.agent + b.agent, a.target + b.target, a.x_hat + b.x_hat,
          a.P + b.P,         a.q + b.q,           a.cao_rho + b.cao_rho};
}
inline WorldTangent operator*(double s, const WorldTangent& v) {
  return {s * v.agent, s * v.target, s * v.x_hat, s * v.P, s * v.q, s * v.cao_rho};
}

/// How the estimator singularity branch is chosen during a derivative
/// evaluation. kAuto follows sigma_min against the scenario threshold;
/// the forced values are used by the event-split integrator so that both
/// halves of a split step see a consistent branch.
enum class BranchMode { kAuto, kForceZero, kForceSolve };

struct DerivativeFlags {
  bool zero_branch = false;
  bool estimator_cap = false;
  bool controller_cap = false;
};

namespace detail {

inline void check_finite(const WorldState& s) {
  if (!is_finite(s.agent) || !is_finite(s.target) || !is_finite(s.x_hat) ||
      !is_finite(s.regressors.P) || !is_finite(s.regressors.q) || !std::isfinite(s.cao_rho)) {
    throw NonFiniteState("state left the finite range");
  }
}

}  // namespace detail

/// Assembles the coupled vector field: agent kinematics y' = u, the
/// selected method's estimator, the regressor filters, and target motion.
/// The bearing is recomputed from the instantaneous state, so RK stages
/// never reuse stale observations.
inline WorldTangent derivative(const WorldState& s, const Scenario& sc,
                               BranchMode branch = BranchMode::kAuto,
                               DerivativeFlags* flags = nullptr) {
  const BearingObservation obs = bearing(s.target, s.agent);
  const Vec2 target_vel = sc.motion.velocity(s.t);

  DerivativeFlags local;
  WorldTangent out;
  out.target = target_vel;

  const auto reg = regressor_derivative(s.regressors, obs, s.agent);
  out.P = reg.dP;
  out.q = reg.dq;

  switch (sc.method) {
    case MethodKind::kProposed: {
      const double dh = d_hat(s.x_hat, s.agent);
      out.agent = control(obs, dh, sc.controller, &local.controller_cap);
      Vec2 xi;
      if (branch == BranchMode::kForceZero) {
        xi = {0.0, 0.0};
        local.zero_branch = true;
      } else if (branch == BranchMode::kForceSolve) {
        xi = solve(s.regressors.P, s.regressors.P * s.x_hat - s.regressors.q);
      } else {
        XiBranch b;
        xi = reconstruct_xi(s.regressors, s.x_hat, sc.estimator, &b);
        local.zero_branch = (b == XiBranch::kZeroFallback);
      }
      out.x_hat = estimator_derivative(xi, sc.estimator, &local.estimator_cap);
      break;
    }
    case MethodKind::kDeghat: {
      const double dh = d_hat(s.x_hat, s.agent);
      out.agent = deghat_control(obs, dh, sc.deghat.k_alpha, sc.deghat.k_beta,
                                 sc.controller.d_star);
      out.x_hat = deghat_estimator_derivative(s.x_hat, obs, s.agent, sc.deghat.k_est);
      break;
    }
    case MethodKind::kCao: {
      const CaoState cs{s.cao_rho};
      out.agent = cao_control(obs, cs.rho_hat, sc.cao.kappa_alpha, sc.cao.kappa_beta,
                              sc.controller.d_star);
      // Ground-truth bearing rate (I - phi phi^T)(x' - y') / d.
      const Vec2 rel = target_vel - out.agent;
      const Vec2 phidot = (rel - dot(obs.phi, rel) * obs.phi) / obs.distance;
      out.cao_rho = cao_state_derivative(cs, obs, out.agent, phidot, sc.cao.k_e);
      break;
    }
    case MethodKind::kChen: {
      const double dh = d_hat(s.x_hat, s.agent);
      out.agent = chen_control(obs, dh, sc.chen.k_d, sc.chen.k_phi, sc.chen.beta2,
                               sc.controller.d_star);
      out.x_hat = chen_estimator_derivative(s.x_hat, s.regressors, s.agent,
                                            sc.chen.kappa_est, sc.chen.beta1,
                                            sc.chen.residual);
      break;
    }
  }
  if (flags) *flags = local;
  return out;
}

namespace detail {

inline WorldState advance_state(const WorldState& s, const WorldTangent& v, double h) {
  WorldState out = s;
  out.t = s.t + h;
  out.agent = s.agent + h * v.agent;
  out.target = s.target + h * v.target;
  out.x_hat = s.x_hat + h * v.x_hat;
  out.regressors.P = s.regressors.P + h * v.P;
  out.regressors.q = s.regressors.q + h * v.q;
  out.cao_rho = s.cao_rho + h * v.cao_rho;
  out.regressors.refresh_diagnostics();
  return out;
}

/// One classical RK4 step of size h. `flags` aggregates stage diagnostics.
inline WorldState rk4_step(const WorldState& s, double h, const Scenario& sc,
                           BranchMode branch, DerivativeFlags* flags = nullptr) {
  DerivativeFlags f1, f2, f3, f4;
  const WorldTangent k1 = derivative(s, sc, branch, &f1);
  WorldState s2 = advance_state(s, k1, h / 2.0);
  const WorldTangent k2 = derivative(s2, sc, branch, &f2);
  WorldState s3 = advance_state(s, k2, h / 2.0);
  const WorldTangent k3 = derivative(s3, sc, branch, &f3);
  WorldState s4 = advance_state(s, k3, h);
  const WorldTangent k4 = derivative(s4, sc, branch, &f4);
  WorldState out = advance_state(s, (1.0 / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), h);
  if (flags) {
    flags->zero_branch = f1.zero_branch;
    flags->estimator_cap = f1.estimator_cap || f2.estimator_cap || f3.estimator_cap || f4.estimator_cap;
    flags->controller_cap =
        f1.controller_cap || f2.controller_cap || f3.controller_cap || f4.controller_cap;
  }
  return out;
}

inline bool solve_branch_on(const WorldState& s, const Scenario& sc) {
  return s.regressors.sigma_min >= sc.estimator.singularity_threshold;
}

}  // namespace detail

/// Advances the state by exactly dt with classical RK4, recomputing the
/// bearing at every stage.
///
/// For the proposed method the estimator field switches between the zero
/// fallback and the regressor solve when sigma_min(P) crosses the
/// singularity threshold. A step across that crossing is split in two at
/// the crossing instant (located by bisection; the regressor dynamics do
/// not depend on the branch, so the location is exact), and each half is
/// integrated with its branch pinned. Without the split, stages straddling
/// the crossing sample a discontinuous field and the integrator degrades to
/// first order globally; with it, fourth order is preserved. The procedure
/// is deterministic.
inline WorldState step_rk4(const WorldState& s, double dt, const Scenario& sc,
                           DerivativeFlags* flags = nullptr) {
  using detail::rk4_step;
  using detail::solve_branch_on;
  if (sc.method != MethodKind::kProposed) {
    WorldState out = rk4_step(s, dt, sc, BranchMode::kAuto, flags);
    detail::check_finite(out);
    return out;
  }

  const bool on0 = solve_branch_on(s, sc);
  WorldState full = rk4_step(s, dt, sc, BranchMode::kAuto, flags);
  if (solve_branch_on(full, sc) == on0) {
    detail::check_finite(full);
    return full;
  }

  // Locate the crossing: smallest h in (0, dt] whose endpoint is on the
  // far side of the threshold. 64 bisection iterations take h to the ulp.
  const BranchMode before = on0 ? BranchMode::kForceSolve : BranchMode::kForceZero;
  const BranchMode after = on0 ? BranchMode::kForceZero : BranchMode::kForceSolve;
  double lo = 0.0, hi = dt;
  for (int i = 0; i < 64; ++i) {
    const double mid = (lo + hi) / 2.0;
    if (mid <= lo || mid >= hi) break;
    const WorldState probe = rk4_step(s, mid, sc, before, nullptr);
    (solve_branch_on(probe, sc) != on0 ? hi : lo) = mid;
  }
  DerivativeFlags fa, fb;
  const WorldState at_crossing = rk4_step(s, hi, sc, before, &fa);
  WorldState out = rk4_step(at_crossing, dt - hi, sc, after, &fb);
  out.t = s.t + dt;  // avoid (t + hi) + (dt - hi) roundoff in the time grid
  if (flags) {
    flags->zero_branch = fa.zero_branch;
    flags->estimator_cap = fa.estimator_cap || fb.estimator_cap;
    flags->controller_cap = fa.controller_cap || fb.controller_cap;
  }
  detail::check_finite(out);
  return out;
}

namespace detail {

inline TrajectoryRecord make_record(const WorldState& s, const Scenario& sc) {
  TrajectoryRecord r;
  r.t = s.t;
  r.agent = s.agent;
  r.target = s.target;
  const BearingObservation obs = bearing(s.target, s.agent);
  r.x_hat = sc.method == MethodKind::kCao ? s.agent + s.cao_rho * obs.phi : s.x_hat;
  XiBranch b = XiBranch::kZeroFallback;
  r.xi = reconstruct_xi(s.regressors, r.x_hat, sc.estimator, &b);
  r.d = obs.distance;
  r.d_hat = sc.method == MethodKind::kCao ? s.cao_rho : d_hat(r.x_hat, s.agent);
  r.delta = r.d - sc.controller.d_star;
  r.varrho = r.d - r.d_hat;
  r.x_tilde = r.x_hat - s.target;
  r.theta = obs.theta;
  r.sigma_min = s.regressors.sigma_min;
  r.det = s.regressors.det;
  r.P = s.regressors.P;
  r.q = s.regressors.q;

  bool est_cap = false, ctl_cap = false;
  switch (sc.method) {
    case MethodKind::kProposed:
      r.u = control(obs, r.d_hat, sc.controller, &ctl_cap);
      (void)estimator_derivative(r.xi, sc.estimator, &est_cap);
      break;
    case MethodKind::kDeghat:
      r.u = deghat_control(obs, r.d_hat, sc.deghat.k_alpha, sc.deghat.k_beta,
                           sc.controller.d_star);
      break;
    case MethodKind::kCao:
      r.u = cao_control(obs, s.cao_rho, sc.cao.kappa_alpha, sc.cao.kappa_beta,
                        sc.controller.d_star);
      break;
    case MethodKind::kChen:
      r.u = chen_control(obs, r.d_hat, sc.chen.k_d, sc.chen.k_phi, sc.chen.beta2,
                         sc.controller.d_star);
      break;
  }
  if (b == XiBranch::kZeroFallback) r.flags |= RecordFlags::kZeroBranch;
  if (est_cap) r.flags |= RecordFlags::kEstimatorCap;
  if (ctl_cap) r.flags |= RecordFlags::kControllerCap;
  return r;
}

}  // namespace detail

inline WorldState initial_state(const Scenario& sc) {
  WorldState s;
  s.t = 0.0;
  s.agent = sc.agent0;
  s.target = sc.target0;
  s.x_hat = sc.x_hat0;
  s.cao_rho = sc.method == MethodKind::kCao ? sc.cao_rho0_value() : 0.0;
  s.regressors.refresh_diagnostics();
  return s;
}

/// Integrates the scenario from t = 0 to t_end on the fixed grid t_i = i dt,
/// recording every record_stride-th state. Runs are bit-reproducible: the
/// engine contains no randomness and no time- or environment-dependent
/// input. On degenerate geometry or a non-finite state the partial
/// trajectory is returned with the abort recorded.
inline Trajectory run(const Scenario& sc) {
  sc.validate();
  Trajectory traj;
  traj.scenario = sc;

  const std::int64_t n_steps = std::llround(sc.t_end / sc.dt);
  traj.records.reserve(static_cast<std::size_t>(n_steps / sc.record_stride) + 2);

  WorldState s = initial_state(sc);
  try {
    for (std::int64_t i = 0;; ++i) {
      s.t = static_cast<double>(i) * sc.dt;
      if (i % sc.record_stride == 0) {
        traj.records.push_back(detail::make_record(s, sc));
      }
      if (i == n_steps) break;
      DerivativeFlags f;
      s = step_rk4(s, sc.dt, sc, &f);
      if (f.estimator_cap || f.controller_cap) ++traj.cap_events;
    }
  } catch (const DegenerateGeometry& e) {
    traj.status = RunStatus::kDegenerate;
    traj.abort_time = s.t;
    traj.abort_message = e.what();
  } catch (const NonFiniteState& e) {
    traj.status = RunStatus::kNonFinite;
    traj.abort_time = s.t;
    traj.abort_message = e.what();
  }
  return traj;
}

}  // namespace botlc
