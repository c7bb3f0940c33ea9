#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "botlc/baselines.hpp"
#include "botlc/controller.hpp"
#include "botlc/estimator.hpp"
#include "botlc/geometry.hpp"
#include "botlc/target_motion.hpp"
#include "botlc/vec2.hpp"

namespace botlc {

/// Scenario file or manifest is malformed or violates a precondition.
/// The CLI maps this to exit code 2.
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& what) : std::runtime_error(what) {}
};

enum class MethodKind { kProposed, kDeghat, kCao, kChen };

inline const char* method_name(MethodKind m) {
  switch (m) {
    case MethodKind::kProposed: return "proposed";
    case MethodKind::kDeghat: return "deghat";
    case MethodKind::kCao: return "cao";
    case MethodKind::kChen: return "chen";
  }
  return "?";
}

inline MethodKind method_from_name(std::string_view s) {
  if (s == "proposed") return MethodKind::kProposed;
  if (s == "deghat") return MethodKind::kDeghat;
  if (s == "cao") return MethodKind::kCao;
  if (s == "chen") return MethodKind::kChen;
  throw ScenarioError("unknown method '" + std::string(s) + "'");
}

/// Full description of one simulation run: initial conditions, method and
/// gains, target motion, and integrator settings. Value type; a validated
/// Scenario plus the engine is everything a run depends on.
struct Scenario {
  std::string name = "scenario";
  MethodKind method = MethodKind::kProposed;

  Vec2 target0{2.0, 3.0};
  Vec2 agent0{8.0, 9.0};
  Vec2 x_hat0{5.0, 6.0};

  EstimatorParams estimator;
  ControllerParams controller;

  DeghatParams deghat;
  CaoParams cao;
  ChenParams chen;
  /// Initial range estimate for the Cao method. Unset means
  /// ||x_hat0 - agent0||, which reproduces x_hat0 exactly when x_hat0 lies
  /// on the initial bearing ray.
  std::optional<double> cao_rho0;

  TargetMotion motion;

  double dt = 1e-4;
  double t_end = 5.0;
  std::int64_t record_stride = 10;

  double initial_distance() const { return norm(target0 - agent0); }
  double cao_rho0_value() const { return cao_rho0 ? *cao_rho0 : norm(x_hat0 - agent0); }

  /// Checks every scenario precondition; throws ScenarioError naming the
  /// first violated one.
  void validate() const {
    if (!(dt > 0.0)) throw ScenarioError("dt_s must be positive");
    if (!(t_end >= 0.0)) throw ScenarioError("t_end_s must be non-negative");
    if (record_stride < 1) throw ScenarioError("record_stride must be >= 1");
    if (!(initial_distance() > kCoincidenceThreshold)) {
      throw ScenarioError(
          "agent and target must start at different locations (Assumption 1: d(0) > 0)");
    }
    if (!(controller.d_star > 0.0)) throw ScenarioError("d_star_m must be positive");
    if (!(controller.omega_star > 0.0)) throw ScenarioError("omega_star must be positive");
    if (!(estimator.alpha1 > 0.0 && estimator.alpha1 <= 1.0))
      throw ScenarioError("alpha1 must lie in (0, 1]");
    if (!(controller.alpha2 > 0.0 && controller.alpha2 <= 1.0))
      throw ScenarioError("alpha2 must lie in (0, 1]");
    if (!(estimator.t_c1 > 0.0)) throw ScenarioError("t_c1_s must be positive");
    if (!(controller.t_c2 > estimator.t_c1)) {
      throw ScenarioError("predefined times must satisfy t_c2_s > t_c1_s > 0");
    }
    if (!(estimator.singularity_threshold > 0.0))
      throw ScenarioError("singularity_threshold must be positive");
    if (!(estimator.exp_arg_cap > 0.0)) throw ScenarioError("exp_arg_cap must be positive");
    for (double g : {deghat.k_est, deghat.k_alpha, deghat.k_beta, cao.k_e, cao.kappa_alpha,
                     cao.kappa_beta, chen.kappa_est, chen.k_d, chen.k_phi}) {
      if (!(g > 0.0)) throw ScenarioError("baseline gains must be positive");
    }
    for (double b : {chen.beta1, chen.beta2}) {
      if (!(b > 0.0 && b < 1.0)) throw ScenarioError("beta1/beta2 must lie in (0, 1)");
    }
    if (cao_rho0 && !std::isfinite(*cao_rho0)) throw ScenarioError("cao_rho0_m must be finite");
    if (!is_finite(target0) || !is_finite(agent0) || !is_finite(x_hat0))
      throw ScenarioError("initial positions must be finite");
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_double(std::string_view v, const std::string& key) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ScenarioError("invalid numeric value '" + std::string(v) + "' for key " + key);
  }
  return out;
}

inline std::int64_t parse_int(std::string_view v, const std::string& key) {
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ScenarioError("invalid integer value '" + std::string(v) + "' for key " + key);
  }
  return out;
}

/// key = value lines; '#' starts a comment; keys may repeat (callers that
/// care about repetition read the vector).
struct KvFile {
  std::vector<std::pair<std::string, std::string>> entries;

  static KvFile parse(std::istream& in) {
    KvFile f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view sv = line;
      if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
      sv = trim(sv);
      if (sv.empty()) continue;
      auto eq = sv.find('=');
      if (eq == std::string_view::npos) {
        throw ScenarioError("line " + std::to_string(lineno) + ": expected 'key = value'");
      }
      auto key = trim(sv.substr(0, eq));
      auto val = trim(sv.substr(eq + 1));
      if (key.empty() || val.empty()) {
        throw ScenarioError("line " + std::to_string(lineno) + ": empty key or value");
      }
      f.entries.emplace_back(std::string(key), std::string(val));
    }
    return f;
  }

  static KvFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open file: " + path);
    return parse(in);
  }
};

}  // namespace detail

/// Parses the flat key = value scenario format (units are spelled out in
/// key names). Unknown keys are rejected so typos cannot silently fall back
/// to defaults. The returned scenario has been validated.
inline Scenario parse_scenario(std::istream& in, const std::string& name_hint = "scenario") {
  const auto kv = detail::KvFile::parse(in);
  Scenario s;
  s.name = name_hint;
  double omega_star = std::nan("");
  double k_omega = std::nan("");
  double d_star = s.controller.d_star;
  double alpha2 = s.controller.alpha2;
  double t_c2 = s.controller.t_c2;
  double cap = s.estimator.exp_arg_cap;

  std::map<std::string, int> seen;
  for (const auto& [key, val] : kv.entries) {
    if (++seen[key] > 1) throw ScenarioError("duplicate key: " + key);
    using detail::parse_double;
    using detail::parse_int;
    if (key == "name") s.name = val;
    else if (key == "method") s.method = method_from_name(val);
    else if (key == "target_x_m") s.target0.x = parse_double(val, key);
    else if (key == "target_y_m") s.target0.y = parse_double(val, key);
    else if (key == "agent_x_m") s.agent0.x = parse_double(val, key);
    else if (key == "agent_y_m") s.agent0.y = parse_double(val, key);
    else if (key == "xhat_x_m") s.x_hat0.x = parse_double(val, key);
    else if (key == "xhat_y_m") s.x_hat0.y = parse_double(val, key);
    else if (key == "d_star_m") d_star = parse_double(val, key);
    else if (key == "omega_star_rad_s") omega_star = parse_double(val, key);
    else if (key == "k_omega_m_s") k_omega = parse_double(val, key);
    else if (key == "alpha1") s.estimator.alpha1 = parse_double(val, key);
    else if (key == "t_c1_s") s.estimator.t_c1 = parse_double(val, key);
    else if (key == "alpha2") alpha2 = parse_double(val, key);
    else if (key == "t_c2_s") t_c2 = parse_double(val, key);
    else if (key == "singularity_threshold") s.estimator.singularity_threshold = parse_double(val, key);
    else if (key == "exp_arg_cap") cap = parse_double(val, key);
    else if (key == "target_motion") {
      if (val == "stationary") s.motion.kind = MotionKind::kStationary;
      else if (val == "drift_profile") s.motion.kind = MotionKind::kDriftProfile;
      else if (val == "constant_velocity") s.motion.kind = MotionKind::kConstantVelocity;
      else throw ScenarioError("unknown target_motion '" + val + "'");
    }
    else if (key == "target_vx_m_s") s.motion.constant_velocity.x = parse_double(val, key);
    else if (key == "target_vy_m_s") s.motion.constant_velocity.y = parse_double(val, key);
    else if (key == "dt_s") s.dt = parse_double(val, key);
    else if (key == "t_end_s") s.t_end = parse_double(val, key);
    else if (key == "record_stride") s.record_stride = parse_int(val, key);
    else if (key == "k_est") s.deghat.k_est = parse_double(val, key);
    else if (key == "k_alpha") s.deghat.k_alpha = parse_double(val, key);
    else if (key == "k_beta") s.deghat.k_beta = parse_double(val, key);
    else if (key == "k_e") s.cao.k_e = parse_double(val, key);
    else if (key == "kappa_alpha") s.cao.kappa_alpha = parse_double(val, key);
    else if (key == "kappa_beta") s.cao.kappa_beta = parse_double(val, key);
    else if (key == "cao_rho0_m") s.cao_rho0 = parse_double(val, key);
    else if (key == "kappa_est") s.chen.kappa_est = parse_double(val, key);
    else if (key == "k_d") s.chen.k_d = parse_double(val, key);
    else if (key == "k_phi") s.chen.k_phi = parse_double(val, key);
    else if (key == "beta1") s.chen.beta1 = parse_double(val, key);
    else if (key == "beta2") s.chen.beta2 = parse_double(val, key);
    else if (key == "chen_residual") {
      if (val == "q") s.chen.residual = ChenResidual::kQ;
      else if (val == "y") s.chen.residual = ChenResidual::kY;
      else throw ScenarioError("chen_residual must be 'q' or 'y'");
    }
    else throw ScenarioError("unknown key: " + key);
  }

  const bool has_omega = !std::isnan(omega_star);
  const bool has_komega = !std::isnan(k_omega);
  if (has_omega && has_komega) {
    throw ScenarioError("give either omega_star_rad_s or k_omega_m_s, not both");
  }
  if (!(d_star > 0.0)) throw ScenarioError("d_star_m must be positive");
  if (!(t_c2 > 0.0)) throw ScenarioError("t_c2_s must be positive");
  if (has_komega) {
    omega_star = k_omega / d_star;
  } else if (!has_omega) {
    omega_star = s.controller.omega_star;
  }
  s.controller = ControllerParams::make(alpha2, t_c2, d_star, omega_star, cap);
  s.estimator.exp_arg_cap = cap;
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file: " + path);
  // File stem as default name; a 'name' key overrides it.
  auto slash = path.find_last_of("/\\");
  auto stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_scenario(in, stem);
}

/// Manifest for `compare`: one base scenario plus >= 2 method selections.
struct CompareManifest {
  Scenario base;
  std::vector<MethodKind> methods;
};

/// Manifest for `sweep`: one base scenario (method forced to proposed) plus
/// a list of initial-estimate offsets applied to the true target position,
/// i.e. x_hat(0) = target0 + offset.
struct SweepManifest {
  Scenario base;
  std::vector<Vec2> offsets;
};

namespace detail {

inline std::string dirname_of(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  return slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
}

inline Scenario load_base(const detail::KvFile& kv, const std::string& manifest_path) {
  std::string base_path;
  for (const auto& [k, v] : kv.entries) {
    if (k == "base") {
      if (!base_path.empty()) throw ScenarioError("duplicate key: base");
      base_path = v;
    }
  }
  if (base_path.empty()) throw ScenarioError("manifest is missing 'base = <scenario file>'");
  if (base_path.front() != '/') base_path = dirname_of(manifest_path) + base_path;
  return load_scenario(base_path);
}

inline Vec2 parse_vec2(std::string_view v, const std::string& key) {
  auto sp = v.find_first_of(" \t");
  if (sp == std::string_view::npos) {
    throw ScenarioError("key " + key + " expects two numbers");
  }
  return {parse_double(trim(v.substr(0, sp)), key), parse_double(trim(v.substr(sp)), key)};
}

/// Applies manifest-level integrator/gate overrides shared by compare and
/// sweep manifests. Returns true when the key was consumed.
inline bool apply_override(Scenario& s, const std::string& key, const std::string& val) {
  if (key == "dt_s") s.dt = parse_double(val, key);
  else if (key == "t_end_s") s.t_end = parse_double(val, key);
  else if (key == "record_stride") s.record_stride = parse_int(val, key);
  else if (key == "singularity_threshold")
    s.estimator.singularity_threshold = parse_double(val, key);
  else return false;
  return true;
}

}  // namespace detail

inline CompareManifest load_compare_manifest(const std::string& path) {
  const auto kv = detail::KvFile::parse_file(path);
  CompareManifest m{detail::load_base(kv, path), {}};
  for (const auto& [k, v] : kv.entries) {
    if (k == "base") continue;
    if (k == "method") m.methods.push_back(method_from_name(v));
    else if (!detail::apply_override(m.base, k, v)) throw ScenarioError("unknown key: " + k);
  }
  if (m.methods.size() < 2) {
    throw ScenarioError("compare manifest needs at least two 'method' entries");
  }
  m.base.validate();
  return m;
}

inline SweepManifest load_sweep_manifest(const std::string& path) {
  const auto kv = detail::KvFile::parse_file(path);
  SweepManifest m{detail::load_base(kv, path), {}};
  m.base.method = MethodKind::kProposed;
  for (const auto& [k, v] : kv.entries) {
    if (k == "base") continue;
    if (k == "xtilde0_m") m.offsets.push_back(detail::parse_vec2(v, k));
    else if (!detail::apply_override(m.base, k, v)) throw ScenarioError("unknown key: " + k);
  }
  if (m.offsets.empty()) {
    throw ScenarioError("sweep manifest needs at least one 'xtilde0_m = <dx> <dy>' entry");
  }
  m.base.validate();
  return m;
}

}  // namespace botlc
