#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "botlc/trajectory.hpp"

// Trajectory CSV I/O. The column set and order are a stable contract:
//   t,y_x,y_y,x_x,x_y,xhat_x,xhat_y,xi_x,xi_y,d,dhat,delta,varrho,
//   xtilde_norm,u_x,u_y,theta,flags
// Numbers are written with std::to_chars (shortest exact form, '.' decimal
// separator, locale-independent), so identical runs produce byte-identical
// files. Lines starting with '#' before the header carry run metadata.

namespace botlc {

class CsvError : public std::runtime_error {
 public:
  explicit CsvError(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr std::string_view kCsvHeader =
    "t,y_x,y_y,x_x,x_y,xhat_x,xhat_y,xi_x,xi_y,d,dhat,delta,varrho,"
    "xtilde_norm,u_x,u_y,theta,flags";

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

inline double parse_csv_double(std::string_view v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw CsvError("invalid number in CSV: '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace detail

/// Serializes a trajectory. Metadata needed to re-run analysis on the file
/// (gains, method, motion) rides in '#' comment lines.
inline std::string to_csv(const Trajectory& traj) {
  const Scenario& sc = traj.scenario;
  std::string out;
  out.reserve(traj.records.size() * 192 + 512);
  auto meta = [&out](std::string_view key, std::string_view val) {
    out += "# ";
    out += key;
    out += " = ";
    out += val;
    out += "\n";
  };
  auto meta_num = [&out](std::string_view key, double val) {
    out += "# ";
    out += key;
    out += " = ";
    detail::append_number(out, val);
    out += "\n";
  };
  meta("botlc_trajectory", "1");
  meta("name", sc.name);
  meta("method", method_name(sc.method));
  meta_num("d_star_m", sc.controller.d_star);
  meta_num("omega_star_rad_s", sc.controller.omega_star);
  meta_num("k_omega_m_s", sc.controller.k_omega);
  meta_num("alpha1", sc.estimator.alpha1);
  meta_num("t_c1_s", sc.estimator.t_c1);
  meta_num("alpha2", sc.controller.alpha2);
  meta_num("t_c2_s", sc.controller.t_c2);
  meta_num("singularity_threshold", sc.estimator.singularity_threshold);
  meta_num("dt_s", sc.dt);
  meta_num("record_stride", static_cast<double>(sc.record_stride));
  meta("target_motion", sc.motion.kind == MotionKind::kStationary ? "stationary"
                        : sc.motion.kind == MotionKind::kDriftProfile ? "drift_profile"
                                                                      : "constant_velocity");
  meta("status", run_status_name(traj.status));
  if (traj.status != RunStatus::kCompleted) {
    meta_num("abort_time_s", traj.abort_time);
    meta("abort_message", traj.abort_message);
  }

  out += kCsvHeader;
  out += "\n";
  for (const TrajectoryRecord& r : traj.records) {
    const double cols[] = {r.t,     r.agent.x, r.agent.y, r.target.x,      r.target.y,
                           r.x_hat.x, r.x_hat.y, r.xi.x,    r.xi.y,          r.d,
                           r.d_hat, r.delta,   r.varrho,  r.x_tilde_norm(), r.u.x,
                           r.u.y,   r.theta};
    for (double c : cols) {
      detail::append_number(out, c);
      out += ',';
    }
    out += std::to_string(r.flags);
    out += '\n';
  }
  return out;
}

/// Parses a trajectory CSV produced by to_csv(). Only the contract columns
/// are recovered; regressor diagnostics are NaN. Metadata lines populate a
/// minimal scenario sufficient for the analysis layer.
inline Trajectory from_csv(std::istream& in) {
  Trajectory traj;
  Scenario& sc = traj.scenario;
  std::string line;
  bool saw_header = false;
  double komega = std::numeric_limits<double>::quiet_NaN();
  while (std::getline(in, line)) {
    std::string_view sv = line;
    if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      sv.remove_prefix(1);
      auto eq = sv.find('=');
      if (eq == std::string_view::npos) continue;
      auto key = detail::trim(sv.substr(0, eq));
      auto val = detail::trim(sv.substr(eq + 1));
      if (key == "name") sc.name = std::string(val);
      else if (key == "method") sc.method = method_from_name(val);
      else if (key == "d_star_m") sc.controller.d_star = detail::parse_csv_double(val);
      else if (key == "omega_star_rad_s") sc.controller.omega_star = detail::parse_csv_double(val);
      else if (key == "k_omega_m_s") komega = detail::parse_csv_double(val);
      else if (key == "alpha1") sc.estimator.alpha1 = detail::parse_csv_double(val);
      else if (key == "t_c1_s") sc.estimator.t_c1 = detail::parse_csv_double(val);
      else if (key == "alpha2") sc.controller.alpha2 = detail::parse_csv_double(val);
      else if (key == "t_c2_s") sc.controller.t_c2 = detail::parse_csv_double(val);
      else if (key == "singularity_threshold")
        sc.estimator.singularity_threshold = detail::parse_csv_double(val);
      else if (key == "dt_s") sc.dt = detail::parse_csv_double(val);
      else if (key == "record_stride")
        sc.record_stride = static_cast<std::int64_t>(detail::parse_csv_double(val));
      else if (key == "target_motion") {
        if (val == "stationary") sc.motion.kind = MotionKind::kStationary;
        else if (val == "drift_profile") sc.motion.kind = MotionKind::kDriftProfile;
        else if (val == "constant_velocity") sc.motion.kind = MotionKind::kConstantVelocity;
      } else if (key == "status") {
        if (val == "degenerate-geometry") traj.status = RunStatus::kDegenerate;
        else if (val == "non-finite-state") traj.status = RunStatus::kNonFinite;
      } else if (key == "abort_time_s") traj.abort_time = detail::parse_csv_double(val);
      else if (key == "abort_message") traj.abort_message = std::string(val);
      continue;
    }
    if (!saw_header) {
      if (sv != kCsvHeader) throw CsvError("unexpected CSV header: " + std::string(sv));
      saw_header = true;
      continue;
    }
    TrajectoryRecord r;
    double cols[17];
    std::size_t field = 0;
    std::size_t pos = 0;
    while (field < 17) {
      auto comma = sv.find(',', pos);
      if (comma == std::string_view::npos) throw CsvError("short CSV row: " + std::string(sv));
      cols[field++] = detail::parse_csv_double(sv.substr(pos, comma - pos));
      pos = comma + 1;
    }
    r.t = cols[0];
    r.agent = {cols[1], cols[2]};
    r.target = {cols[3], cols[4]};
    r.x_hat = {cols[5], cols[6]};
    r.xi = {cols[7], cols[8]};
    r.d = cols[9];
    r.d_hat = cols[10];
    r.delta = cols[11];
    r.varrho = cols[12];
    r.x_tilde = r.x_hat - r.target;  // vector recovered from endpoints
    r.u = {cols[14], cols[15]};
    r.theta = cols[16];
    r.flags = static_cast<std::uint32_t>(detail::parse_int(sv.substr(pos), "flags"));
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.sigma_min = nan;
    r.det = nan;
    r.P = {nan, nan, nan};
    r.q = {nan, nan};
    traj.records.push_back(r);
  }
  if (!saw_header) throw CsvError("no CSV header found");
  if (!std::isnan(komega) && sc.controller.d_star > 0.0) {
    sc.controller.k_omega = komega;
  } else {
    sc.controller.k_omega = sc.controller.omega_star * sc.controller.d_star;
  }
  if (traj.records.empty()) throw CsvError("trajectory CSV holds no records");
  sc.t_end = traj.records.back().t;
  return traj;
}

inline Trajectory load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open trajectory CSV: " + path);
  return from_csv(in);
}

}  // namespace botlc
