#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <mutex>
#include <thread>
#include <vector>

#include "botlc/analysis.hpp"
#include "botlc/csv.hpp"
#include "botlc/scenario.hpp"
#include "botlc/simengine.hpp"
#include "botlc/svg.hpp"
#include "botlc/trajectory.hpp"

// Command layer shared by the botlc binary and the test suite. Exit codes
// are a stable contract:
//   0  run completed, all enabled invariant checks passed
//   1  run completed but an invariant check failed
//   2  scenario/manifest validation or I/O error
//   3  simulation aborted (degenerate geometry or non-finite state)

namespace botlc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvariantFail = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeAbort = 3;

struct EmitOptions {
  bool csv = true;
  bool svg = false;
  bool report = true;
};

struct RunManifest {
  std::vector<std::string> scenario_paths;
  std::string out_dir = ".";
  EmitOptions emit;
  int jobs = 1;  ///< fan-out across scenarios; never changes results
};

namespace detail_cli {

namespace fs = std::filesystem;

/// write-then-rename so partially written outputs are never observed
inline void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

inline std::vector<double> times_of(const Trajectory& t) {
  std::vector<double> out;
  out.reserve(t.records.size());
  for (const auto& r : t.records) out.push_back(r.t);
  return out;
}

inline void emit_svgs(const Trajectory& traj, const fs::path& dir) {
  const auto& recs = traj.records;
  std::vector<double> ts = times_of(traj);

  SvgSeries path{.label = "agent", .color = "#1f77b4"};
  SvgSeries est{.label = "estimate", .color = "#2ca02c"};
  for (const auto& r : recs) {
    path.x.push_back(r.agent.x);
    path.y.push_back(r.agent.y);
    est.x.push_back(r.x_hat.x);
    est.y.push_back(r.x_hat.y);
  }
  // desired orbit around the final target position, for reference
  SvgSeries orbit{.label = "d* orbit", .color = "#999999"};
  if (!recs.empty()) {
    const Vec2 c = recs.back().target;
    for (int i = 0; i <= 128; ++i) {
      const double a = 2.0 * M_PI * i / 128.0;
      orbit.x.push_back(c.x + traj.scenario.controller.d_star * std::cos(a));
      orbit.y.push_back(c.y + traj.scenario.controller.d_star * std::sin(a));
    }
  }
  SvgSeries tgt{.label = "target", .color = "#d62728"};
  for (const auto& r : recs) {
    tgt.x.push_back(r.target.x);
    tgt.y.push_back(r.target.y);
  }
  write_atomic(dir / "path.svg",
               svg_line_plot("agent path", "x [m]", "y [m]", {orbit, tgt, path, est}, true));

  SvgSeries xt{.label = "", .color = "#1f77b4"};
  xt.x = ts;
  for (const auto& r : recs) xt.y.push_back(r.x_tilde_norm());
  write_atomic(dir / "xtilde_norm.svg",
               svg_line_plot("estimation error norm", "t [s]", "||xtilde|| [m]", {xt}));

  SvgSeries de{.label = "", .color = "#1f77b4"};
  de.x = ts;
  for (const auto& r : recs) de.y.push_back(r.delta);
  write_atomic(dir / "delta.svg",
               svg_line_plot("radial tracking error", "t [s]", "delta [m]", {de}));

  if (recs.size() >= 3) {
    std::vector<double> theta;
    theta.reserve(recs.size());
    for (const auto& r : recs) theta.push_back(r.theta);
    theta = unwrap_angles(theta);
    SvgSeries td{.label = "", .color = "#1f77b4"};
    td.x = ts;
    td.y = finite_difference(ts, theta);
    write_atomic(dir / "theta_dot.svg",
                 svg_line_plot("bearing angular rate", "t [s]", "theta_dot [rad/s]", {td}));
  }
}

struct RunOutcome {
  Trajectory traj;
  InvariantReport report;
  int exit_code = kExitOk;
};

inline RunOutcome run_and_report(const Scenario& sc) {
  RunOutcome out;
  out.traj = run(sc);
  out.report = invariant_report(out.traj, MonitorConfig::defaults_for(out.traj));
  if (!out.traj.completed()) out.exit_code = kExitRuntimeAbort;
  else if (!out.report.all_pass()) out.exit_code = kExitInvariantFail;
  return out;
}

inline std::string report_header(const Trajectory& traj) {
  std::ostringstream os;
  os << "scenario: " << traj.scenario.name << "\n"
     << "method: " << method_name(traj.scenario.method) << "\n"
     << "status: " << run_status_name(traj.status) << "\n";
  if (!traj.completed()) {
    os << "abort_time_s: " << traj.abort_time << "\n"
       << "abort: " << traj.abort_message << "\n";
  }
  os << "records: " << traj.records.size() << "\n"
     << "cap_events: " << traj.cap_events << "\n";
  return os.str();
}

/// Adds settling times and the excitation certificate to the human report.
inline std::string metrics_text(const Trajectory& traj) {
  std::ostringstream os;
  const auto& recs = traj.records;
  if (recs.size() < 2) return os.str();
  std::vector<double> ts = times_of(traj), xt, dd;
  for (const auto& r : recs) {
    xt.push_back(r.x_tilde_norm());
    dd.push_back(r.delta);
  }
  const MonitorConfig cfg = MonitorConfig::defaults_for(traj.scenario);
  auto s1 = settling_time(ts, xt, cfg.settling_threshold);
  auto s2 = settling_time(ts, dd, cfg.settling_threshold);
  os << "settling_xtilde_s: " << (s1 ? std::to_string(*s1) : "none") << "\n";
  os << "settling_delta_s: " << (s2 ? std::to_string(*s2) : "none") << "\n";
  const double period = 2.0 * M_PI / traj.scenario.controller.omega_star;
  const double t_end = recs.back().t;
  if (traj.completed() && t_end > period) {
    PEWindowConfig pw{.t0 = t_end - period, .window = period, .mu_threshold = 0.1};
    const PECertificate pe = pe_certificate(traj, pw);
    os << "pe_lambda_min: " << pe.lambda_min << " (window [" << pw.t0 << ", " << t_end
       << "], mu=" << pw.mu_threshold << ", " << (pe.exciting ? "exciting" : "not exciting")
       << ")\n";
  }
  return os.str();
}

inline void emit_outputs(const RunOutcome& oc, const fs::path& dir, const EmitOptions& emit) {
  if (emit.csv) write_atomic(dir / "trajectory.csv", to_csv(oc.traj));
  if (emit.svg) emit_svgs(oc.traj, dir / "plots");
  if (emit.report) {
    write_atomic(dir / "report.txt",
                 report_header(oc.traj) + metrics_text(oc.traj) + oc.report.render_text());
    write_atomic(dir / "report.kv", oc.report.render_kv());
  }
}

}  // namespace detail_cli

/// `run <scenario>`: simulate one scenario and emit its outputs.
inline int cmd_run(const RunManifest& manifest, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  try {
    if (manifest.scenario_paths.size() != 1) {
      log << "run expects exactly one scenario file\n";
      return kExitConfigError;
    }
    const Scenario sc = load_scenario(manifest.scenario_paths.front());
    const auto oc = detail_cli::run_and_report(sc);
    detail_cli::emit_outputs(oc, manifest.out_dir, manifest.emit);
    log << detail_cli::report_header(oc.traj) << detail_cli::metrics_text(oc.traj)
        << oc.report.render_text();
    return oc.exit_code;
  } catch (const ScenarioError& e) {
    log << "scenario error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

/// `compare <manifest>`: run several methods on shared initial conditions
/// and emit per-method outputs plus a summary table.
inline int cmd_compare(const std::string& manifest_path, const RunManifest& manifest,
                       std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  try {
    const CompareManifest cm = load_compare_manifest(manifest_path);
    std::vector<Scenario> variants;
    for (MethodKind m : cm.methods) {
      Scenario sc = cm.base;
      sc.method = m;
      sc.name = cm.base.name + "_" + method_name(m);
      variants.push_back(sc);
    }

    std::vector<detail_cli::RunOutcome> outcomes(variants.size());
    const int jobs = std::max(1, manifest.jobs);
    if (jobs == 1) {
      for (std::size_t i = 0; i < variants.size(); ++i) {
        outcomes[i] = detail_cli::run_and_report(variants[i]);
      }
    } else {
      // fan-out / fan-in; each run is isolated, output order stays fixed
      std::vector<std::thread> pool;
      std::size_t next = 0;
      std::mutex mu;
      for (int j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
          for (;;) {
            std::size_t i;
            {
              std::lock_guard<std::mutex> lk(mu);
              if (next >= variants.size()) return;
              i = next++;
            }
            outcomes[i] = detail_cli::run_and_report(variants[i]);
          }
        });
      }
      for (auto& th : pool) th.join();
    }

    if (manifest.emit.svg) {
      // four overlay panels across methods: agent paths, estimate paths,
      // tracking error, estimation error
      static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                      "#8c564b", "#e377c2"};
      std::vector<SvgSeries> paths, estimates, deltas, xtildes;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const char* color = kColors[i % 6];
        const std::string label = method_name(cm.methods[i]);
        SvgSeries pa{label, color, {}, {}}, es{label, color, {}, {}},
            de{label, color, {}, {}}, xt{label, color, {}, {}};
        for (const auto& r : outcomes[i].traj.records) {
          pa.x.push_back(r.agent.x);
          pa.y.push_back(r.agent.y);
          es.x.push_back(r.x_hat.x);
          es.y.push_back(r.x_hat.y);
          de.x.push_back(r.t);
          de.y.push_back(r.delta);
          xt.x.push_back(r.t);
          xt.y.push_back(r.x_tilde_norm());
        }
        paths.push_back(std::move(pa));
        estimates.push_back(std::move(es));
        deltas.push_back(std::move(de));
        xtildes.push_back(std::move(xt));
      }
      const fs::path dir = manifest.out_dir;
      detail_cli::write_atomic(dir / "compare_paths.svg",
                               svg_line_plot("agent paths", "x [m]", "y [m]", paths, true));
      detail_cli::write_atomic(
          dir / "compare_estimates.svg",
          svg_line_plot("target estimates", "x [m]", "y [m]", estimates, true));
      detail_cli::write_atomic(
          dir / "compare_delta.svg",
          svg_line_plot("radial tracking error", "t [s]", "delta [m]", deltas));
      detail_cli::write_atomic(
          dir / "compare_xtilde.svg",
          svg_line_plot("estimation error norm", "t [s]", "||xtilde|| [m]", xtildes));
    }

    std::ostringstream summary;
    summary << "method, status, settling_xtilde_s, settling_delta_s, final_xtilde_m, "
               "final_delta_m, xhat_path_length_m, max_u_m_s\n";
    int exit_code = kExitOk;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const auto& oc = outcomes[i];
      const fs::path dir = fs::path(manifest.out_dir) / method_name(cm.methods[i]);
      detail_cli::emit_outputs(oc, dir, manifest.emit);
      exit_code = std::max(exit_code, oc.exit_code);

      const auto& recs = oc.traj.records;
      std::vector<double> ts = detail_cli::times_of(oc.traj), xt, dd;
      double path_len = 0.0, max_u = 0.0;
      for (std::size_t k = 0; k < recs.size(); ++k) {
        xt.push_back(recs[k].x_tilde_norm());
        dd.push_back(recs[k].delta);
        if (k) path_len += norm(recs[k].x_hat - recs[k - 1].x_hat);
        max_u = std::max(max_u, norm(recs[k].u));
      }
      const MonitorConfig cfg = MonitorConfig::defaults_for(oc.traj.scenario);
      auto s1 = recs.empty() ? std::nullopt : settling_time(ts, xt, cfg.settling_threshold);
      auto s2 = recs.empty() ? std::nullopt : settling_time(ts, dd, cfg.settling_threshold);
      summary << method_name(cm.methods[i]) << ", " << run_status_name(oc.traj.status) << ", "
              << (s1 ? std::to_string(*s1) : "none") << ", "
              << (s2 ? std::to_string(*s2) : "none") << ", "
              << (recs.empty() ? 0.0 : recs.back().x_tilde_norm()) << ", "
              << (recs.empty() ? 0.0 : recs.back().delta) << ", " << path_len << ", " << max_u
              << "\n";
    }
    detail_cli::write_atomic(fs::path(manifest.out_dir) / "summary.csv", summary.str());
    log << summary.str();
    return exit_code;
  } catch (const ScenarioError& e) {
    log << "manifest error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

struct SweepRow {
  Vec2 offset;
  double offset_norm = 0.0;
  RunStatus status = RunStatus::kCompleted;
  std::optional<double> settling;
};

/// Core of `sweep`, exposed for tests: runs the proposed method for each
/// initial-estimate offset and measures the estimation-error settling time.
inline std::vector<SweepRow> sweep_rows(const SweepManifest& sm) {
  std::vector<SweepRow> rows;
  for (const Vec2 off : sm.offsets) {
    Scenario sc = sm.base;
    sc.method = MethodKind::kProposed;
    sc.x_hat0 = sc.target0 + off;
    sc.validate();
    const Trajectory traj = run(sc);
    SweepRow row{off, norm(off), traj.status, std::nullopt};
    if (!traj.records.empty()) {
      std::vector<double> ts = detail_cli::times_of(traj), xt;
      for (const auto& r : traj.records) xt.push_back(r.x_tilde_norm());
      const MonitorConfig cfg = MonitorConfig::defaults_for(sc);
      row.settling = settling_time(ts, xt, cfg.settling_threshold);
    }
    rows.push_back(row);
  }
  return rows;
}

/// `sweep <manifest>`: settling times across initial estimate offsets.
/// Passes when every offset settles within t_c1 plus two integrator steps.
inline int cmd_sweep(const std::string& manifest_path, const RunManifest& manifest,
                     std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  try {
    const SweepManifest sm = load_sweep_manifest(manifest_path);
    const std::vector<SweepRow> rows = sweep_rows(sm);
    const double bound = sm.base.estimator.t_c1 + 2.0 * sm.base.dt;

    std::ostringstream table;
    table << "offset_norm_m, offset_x_m, offset_y_m, status, settling_s, bound_s, pass\n";
    bool all_pass = true;
    bool any_abort = false;
    for (const auto& row : rows) {
      const bool pass =
          row.status == RunStatus::kCompleted && row.settling && *row.settling <= bound;
      all_pass = all_pass && pass;
      any_abort = any_abort || row.status != RunStatus::kCompleted;
      table << row.offset_norm << ", " << row.offset.x << ", " << row.offset.y << ", "
            << run_status_name(row.status) << ", "
            << (row.settling ? std::to_string(*row.settling) : "none") << ", " << bound << ", "
            << (pass ? "yes" : "no") << "\n";
    }
    detail_cli::write_atomic(fs::path(manifest.out_dir) / "sweep.csv", table.str());
    log << table.str();
    if (any_abort) return kExitRuntimeAbort;
    return all_pass ? kExitOk : kExitInvariantFail;
  } catch (const ScenarioError& e) {
    log << "manifest error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

/// `check <trajectory.csv>`: re-run the analysis layer on an existing CSV.
inline int cmd_check(const std::string& csv_path, std::ostream& log = std::cout) {
  try {
    const Trajectory traj = load_csv(csv_path);
    if (!traj.completed()) {
      log << "trajectory records an aborted run: " << traj.abort_message << "\n";
      return kExitRuntimeAbort;
    }
    const InvariantReport rep = invariant_report(traj, MonitorConfig::defaults_for(traj));
    log << rep.render_text();
    return rep.all_pass() ? kExitOk : kExitInvariantFail;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}

}  // namespace botlc::cli
