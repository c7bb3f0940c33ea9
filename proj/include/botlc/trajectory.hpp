#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botlc/scenario.hpp"
#include "botlc/vec2.hpp"

namespace botlc {

/// Per-record diagnostic flag bits (the CSV `flags` column).
struct RecordFlags {
  static constexpr std::uint32_t kZeroBranch = 1u << 0;     ///< xi fell back to zero
  static constexpr std::uint32_t kEstimatorCap = 1u << 1;   ///< estimator exp arg capped
  static constexpr std::uint32_t kControllerCap = 1u << 2;  ///< controller exp arg capped
};

/// One uniformly sampled trajectory record. `theta` is the wrapped bearing
/// angle in (-pi, pi]; time-series consumers unwrap it themselves.
/// `sigma_min`/`det` are regressor diagnostics; they are carried in memory
/// but not part of the CSV contract (records loaded from CSV hold NaN
/// there).
struct TrajectoryRecord {
  double t = 0.0;
  Vec2 agent;        // y
  Vec2 target;       // x
  Vec2 x_hat;
  Vec2 xi;
  double d = 0.0;
  double d_hat = 0.0;
  double delta = 0.0;        // d - d_star
  double varrho = 0.0;       // d - d_hat
  Vec2 x_tilde;              // x_hat - x
  Vec2 u;
  double theta = 0.0;
  std::uint32_t flags = 0;
  double sigma_min = 0.0;
  double det = 0.0;
  Mat2Sym P;  ///< regressor matrix snapshot (NaN entries for CSV input)
  Vec2 q;     ///< regressor vector snapshot

  double x_tilde_norm() const { return norm(x_tilde); }
  bool zero_branch() const { return flags & RecordFlags::kZeroBranch; }
};

enum class RunStatus { kCompleted, kDegenerate, kNonFinite };

inline const char* run_status_name(RunStatus s) {
  switch (s) {
    case RunStatus::kCompleted: return "completed";
    case RunStatus::kDegenerate: return "degenerate-geometry";
    case RunStatus::kNonFinite: return "non-finite-state";
  }
  return "?";
}

/// Result of one simulation run: the records, the scenario that produced
/// them, and the abort record when the run did not complete.
struct Trajectory {
  Scenario scenario;
  std::vector<TrajectoryRecord> records;
  RunStatus status = RunStatus::kCompleted;
  double abort_time = 0.0;
  std::string abort_message;
  std::int64_t cap_events = 0;  ///< steps on which any exp-arg cap engaged

  bool completed() const { return status == RunStatus::kCompleted; }
};

}  // namespace botlc
