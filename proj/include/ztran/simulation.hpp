#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ztran/ran_sim.hpp"
#include "ztran/ric_core.hpp"
#include "ztran/scenario.hpp"
#include "ztran/xapp_slicing.hpp"

namespace ztran {

struct RunMeta {
  std::string scenario;
  bool ztran = true;
  std::uint64_t seed = 0;
  std::uint64_t duration_frames = 0;
  std::vector<UeId> ues;
  std::vector<UeId> legitimate;
  double latency_threshold_ms = 100.0;
};

/// Everything a run produces. Runs read back from disk fill meta, frames
/// (CSV columns only), audit and slice_changes.
struct MetricsLog {
  RunMeta meta;
  std::vector<ran::FrameReport> frames;
  ric::AuditLog audit;
  std::vector<slicing::SliceChange> slice_changes;
  std::vector<e2::SliceControlBody> slice_controls;
  std::vector<KpmReport> kpm;
  std::vector<std::string> run_log;
  std::string sdl_snapshot;
};

/// Offline warm-up reports for one UE, drawn from the UE's configured
/// pre-attack behaviour on streams separate from the run.
std::vector<KpmReport> warmup_trace(const Scenario& s, const UeConfig& ue);
std::map<UeId, BehaviorProfile> build_profiles(const Scenario& s);

/// Runs the frame loop. Throws InvariantBreach naming the frame when a
/// scheduler, slicing or capacity invariant fails.
MetricsLog run(const Scenario& s);

}  // namespace ztran
