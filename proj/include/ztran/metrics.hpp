#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ztran/simulation.hpp"
#include "ztran/xapp_intrusion.hpp"

namespace ztran {

struct PhaseThroughput {
  UeId ue;
  bool legitimate = false;
  std::optional<double> pre_detection_mbps;
  std::optional<double> post_isolation_mbps;
};

struct RunSummary {
  bool ztran = true;
  double latency_threshold_ms = 100.0;
  std::uint64_t frames = 0;
  /// Frames in which at least one legitimate UE had a packet served.
  std::uint64_t evaluated_frames = 0;
  std::uint64_t exceeding_frames = 0;
  double exceedance_fraction = 0.0;
  double peak_latency_ms = 0.0;
  std::optional<std::uint64_t> detection_frame;
  std::optional<UeId> flagged_ue;
  /// First frame in which the flagged UE ran isolated.
  std::optional<std::uint64_t> isolation_frame;
  /// First frame after which no legitimate UE exceeds the threshold again.
  std::optional<std::uint64_t> recovery_frame;
  std::vector<PhaseThroughput> ues;
  std::string fpr_curve;
};

RunSummary summarize(const MetricsLog& m, double latency_threshold_ms);
ric::Json summary_to_json(const RunSummary& s);

/// frames.csv, audit.jsonl, slices.csv, kpm.csv, run_meta.json, run.log,
/// sdl_snapshot.json and summary.json.
void write_metrics(const MetricsLog& m, const RunSummary& summary, const std::filesystem::path& dir);
/// Reads back what summarize needs. Throws ConfigError on missing or
/// malformed files.
MetricsLog read_metrics(const std::filesystem::path& dir);
void write_summary(const RunSummary& s, const std::filesystem::path& file);

/// One estimate per window size, using the first legitimate UE's profile and
/// the scenario's benign rate range.
std::vector<intrusion::FprEstimate> fpr_sweep(const Scenario& s, const std::vector<std::uint32_t>& windows,
                                              std::uint64_t trials, std::uint64_t seed);
std::string fpr_csv(const std::vector<intrusion::FprEstimate>& rows);

}  // namespace ztran
