#pragma once

// Scenario files are flat `section.key = value` lines; `#` starts a comment.
// UE entries use `ue.<id>.<key>`. See scenarios/example.scn for every key.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ztran/core_model.hpp"
#include "ztran/ran_sim.hpp"
#include "ztran/xapp_auth.hpp"
#include "ztran/xapp_intrusion.hpp"
#include "ztran/xapp_slicing.hpp"

namespace ztran {

struct UeConfig {
  UeId id;
  bool credentials_valid = true;
  std::string credential;  // inherence factor; defaults to "ue<id>-inherence"
  ran::TrafficModel traffic;
  ran::RadioProfile radio;
  Priority priority = Priority::commercial;
  std::uint32_t reserved_prbs = 20;
  std::uint64_t attach_frame = 0;
};

struct FprConfig {
  double benign_rate_lo_mbps = 10.0;
  double benign_rate_hi_mbps = 20.0;
  std::vector<std::uint32_t> windows{1, 2, 5, 10};
  std::uint64_t trials = 10000;
};

struct Scenario {
  std::string name = "unnamed";
  ran::CellConfig cell;
  CellId cell_id{1};
  E2Id e2_id{1};
  std::vector<UeConfig> ues;
  bool ztran_enabled = true;
  std::uint64_t duration_frames = 1000;
  std::uint64_t seed = 1;
  std::uint32_t report_period_ms = 100;
  std::string secret = "ztran-shared-secret";
  auth::AuthConfig auth;
  intrusion::DetectionConfig detection;
  std::uint32_t warmup_reports = 200;
  slicing::RestrictedPolicy restricted;
  double latency_threshold_ms = 100.0;
  FprConfig fpr;

  /// Valid credentials and no flood traffic.
  bool legitimate(UeId ue) const;
  const UeConfig* find(UeId ue) const;
};

/// Throws ConfigError: with the line number for syntax, unknown keys and bad
/// values; with the key name for violated invariants.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Every key with its resolved value, defaults included, in a stable order.
std::vector<std::pair<std::string, std::string>> resolved_entries(const Scenario& s);

}  // namespace ztran
