#pragma once

// Behaviour profiling and window-mean anomaly detection over KPM reports.
//
// A UE is flagged when, for any profiled field, the mean over its last
// window_n reports lies strictly outside the field's accepted range. Radio
// fields get mean +/- z_sigma * std bands from a warm-up trace; the rate field
// uses the pinned [rate_lo, rate_hi] range instead.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ztran/core_model.hpp"
#include "ztran/ric_core.hpp"

namespace ztran::intrusion {

struct DetectionConfig {
  std::uint32_t window_n = 10;
  double rate_lo_mbps = 10.0;
  double rate_hi_mbps = 20.0;
  double z_sigma = 3.0;
  std::uint32_t min_reports_before_decision = 1;
  KpmField rate_field = KpmField::offered_mbps;
  std::vector<KpmField> gaussian_fields{KpmField::snr_db, KpmField::cqi, KpmField::tx_power_dbm};
};

struct Offense {
  KpmField field;
  double window_mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Offense&) const = default;
};

struct Verdict {
  UeId ue;
  bool flagged = false;
  std::vector<Offense> offending_fields;
  std::size_t window_used = 0;

  bool operator==(const Verdict&) const = default;
};

/// Sample mean and (n-1) standard deviation of every configured field.
/// Throws InsufficientData for fewer than two reports.
BehaviorProfile build_profile(std::span<const KpmReport> history, const DetectionConfig& cfg);

/// Judges the last min(window_n, size) reports. Throws NoVerdict when fewer
/// than max(1, min_reports_before_decision) reports are given. `ops`, when
/// given, is incremented by the work done.
Verdict assess(const BehaviorProfile& profile, std::span<const KpmReport> recent, const DetectionConfig& cfg,
               std::uint64_t* ops = nullptr);

/// 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z = 1.959963984540054);

struct FprEstimate {
  std::uint32_t window_n = 0;
  std::uint64_t trials = 0;
  std::uint64_t flagged = 0;
  double fpr = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Benign traffic for the Monte Carlo estimate: the rate field is uniform on
/// [rate_lo, rate_hi], every other profiled field Gaussian with the profile's
/// mean and std.
struct BenignModel {
  double rate_lo_mbps = 10.0;
  double rate_hi_mbps = 20.0;
};

/// Flagged fraction of `trials` benign windows of `window_n` reports.
/// Requires trials >= 1000.
FprEstimate estimate_fpr(const BehaviorProfile& profile, std::uint32_t window_n, std::uint64_t trials,
                         std::uint64_t seed, const DetectionConfig& cfg, const BenignModel& benign);

/// xApp wrapper. Profiles are computed offline and loaded at start; reports
/// are assessed only while the UE holds a normal slice.
class IntrusionXapp : public ric::Xapp {
 public:
  static constexpr const char* kName = "ztran-intrusion";

  IntrusionXapp(DetectionConfig cfg, std::map<UeId, BehaviorProfile> profiles, std::uint32_t report_period_ms);

  std::string name() const override { return kName; }
  void on_init(ric::RicContext& ctx) override;
  void on_e2(ric::RicContext& ctx, const e2::Message& msg) override;

  const std::vector<Verdict>& verdicts() const noexcept { return verdicts_; }

 private:
  DetectionConfig cfg_;
  std::map<UeId, BehaviorProfile> profiles_;
  std::uint32_t report_period_ms_;
  std::map<UeId, std::vector<KpmReport>> windows_;
  std::vector<Verdict> verdicts_;
};

ric::Json profile_to_json(const BehaviorProfile& p);
BehaviorProfile profile_from_json(const ric::Json& j);

}  // namespace ztran::intrusion
