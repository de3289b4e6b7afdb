#include "ztran/xapp_intrusion.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ztran/errors.hpp"
#include "ztran/rng.hpp"
#include "ztran/sdl_keys.hpp"

namespace ztran::intrusion {
namespace {

using ric::Json;

std::vector<KpmField> profiled_fields(const DetectionConfig& cfg) {
  std::vector<KpmField> fields = cfg.gaussian_fields;
  if (std::find(fields.begin(), fields.end(), cfg.rate_field) == fields.end()) fields.push_back(cfg.rate_field);
  return fields;
}

// Shifted accumulation: exact when every sample equals the first.
double window_mean(std::span<const KpmReport> window, KpmField f) {
  const double x0 = kpm_value(window.front(), f);
  double acc = 0.0;
  for (const auto& r : window) acc += kpm_value(r, f) - x0;
  return x0 + acc / static_cast<double>(window.size());
}

void set_field(KpmReport& r, KpmField f, double v) {
  switch (f) {
    case KpmField::snr_db: r.snr_db = v; break;
    case KpmField::cqi: r.cqi = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 15l)); break;
    case KpmField::tx_packets: r.tx_packets = static_cast<std::uint64_t>(std::max(0.0, std::round(v))); break;
    case KpmField::tx_power_dbm: r.tx_power_dbm = v; break;
    case KpmField::throughput_mbps: r.throughput_mbps = v; break;
    case KpmField::offered_mbps: r.offered_mbps = v; break;
  }
}

}  // namespace

BehaviorProfile build_profile(std::span<const KpmReport> history, const DetectionConfig& cfg) {
  if (history.size() < 2) throw InsufficientData("a profile needs at least two reports");
  BehaviorProfile p;
  const double n = static_cast<double>(history.size());
  for (KpmField f : profiled_fields(cfg)) {
    const double mean = window_mean(history, f);
    double ss = 0.0;
    for (const auto& r : history) {
      const double d = kpm_value(r, f) - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    FieldProfile fp{f, mean, sd, mean - cfg.z_sigma * sd, mean + cfg.z_sigma * sd};
    if (f == cfg.rate_field) {
      fp.lo = cfg.rate_lo_mbps;
      fp.hi = cfg.rate_hi_mbps;
    } else if (sd == 0.0) {
      fp.lo = fp.hi = mean;
    }
    p.fields.push_back(fp);
  }
  return p;
}

Verdict assess(const BehaviorProfile& profile, std::span<const KpmReport> recent, const DetectionConfig& cfg,
               std::uint64_t* ops) {
  const std::size_t need = std::max<std::size_t>(1, cfg.min_reports_before_decision);
  if (recent.size() < need) throw NoVerdict("not enough reports for a decision");
  const std::size_t used = std::min<std::size_t>(cfg.window_n, recent.size());
  const auto window = recent.last(used);

  Verdict v;
  v.ue = window.back().ue;
  v.window_used = used;
  for (const auto& fp : profile.fields) {
    const double m = window_mean(window, fp.field);
    if (ops) *ops += used + 1;
    if (m < fp.lo || m > fp.hi) v.offending_fields.push_back(Offense{fp.field, m, fp.lo, fp.hi});
  }
  v.flagged = !v.offending_fields.empty();
  return v;
}

std::pair<double, double> wilson_interval(std::uint64_t k, std::uint64_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  const double lo = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double hi = k == n ? 1.0 : std::min(1.0, centre + half);
  return {lo, hi};
}

FprEstimate estimate_fpr(const BehaviorProfile& profile, std::uint32_t window_n, std::uint64_t trials,
                         std::uint64_t seed, const DetectionConfig& cfg, const BenignModel& benign) {
  if (trials < 1000) throw Error("estimate_fpr needs at least 1000 trials");
  if (window_n < 1) throw Error("window_n must be at least 1");
  DetectionConfig dc = cfg;
  dc.window_n = window_n;
  dc.min_reports_before_decision = 1;

  auto rng = make_stream(seed, "fpr", window_n);
  std::uniform_real_distribution<double> rate(benign.rate_lo_mbps, benign.rate_hi_mbps);
  std::vector<std::normal_distribution<double>> gauss;
  for (const auto& fp : profile.fields) gauss.emplace_back(fp.mean, fp.std > 0.0 ? fp.std : 1.0);

  FprEstimate est;
  est.window_n = window_n;
  est.trials = trials;
  std::vector<KpmReport> window(window_n);
  for (std::uint64_t t = 0; t < trials; ++t) {
    for (auto& r : window) {
      for (std::size_t i = 0; i < profile.fields.size(); ++i) {
        const auto& fp = profile.fields[i];
        double v;
        if (fp.field == dc.rate_field) {
          v = rate(rng);
        } else {
          v = fp.std > 0.0 ? gauss[i](rng) : fp.mean;
        }
        set_field(r, fp.field, v);
      }
    }
    if (assess(profile, window, dc).flagged) ++est.flagged;
  }
  est.fpr = static_cast<double>(est.flagged) / static_cast<double>(trials);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(est.flagged, trials);
  return est;
}

Json profile_to_json(const BehaviorProfile& p) {
  Json arr = Json::array();
  for (const auto& f : p.fields) {
    arr.push_back({{"field", to_string(f.field)}, {"mean", f.mean}, {"std", f.std}, {"lo", f.lo}, {"hi", f.hi}});
  }
  return arr;
}

BehaviorProfile profile_from_json(const Json& j) {
  BehaviorProfile p;
  for (const auto& f : j) {
    const auto field = kpm_field_from_string(f.at("field").get<std::string>());
    if (!field) throw Error("unknown KPM field in profile");
    p.fields.push_back(FieldProfile{*field, f.at("mean").get<double>(), f.at("std").get<double>(),
                                    f.at("lo").get<double>(), f.at("hi").get<double>()});
  }
  return p;
}

IntrusionXapp::IntrusionXapp(DetectionConfig cfg, std::map<UeId, BehaviorProfile> profiles,
                             std::uint32_t report_period_ms)
    : cfg_(std::move(cfg)), profiles_(std::move(profiles)), report_period_ms_(report_period_ms) {}

void IntrusionXapp::on_init(ric::RicContext& ctx) {
  for (const auto& [ue, p] : profiles_) ctx.sdl().put_json(sdl::kProfiles, to_string(ue), profile_to_json(p));
  ctx.subscribe(e2::MessageKind::KpmIndication);
  ctx.subscribe(e2::MessageKind::SubscriptionAck);
  ctx.send_to_ran(e2::SubscriptionRequestBody{report_period_ms_, std::nullopt});
}

void IntrusionXapp::on_e2(ric::RicContext& ctx, const e2::Message& msg) {
  if (msg.kind() == e2::MessageKind::SubscriptionAck) {
    ctx.audit().record(ctx.time_ms(), "intrusion", "subscription_ack",
                       {{"report_period_ms", std::get<e2::SubscriptionAckBody>(msg.payload).report_period_ms}});
    return;
  }
  if (msg.kind() != e2::MessageKind::KpmIndication) return;
  const KpmReport& report = std::get<e2::KpmIndicationBody>(msg.payload).report;

  const auto binding = ctx.sdl().get_json(sdl::kSlices, sdl::ue_key("binding", report.ue));
  if (!binding || (*binding)["kind"].get<std::string>() != to_string(SliceKind::normal)) return;
  auto pit = profiles_.find(report.ue);
  if (pit == profiles_.end()) return;

  auto& window = windows_[report.ue];
  window.push_back(report);
  if (window.size() > cfg_.window_n) window.erase(window.begin());
  Json stored = Json::array();
  for (const auto& r : window) {
    Json entry = {{"seq", r.seq}};
    for (KpmField f : kAllKpmFields) entry[std::string(to_string(f))] = kpm_value(r, f);
    stored.push_back(entry);
  }
  ctx.sdl().put_json(sdl::kIntrusion, sdl::ue_key("window", report.ue), stored);

  if (window.size() < std::max<std::size_t>(1, cfg_.min_reports_before_decision)) return;
  Verdict v = assess(pit->second, window, cfg_);
  verdicts_.push_back(v);
  if (!v.flagged) return;

  Json offending = Json::array();
  for (const auto& o : v.offending_fields) {
    offending.push_back({{"field", to_string(o.field)}, {"window_mean", o.window_mean}, {"lo", o.lo}, {"hi", o.hi}});
  }
  ctx.audit().record(ctx.time_ms(), "intrusion", "intrusion_flag",
                     {{"frame", ctx.frame()}, {"ue", report.ue.value}, {"window_used", v.window_used},
                      {"offending", offending}});
  ctx.publish("intrusion.flag", {{"ue", report.ue.value}, {"window_used", v.window_used}, {"offending", offending}});
  windows_.erase(report.ue);
}

}  // namespace ztran::intrusion
