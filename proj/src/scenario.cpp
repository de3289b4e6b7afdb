#include "ztran/scenario.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ztran/errors.hpp"

namespace ztran {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Value {
  std::string text;
  std::size_t line;
  std::string key;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(line, key, key + ": " + what); }

  std::uint64_t u64() const {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) fail("expected a non-negative integer, got '" + text + "'");
    return v;
  }
  std::uint32_t u32() const {
    const auto v = u64();
    if (v > 0xFFFFFFFFull) fail("value out of range");
    return static_cast<std::uint32_t>(v);
  }
  double real() const {
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) fail("expected a number, got '" + text + "'");
    return v;
  }
  bool boolean() const {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    fail("expected true or false, got '" + text + "'");
  }
  std::vector<std::uint32_t> u32_list() const {
    std::vector<std::uint32_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      Value v{trim(item), line, key};
      out.push_back(v.u32());
    }
    if (out.empty()) fail("expected a comma-separated list");
    return out;
  }
};

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

using GlobalSetter = std::function<void(Scenario&, const Value&)>;
using UeSetter = std::function<void(UeConfig&, const Value&)>;

const std::map<std::string, GlobalSetter>& global_keys() {
  static const std::map<std::string, GlobalSetter> keys = {
      {"scenario.name", [](Scenario& s, const Value& v) { s.name = v.text; }},
      {"run.duration_frames", [](Scenario& s, const Value& v) { s.duration_frames = v.u64(); }},
      {"run.seed", [](Scenario& s, const Value& v) { s.seed = v.u64(); }},
      {"run.ztran_enabled", [](Scenario& s, const Value& v) { s.ztran_enabled = v.boolean(); }},
      {"run.report_period_ms", [](Scenario& s, const Value& v) { s.report_period_ms = v.u32(); }},
      {"cell.id", [](Scenario& s, const Value& v) { s.cell_id = CellId{v.u32()}; }},
      {"cell.e2_id", [](Scenario& s, const Value& v) { s.e2_id = E2Id{v.u32()}; }},
      {"cell.total_prbs", [](Scenario& s, const Value& v) { s.cell.total_prbs = v.u32(); }},
      {"cell.bandwidth_mhz", [](Scenario& s, const Value& v) { s.cell.bandwidth_mhz = v.real(); }},
      {"cell.per_prb_rate_mbps", [](Scenario& s, const Value& v) { s.cell.per_prb_rate_mbps = v.real(); }},
      {"cell.frame_ms", [](Scenario& s, const Value& v) { s.cell.frame_ms = v.u32(); }},
      {"auth.secret", [](Scenario& s, const Value& v) { s.secret = v.text; }},
      {"auth.verification_budget_prbs", [](Scenario& s, const Value& v) { s.auth.verification_budget_prbs = v.u32(); }},
      {"auth.reauth_period_frames", [](Scenario& s, const Value& v) { s.auth.reauth_period_frames = v.u64(); }},
      {"auth.token_expiry_frames", [](Scenario& s, const Value& v) { s.auth.token_expiry_frames = v.u64(); }},
      {"auth.usage_tolerance", [](Scenario& s, const Value& v) { s.auth.usage_tolerance = v.real(); }},
      {"auth.verify_delay_frames", [](Scenario& s, const Value& v) { s.auth.verify_delay_frames = v.u64(); }},
      {"detection.window_n", [](Scenario& s, const Value& v) { s.detection.window_n = v.u32(); }},
      {"detection.rate_lo_mbps", [](Scenario& s, const Value& v) { s.detection.rate_lo_mbps = v.real(); }},
      {"detection.rate_hi_mbps", [](Scenario& s, const Value& v) { s.detection.rate_hi_mbps = v.real(); }},
      {"detection.z_sigma", [](Scenario& s, const Value& v) { s.detection.z_sigma = v.real(); }},
      {"detection.min_reports_before_decision",
       [](Scenario& s, const Value& v) { s.detection.min_reports_before_decision = v.u32(); }},
      {"detection.warmup_reports", [](Scenario& s, const Value& v) { s.warmup_reports = v.u32(); }},
      {"restricted.budget_prbs", [](Scenario& s, const Value& v) { s.restricted.budget_prbs = v.u32(); }},
      {"metrics.latency_threshold_ms", [](Scenario& s, const Value& v) { s.latency_threshold_ms = v.real(); }},
      {"fpr.benign_rate_lo_mbps", [](Scenario& s, const Value& v) { s.fpr.benign_rate_lo_mbps = v.real(); }},
      {"fpr.benign_rate_hi_mbps", [](Scenario& s, const Value& v) { s.fpr.benign_rate_hi_mbps = v.real(); }},
      {"fpr.windows", [](Scenario& s, const Value& v) { s.fpr.windows = v.u32_list(); }},
      {"fpr.trials", [](Scenario& s, const Value& v) { s.fpr.trials = v.u64(); }},
  };
  return keys;
}

const std::map<std::string, UeSetter>& ue_keys() {
  static const std::map<std::string, UeSetter> keys = {
      {"credentials",
       [](UeConfig& u, const Value& v) {
         if (v.text == "valid") {
           u.credentials_valid = true;
         } else if (v.text == "invalid") {
           u.credentials_valid = false;
         } else {
           v.fail("expected valid or invalid");
         }
       }},
      {"credential", [](UeConfig& u, const Value& v) { u.credential = v.text; }},
      {"traffic",
       [](UeConfig& u, const Value& v) {
         if (v.text == "cbr") {
           u.traffic.kind = ran::TrafficKind::cbr;
         } else if (v.text == "uniform_rate") {
           u.traffic.kind = ran::TrafficKind::uniform_rate;
         } else if (v.text == "flood") {
           u.traffic.kind = ran::TrafficKind::flood;
         } else {
           v.fail("expected cbr, uniform_rate or flood");
         }
       }},
      {"rate_mbps", [](UeConfig& u, const Value& v) { u.traffic.rate_mbps = v.real(); }},
      {"rate_lo_mbps", [](UeConfig& u, const Value& v) { u.traffic.lo_mbps = v.real(); }},
      {"rate_hi_mbps", [](UeConfig& u, const Value& v) { u.traffic.hi_mbps = v.real(); }},
      {"flood_onset_frame", [](UeConfig& u, const Value& v) { u.traffic.flood_onset_frame = v.u64(); }},
      {"packet_size_bytes", [](UeConfig& u, const Value& v) { u.traffic.packet_size_bytes = v.u32(); }},
      {"attach_frame", [](UeConfig& u, const Value& v) { u.attach_frame = v.u64(); }},
      {"priority",
       [](UeConfig& u, const Value& v) {
         if (v.text == "commercial") {
           u.priority = Priority::commercial;
         } else if (v.text == "mission_critical") {
           u.priority = Priority::mission_critical;
         } else {
           v.fail("expected commercial or mission_critical");
         }
       }},
      {"reserved_prbs", [](UeConfig& u, const Value& v) { u.reserved_prbs = v.u32(); }},
      {"snr_mean_db", [](UeConfig& u, const Value& v) { u.radio.snr_db.mean = v.real(); }},
      {"snr_std_db", [](UeConfig& u, const Value& v) { u.radio.snr_db.std = v.real(); }},
      {"cqi_mean", [](UeConfig& u, const Value& v) { u.radio.cqi.mean = v.real(); }},
      {"cqi_std", [](UeConfig& u, const Value& v) { u.radio.cqi.std = v.real(); }},
      {"tx_power_mean_dbm", [](UeConfig& u, const Value& v) { u.radio.tx_power_dbm.mean = v.real(); }},
      {"tx_power_std_dbm", [](UeConfig& u, const Value& v) { u.radio.tx_power_dbm.std = v.real(); }},
  };
  return keys;
}

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw ConfigError(0, key, "invalid " + key + ": " + what);
}

void validate(const Scenario& s) {
  if (s.duration_frames < 1) invalid("run.duration_frames", "must be at least 1");
  if (s.ues.empty()) invalid("ue", "at least one UE is required");
  if (s.cell.total_prbs < 1) invalid("cell.total_prbs", "must be at least 1");
  if (!(s.cell.per_prb_rate_mbps > 0.0)) invalid("cell.per_prb_rate_mbps", "must be positive");
  if (!(s.cell.bandwidth_mhz > 0.0)) invalid("cell.bandwidth_mhz", "must be positive");
  if (s.cell.frame_ms != kFrameMs) invalid("cell.frame_ms", "frames are fixed at 10 ms");
  if (s.report_period_ms == 0 || s.report_period_ms % kFrameMs != 0) {
    invalid("run.report_period_ms", "must be a positive multiple of 10");
  }
  if (s.secret.empty()) invalid("auth.secret", "must not be empty");
  if (s.auth.verification_budget_prbs < 1 || s.auth.verification_budget_prbs > s.cell.total_prbs) {
    invalid("auth.verification_budget_prbs", "must be between 1 and the cell's PRB count");
  }
  if (s.auth.reauth_period_frames < 1) invalid("auth.reauth_period_frames", "must be at least 1");
  if (s.auth.token_expiry_frames <= s.auth.reauth_period_frames) {
    invalid("auth.token_expiry_frames", "must exceed auth.reauth_period_frames");
  }
  if (s.auth.usage_tolerance < 0.0) invalid("auth.usage_tolerance", "must not be negative");
  if (s.detection.window_n < 1) invalid("detection.window_n", "must be at least 1");
  if (!(s.detection.rate_lo_mbps < s.detection.rate_hi_mbps)) {
    invalid("detection.rate_lo_mbps", "must be below detection.rate_hi_mbps");
  }
  if (!(s.detection.z_sigma > 0.0)) invalid("detection.z_sigma", "must be positive");
  if (s.warmup_reports < 2) invalid("detection.warmup_reports", "must be at least 2");
  if (s.restricted.budget_prbs < 1 || s.restricted.budget_prbs > 5) {
    invalid("restricted.budget_prbs", "must be between 1 and 5");
  }
  if (!(s.latency_threshold_ms > 0.0)) invalid("metrics.latency_threshold_ms", "must be positive");
  if (!(s.fpr.benign_rate_lo_mbps <= s.fpr.benign_rate_hi_mbps)) {
    invalid("fpr.benign_rate_lo_mbps", "must not exceed fpr.benign_rate_hi_mbps");
  }
  if (s.fpr.trials < 1000) invalid("fpr.trials", "must be at least 1000");
  for (auto w : s.fpr.windows) {
    if (w < 1) invalid("fpr.windows", "window sizes must be at least 1");
  }

  for (const auto& u : s.ues) {
    const std::string p = "ue." + to_string(u.id) + ".";
    const auto& t = u.traffic;
    if (t.packet_size_bytes == 0) invalid(p + "packet_size_bytes", "must be positive");
    switch (t.kind) {
      case ran::TrafficKind::cbr:
        if (t.rate_mbps < 0.0) invalid(p + "rate_mbps", "must not be negative");
        break;
      case ran::TrafficKind::uniform_rate:
        if (!(t.lo_mbps > 0.0)) invalid(p + "rate_lo_mbps", "must be positive");
        if (!(t.lo_mbps <= t.hi_mbps)) invalid(p + "rate_lo_mbps", "must not exceed rate_hi_mbps");
        break;
      case ran::TrafficKind::flood:
        if (!(t.rate_mbps > 0.0)) invalid(p + "rate_mbps", "must be positive");
        if (t.lo_mbps < 0.0 || t.lo_mbps > t.hi_mbps) invalid(p + "rate_lo_mbps", "must lie in [0, rate_hi_mbps]");
        break;
    }
    if (u.radio.cqi.mean < 0.0 || u.radio.cqi.mean > 15.0) invalid(p + "cqi_mean", "must lie in 0..15");
    for (const auto& [k, g] : {std::pair{"snr_std_db", u.radio.snr_db}, std::pair{"cqi_std", u.radio.cqi},
                               std::pair{"tx_power_std_dbm", u.radio.tx_power_dbm}}) {
      if (g.std < 0.0) invalid(p + k, "must not be negative");
    }
    if (u.priority == Priority::mission_critical &&
        (u.reserved_prbs < 1 || u.reserved_prbs > s.cell.total_prbs)) {
      invalid(p + "reserved_prbs", "must be between 1 and the cell's PRB count");
    }
  }
}

}  // namespace

bool Scenario::legitimate(UeId ue) const {
  const UeConfig* u = find(ue);
  return u && u->credentials_valid && u->traffic.kind != ran::TrafficKind::flood;
}

const UeConfig* Scenario::find(UeId ue) const {
  for (const auto& u : ues) {
    if (u.id == ue) return &u;
  }
  return nullptr;
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::map<std::uint64_t, UeConfig> ues;
  std::set<std::string> seen;
  bool fpr_lo_set = false, fpr_hi_set = false;

  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line_no, "", "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "", "missing key");
    if (value.empty()) throw ConfigError(line_no, key, key + ": missing value");
    if (!seen.insert(key).second) throw ConfigError(line_no, key, "duplicate key '" + key + "'");
    const Value v{value, line_no, key};

    if (auto it = global_keys().find(key); it != global_keys().end()) {
      it->second(s, v);
      fpr_lo_set |= key == "fpr.benign_rate_lo_mbps";
      fpr_hi_set |= key == "fpr.benign_rate_hi_mbps";
      continue;
    }
    if (key.starts_with("ue.")) {
      const auto dot = key.find('.', 3);
      if (dot != std::string::npos) {
        const Value idv{key.substr(3, dot - 3), line_no, key};
        const std::uint64_t id = idv.u64();
        if (id == 0) throw ConfigError(line_no, key, "UE id 0 is reserved");
        auto field = ue_keys().find(key.substr(dot + 1));
        if (field != ue_keys().end()) {
          auto [uit, fresh] = ues.try_emplace(id);
          if (fresh) uit->second.id = UeId{id};
          field->second(uit->second, v);
          continue;
        }
      }
    }
    throw ConfigError(line_no, key, "unknown key '" + key + "'");
  }

  for (auto& [id, u] : ues) {
    if (u.credential.empty()) u.credential = "ue" + std::to_string(id) + "-inherence";
    s.ues.push_back(u);
  }
  if (!fpr_lo_set) s.fpr.benign_rate_lo_mbps = s.detection.rate_lo_mbps;
  if (!fpr_hi_set) s.fpr.benign_rate_hi_mbps = s.detection.rate_hi_mbps;
  s.auth.per_prb_rate_mbps = s.cell.per_prb_rate_mbps;
  validate(s);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(0, "", "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_scenario(ss.str());
}

std::vector<std::pair<std::string, std::string>> resolved_entries(const Scenario& s) {
  std::vector<std::pair<std::string, std::string>> e = {
      {"scenario.name", s.name},
      {"run.duration_frames", fmt(s.duration_frames)},
      {"run.seed", fmt(s.seed)},
      {"run.ztran_enabled", fmt(s.ztran_enabled)},
      {"run.report_period_ms", fmt(std::uint64_t{s.report_period_ms})},
      {"cell.id", fmt(std::uint64_t{s.cell_id.value})},
      {"cell.e2_id", fmt(std::uint64_t{s.e2_id.value})},
      {"cell.total_prbs", fmt(std::uint64_t{s.cell.total_prbs})},
      {"cell.bandwidth_mhz", fmt(s.cell.bandwidth_mhz)},
      {"cell.per_prb_rate_mbps", fmt(s.cell.per_prb_rate_mbps)},
      {"cell.frame_ms", fmt(std::uint64_t{s.cell.frame_ms})},
      {"auth.secret", "<" + std::to_string(s.secret.size()) + " bytes>"},
      {"auth.verification_budget_prbs", fmt(std::uint64_t{s.auth.verification_budget_prbs})},
      {"auth.reauth_period_frames", fmt(s.auth.reauth_period_frames)},
      {"auth.token_expiry_frames", fmt(s.auth.token_expiry_frames)},
      {"auth.usage_tolerance", fmt(s.auth.usage_tolerance)},
      {"auth.verify_delay_frames", fmt(s.auth.verify_delay_frames)},
      {"detection.window_n", fmt(std::uint64_t{s.detection.window_n})},
      {"detection.rate_lo_mbps", fmt(s.detection.rate_lo_mbps)},
      {"detection.rate_hi_mbps", fmt(s.detection.rate_hi_mbps)},
      {"detection.z_sigma", fmt(s.detection.z_sigma)},
      {"detection.min_reports_before_decision", fmt(std::uint64_t{s.detection.min_reports_before_decision})},
      {"detection.warmup_reports", fmt(std::uint64_t{s.warmup_reports})},
      {"restricted.budget_prbs", fmt(std::uint64_t{s.restricted.budget_prbs})},
      {"metrics.latency_threshold_ms", fmt(s.latency_threshold_ms)},
      {"fpr.benign_rate_lo_mbps", fmt(s.fpr.benign_rate_lo_mbps)},
      {"fpr.benign_rate_hi_mbps", fmt(s.fpr.benign_rate_hi_mbps)},
      {"fpr.trials", fmt(s.fpr.trials)},
  };
  std::string windows;
  for (auto w : s.fpr.windows) windows += (windows.empty() ? "" : ",") + std::to_string(w);
  e.emplace_back("fpr.windows", windows);

  for (const auto& u : s.ues) {
    const std::string p = "ue." + to_string(u.id) + ".";
    e.emplace_back(p + "credentials", u.credentials_valid ? "valid" : "invalid");
    e.emplace_back(p + "traffic", std::string(ran::to_string(u.traffic.kind)));
    e.emplace_back(p + "rate_mbps", fmt(u.traffic.rate_mbps));
    e.emplace_back(p + "rate_lo_mbps", fmt(u.traffic.lo_mbps));
    e.emplace_back(p + "rate_hi_mbps", fmt(u.traffic.hi_mbps));
    e.emplace_back(p + "flood_onset_frame", fmt(u.traffic.flood_onset_frame));
    e.emplace_back(p + "packet_size_bytes", fmt(std::uint64_t{u.traffic.packet_size_bytes}));
    e.emplace_back(p + "attach_frame", fmt(u.attach_frame));
    e.emplace_back(p + "priority", std::string(to_string(u.priority)));
    e.emplace_back(p + "reserved_prbs", fmt(std::uint64_t{u.reserved_prbs}));
    e.emplace_back(p + "snr_mean_db", fmt(u.radio.snr_db.mean));
    e.emplace_back(p + "snr_std_db", fmt(u.radio.snr_db.std));
    e.emplace_back(p + "cqi_mean", fmt(u.radio.cqi.mean));
    e.emplace_back(p + "cqi_std", fmt(u.radio.cqi.std));
    e.emplace_back(p + "tx_power_mean_dbm", fmt(u.radio.tx_power_dbm.mean));
    e.emplace_back(p + "tx_power_std_dbm", fmt(u.radio.tx_power_dbm.std));
  }
  return e;
}

}  // namespace ztran
