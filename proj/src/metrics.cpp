#include "ztran/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ztran/errors.hpp"

namespace ztran {
namespace {

using ric::Json;

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError(0, "", "cannot read " + p.string());
  return f;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError(0, "", "cannot write " + p.string());
  return f;
}

bool in_service(const MetricsLog& m, const ran::UeFrameStats& u) {
  return !m.meta.ztran || u.state == AuthState::granted || u.state == AuthState::isolated;
}

Json ids_json(const std::vector<UeId>& ids) {
  Json a = Json::array();
  for (auto id : ids) a.push_back(id.value);
  return a;
}

std::string opt_slice(const std::optional<SliceId>& s) { return s ? std::to_string(s->value) : std::string(); }

}  // namespace

RunSummary summarize(const MetricsLog& m, double threshold) {
  RunSummary s;
  s.ztran = m.meta.ztran;
  s.latency_threshold_ms = threshold;
  s.frames = m.frames.size();
  const std::set<UeId> legit(m.meta.legitimate.begin(), m.meta.legitimate.end());

  for (const auto& r : m.audit.records()) {
    if (r.action != "intrusion_flag") continue;
    s.detection_frame = r.detail.at("frame").get<std::uint64_t>();
    s.flagged_ue = UeId{r.detail.at("ue").get<std::uint64_t>()};
    break;
  }

  std::optional<std::uint64_t> last_exceed;
  for (const auto& fr : m.frames) {
    bool evaluated = false, exceeded = false;
    for (const auto& u : fr.ues) {
      if (s.flagged_ue && u.ue == *s.flagged_ue && u.state == AuthState::isolated && !s.isolation_frame) {
        s.isolation_frame = fr.frame_index;
      }
      if (!legit.contains(u.ue) || !u.mean_latency_ms) continue;
      evaluated = true;
      s.peak_latency_ms = std::max(s.peak_latency_ms, *u.mean_latency_ms);
      if (*u.mean_latency_ms > threshold) exceeded = true;
    }
    if (evaluated) ++s.evaluated_frames;
    if (exceeded) {
      ++s.exceeding_frames;
      last_exceed = fr.frame_index;
    }
  }
  s.exceedance_fraction =
      s.evaluated_frames == 0 ? 0.0 : static_cast<double>(s.exceeding_frames) / static_cast<double>(s.evaluated_frames);
  if (s.isolation_frame) {
    s.recovery_frame = (last_exceed && *last_exceed >= *s.isolation_frame) ? *last_exceed + 1 : *s.isolation_frame;
  }

  for (UeId id : m.meta.ues) {
    PhaseThroughput p;
    p.ue = id;
    p.legitimate = legit.contains(id);
    double pre = 0.0, post = 0.0;
    std::uint64_t npre = 0, npost = 0;
    for (const auto& fr : m.frames) {
      const auto* u = fr.find(id);
      if (!u || !in_service(m, *u)) continue;
      const double mbps = static_cast<double>(u->served_bits) / (1000.0 * kFrameMs);
      if (!s.detection_frame || fr.frame_index <= *s.detection_frame) {
        pre += mbps;
        ++npre;
      }
      if (s.isolation_frame && fr.frame_index >= *s.isolation_frame) {
        post += mbps;
        ++npost;
      }
    }
    if (npre > 0) p.pre_detection_mbps = pre / static_cast<double>(npre);
    if (npost > 0) p.post_isolation_mbps = post / static_cast<double>(npost);
    s.ues.push_back(p);
  }
  return s;
}

Json summary_to_json(const RunSummary& s) {
  Json j;
  j["mode"] = s.ztran ? "ztran" : "legacy";
  j["latency_threshold_ms"] = s.latency_threshold_ms;
  j["frames"] = s.frames;
  j["evaluated_frames"] = s.evaluated_frames;
  j["exceeding_frames"] = s.exceeding_frames;
  j["exceedance_fraction"] = s.exceedance_fraction;
  j["peak_latency_ms"] = s.peak_latency_ms;
  j["detection_frame"] = s.detection_frame ? Json(*s.detection_frame) : Json(nullptr);
  j["flagged_ue"] = s.flagged_ue ? Json(s.flagged_ue->value) : Json(nullptr);
  j["isolation_frame"] = s.isolation_frame ? Json(*s.isolation_frame) : Json(nullptr);
  j["recovery_frame"] = s.recovery_frame ? Json(*s.recovery_frame) : Json(nullptr);
  Json ues = Json::array();
  for (const auto& p : s.ues) {
    ues.push_back({{"ue", p.ue.value},
                   {"legitimate", p.legitimate},
                   {"pre_detection_mbps", p.pre_detection_mbps ? Json(*p.pre_detection_mbps) : Json(nullptr)},
                   {"post_isolation_mbps", p.post_isolation_mbps ? Json(*p.post_isolation_mbps) : Json(nullptr)}});
  }
  j["ues"] = ues;
  j["fpr_curve"] = s.fpr_curve.empty() ? Json(nullptr) : Json(s.fpr_curve);
  return j;
}

void write_summary(const RunSummary& s, const std::filesystem::path& file) {
  auto f = open_out(file);
  f << summary_to_json(s).dump(2) << '\n';
}

void write_metrics(const MetricsLog& m, const RunSummary& summary, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto f = open_out(dir / "frames.csv");
    f << "frame_index,ue,served_bits,queue_bytes,latency_ms,auth_state,slice_id\n";
    for (const auto& fr : m.frames) {
      for (const auto& u : fr.ues) {
        f << fr.frame_index << ',' << u.ue.value << ',' << u.served_bits << ',' << u.queue_bytes << ','
          << (u.mean_latency_ms ? fixed(*u.mean_latency_ms, 3) : "") << ',' << to_string(u.state) << ','
          << opt_slice(u.slice) << '\n';
      }
    }
  }
  {
    auto f = open_out(dir / "audit.jsonl");
    m.audit.write_jsonl(f);
  }
  {
    auto f = open_out(dir / "slices.csv");
    f << "frame,ue,old_slice,new_slice,cause\n";
    for (const auto& c : m.slice_changes) {
      f << c.frame << ',' << c.ue.value << ',' << opt_slice(c.old_slice) << ',' << opt_slice(c.new_slice) << ','
        << slicing::to_string(c.cause) << '\n';
    }
  }
  {
    auto f = open_out(dir / "kpm.csv");
    f << "ue,seq,snr_db,cqi,tx_packets,tx_power_dbm,throughput_mbps,offered_mbps\n";
    for (const auto& r : m.kpm) {
      f << r.ue.value << ',' << r.seq << ',' << fixed(r.snr_db) << ',' << int{r.cqi} << ',' << r.tx_packets << ','
        << fixed(r.tx_power_dbm) << ',' << fixed(r.throughput_mbps) << ',' << fixed(r.offered_mbps) << '\n';
    }
  }
  {
    auto f = open_out(dir / "run_meta.json");
    Json j = {{"scenario", m.meta.scenario},
              {"mode", m.meta.ztran ? "ztran" : "legacy"},
              {"seed", m.meta.seed},
              {"duration_frames", m.meta.duration_frames},
              {"ues", ids_json(m.meta.ues)},
              {"legitimate", ids_json(m.meta.legitimate)},
              {"latency_threshold_ms", m.meta.latency_threshold_ms}};
    f << j.dump(2) << '\n';
  }
  {
    auto f = open_out(dir / "run.log");
    for (const auto& line : m.run_log) f << line << '\n';
  }
  if (!m.sdl_snapshot.empty()) {
    auto f = open_out(dir / "sdl_snapshot.json");
    f << m.sdl_snapshot;
  }
  write_summary(summary, dir / "summary.json");
}

MetricsLog read_metrics(const std::filesystem::path& dir) {
  MetricsLog m;
  try {
    auto meta_in = open_in(dir / "run_meta.json");
    const Json meta = Json::parse(meta_in);
    m.meta.scenario = meta.at("scenario").get<std::string>();
    m.meta.ztran = meta.at("mode").get<std::string>() == "ztran";
    m.meta.seed = meta.at("seed").get<std::uint64_t>();
    m.meta.duration_frames = meta.at("duration_frames").get<std::uint64_t>();
    m.meta.latency_threshold_ms = meta.at("latency_threshold_ms").get<double>();
    for (const auto& id : meta.at("ues")) m.meta.ues.push_back(UeId{id.get<std::uint64_t>()});
    for (const auto& id : meta.at("legitimate")) m.meta.legitimate.push_back(UeId{id.get<std::uint64_t>()});

    auto frames_in = open_in(dir / "frames.csv");
    std::string line;
    std::getline(frames_in, line);
    std::size_t line_no = 1;
    while (std::getline(frames_in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto c = split(line, ',');
      if (c.size() != 7) throw ConfigError(line_no, "frames.csv", "frames.csv: expected 7 columns");
      const std::uint64_t frame = std::stoull(c[0]);
      if (m.frames.empty() || m.frames.back().frame_index != frame) {
        m.frames.push_back(ran::FrameReport{frame, {}});
      }
      ran::UeFrameStats u;
      u.ue = UeId{std::stoull(c[1])};
      u.served_bits = std::stoull(c[2]);
      u.queue_bytes = std::stoull(c[3]);
      if (!c[4].empty()) u.mean_latency_ms = std::stod(c[4]);
      const auto st = auth_state_from_string(c[5]);
      if (!st) throw ConfigError(line_no, "frames.csv", "frames.csv: unknown auth state '" + c[5] + "'");
      u.state = *st;
      if (!c[6].empty()) u.slice = SliceId{static_cast<std::uint16_t>(std::stoul(c[6]))};
      m.frames.back().ues.push_back(u);
    }

    auto audit_in = open_in(dir / "audit.jsonl");
    while (std::getline(audit_in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      m.audit.record(j.at("time_ms").get<std::uint64_t>(), j.at("actor").get<std::string>(),
                     j.at("action").get<std::string>(), j.at("detail"));
    }

    std::ifstream slices_in(dir / "slices.csv");
    if (slices_in) {
      std::getline(slices_in, line);
      while (std::getline(slices_in, line)) {
        if (line.empty()) continue;
        const auto c = split(line, ',');
        if (c.size() != 5) continue;
        slicing::SliceChange ch;
        ch.frame = std::stoull(c[0]);
        ch.ue = UeId{std::stoull(c[1])};
        if (!c[2].empty()) ch.old_slice = SliceId{static_cast<std::uint16_t>(std::stoul(c[2]))};
        if (!c[3].empty()) ch.new_slice = SliceId{static_cast<std::uint16_t>(std::stoul(c[3]))};
        ch.cause = slicing::change_cause_from_string(c[4]).value_or(slicing::ChangeCause::release);
        m.slice_changes.push_back(ch);
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(0, "", "malformed metrics in " + dir.string() + ": " + e.what());
  }
  return m;
}

std::vector<intrusion::FprEstimate> fpr_sweep(const Scenario& s, const std::vector<std::uint32_t>& windows,
                                              std::uint64_t trials, std::uint64_t seed) {
  const UeConfig* ref = &s.ues.front();
  for (const auto& u : s.ues) {
    if (s.legitimate(u.id)) {
      ref = &u;
      break;
    }
  }
  const auto profile = intrusion::build_profile(warmup_trace(s, *ref), s.detection);
  const intrusion::BenignModel benign{s.fpr.benign_rate_lo_mbps, s.fpr.benign_rate_hi_mbps};
  std::vector<intrusion::FprEstimate> out;
  for (auto w : windows) out.push_back(intrusion::estimate_fpr(profile, w, trials, seed, s.detection, benign));
  return out;
}

std::string fpr_csv(const std::vector<intrusion::FprEstimate>& rows) {
  std::ostringstream os;
  os << "window_n,trials,fpr_estimate,ci_low,ci_high\n";
  for (const auto& r : rows) {
    os << r.window_n << ',' << r.trials << ',' << fixed(r.fpr) << ',' << fixed(r.ci_low) << ',' << fixed(r.ci_high)
       << '\n';
  }
  return os.str();
}

}  // namespace ztran
