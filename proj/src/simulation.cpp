#include "ztran/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "ztran/errors.hpp"
#include "ztran/rng.hpp"
#include "ztran/xapp_auth.hpp"
#include "ztran/xapp_intrusion.hpp"

namespace ztran {
namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

auth::Credentials credentials_of(const UeConfig& u) { return auth::Credentials{{bytes_of(u.credential)}}; }

}  // namespace

std::vector<KpmReport> warmup_trace(const Scenario& s, const UeConfig& ue) {
  auto rng = make_stream(s.seed, "warmup", ue.id.value);
  const std::uint64_t frames_per_report = s.report_period_ms / kFrameMs;
  auto draw = [&](const ran::Gaussian& g) {
    return g.std > 0.0 ? std::normal_distribution<double>(g.mean, g.std)(rng) : g.mean;
  };
  std::vector<KpmReport> out;
  out.reserve(s.warmup_reports);
  for (std::uint32_t i = 0; i < s.warmup_reports; ++i) {
    double sum = 0.0;
    for (std::uint64_t f = 0; f < frames_per_report; ++f) {
      const auto& t = ue.traffic;
      if (t.kind == ran::TrafficKind::cbr || t.hi_mbps <= 0.0) {
        sum += t.kind == ran::TrafficKind::cbr ? t.rate_mbps : 0.0;
      } else {
        sum += std::uniform_real_distribution<double>(t.lo_mbps, t.hi_mbps)(rng);
      }
    }
    KpmReport r;
    r.ue = ue.id;
    r.cell = s.cell_id;
    r.seq = i + 1;
    r.snr_db = std::clamp(draw(ue.radio.snr_db), -20.0, 50.0);
    r.cqi = static_cast<std::uint8_t>(std::clamp(std::lround(draw(ue.radio.cqi)), 0l, 15l));
    r.tx_power_dbm = std::clamp(draw(ue.radio.tx_power_dbm), -40.0, 23.0);
    r.offered_mbps = sum / static_cast<double>(frames_per_report);
    r.throughput_mbps = r.offered_mbps;
    r.tx_packets = static_cast<std::uint64_t>(r.offered_mbps * 1000.0 * s.report_period_ms /
                                              (8.0 * ue.traffic.packet_size_bytes));
    out.push_back(r);
  }
  return out;
}

std::map<UeId, BehaviorProfile> build_profiles(const Scenario& s) {
  std::map<UeId, BehaviorProfile> out;
  for (const auto& u : s.ues) out[u.id] = intrusion::build_profile(warmup_trace(s, u), s.detection);
  return out;
}

MetricsLog run(const Scenario& s) {
  MetricsLog log;
  log.meta.scenario = s.name;
  log.meta.ztran = s.ztran_enabled;
  log.meta.seed = s.seed;
  log.meta.duration_frames = s.duration_frames;
  log.meta.latency_threshold_ms = s.latency_threshold_ms;
  for (const auto& u : s.ues) {
    log.meta.ues.push_back(u.id);
    if (s.legitimate(u.id)) log.meta.legitimate.push_back(u.id);
  }
  for (const auto& [k, v] : resolved_entries(s)) log.run_log.push_back(k + " = " + v);

  const auto secret = bytes_of(s.secret);
  ric::Ric ric(s.cell_id, s.e2_id);
  ric::AuditLog legacy_audit;
  ran::Cell cell(s.cell, s.cell_id, s.e2_id, s.ztran_enabled, s.seed,
                 s.ztran_enabled ? &ric.audit() : &legacy_audit, s.auth.reauth_period_frames);
  for (const auto& u : s.ues) cell.add_ue(u.id, u.traffic, u.radio);

  slicing::SlicingXapp* slicing_app = nullptr;
  std::map<UeId, ran::UeAuthMaterial> materials;
  if (s.ztran_enabled) {
    std::map<UeId, auth::Credentials> id_store;
    std::map<UeId, slicing::UePriority> priorities;
    for (const auto& u : s.ues) {
      id_store[u.id] = credentials_of(u);
      priorities[u.id] = slicing::UePriority{u.priority, u.priority == Priority::mission_critical ? u.reserved_prbs : 0};
    }
    slicing::SlicingConfig scfg{s.cell.total_prbs, s.auth.verification_budget_prbs, s.restricted};
    auto slicing_owned = std::make_unique<slicing::SlicingXapp>(scfg, priorities);
    slicing_app = slicing_owned.get();
    ric.register_xapp(std::move(slicing_owned));
    auto auth_owned = std::make_unique<auth::AuthXapp>(secret, s.auth, s.seed, id_store);
    auto* auth_app = auth_owned.get();
    ric.register_xapp(std::move(auth_owned));
    ric.register_xapp(std::make_unique<intrusion::IntrusionXapp>(s.detection, build_profiles(s), s.report_period_ms));

    // Out-of-band provisioning. A UE with invalid credentials presents a
    // credential the ID store does not hold and a token nobody issued.
    auto forge = make_stream(s.seed, "forgery");
    for (const auto& u : s.ues) {
      ran::UeAuthMaterial m;
      m.secret = secret;
      if (u.credentials_valid) {
        m.credentials = credentials_of(u);
        m.token = auth_app->provision(u.id).token;
      } else {
        m.credentials = auth::Credentials{{bytes_of(u.credential + "/forged")}};
        for (auto& b : m.token) b = static_cast<std::uint8_t>(forge());
      }
      materials[u.id] = std::move(m);
    }
    cell.attest(secret);
  }

  for (std::uint64_t f = 0; f < s.duration_frames; ++f) {
    ran::FrameReport report;
    try {
      if (s.ztran_enabled) {
        for (const auto& bytes : ric.take_outbox()) cell.receive(bytes);
      }
      for (const auto& u : s.ues) {
        if (u.attach_frame == f) cell.attach_ue(u.id, s.ztran_enabled ? materials.at(u.id) : ran::UeAuthMaterial{});
      }
      report = cell.step_frame();
    } catch (const InvariantBreach&) {
      throw;
    } catch (const Error& e) {
      throw InvariantBreach(f, e.what());
    }

    std::uint64_t total = 0;
    for (const auto& u : report.ues) {
      total += u.served_bits;
      if (u.served_bits > u.capacity_bits) {
        throw InvariantBreach(f, "UE " + to_string(u.ue) + " served beyond its capacity");
      }
    }
    if (total > cell.cell_capacity_bits()) throw InvariantBreach(f, "cell served beyond its capacity");

    if (s.ztran_enabled) {
      for (const auto& bytes : cell.take_uplink()) {
        const auto msg = e2::decode(bytes);
        if (msg.kind() == e2::MessageKind::KpmIndication) {
          log.kpm.push_back(std::get<e2::KpmIndicationBody>(msg.payload).report);
        }
        ric.receive(bytes);
      }
      ric.tick(f);
    }
    log.frames.push_back(std::move(report));
  }

  if (s.ztran_enabled) {
    log.audit = ric.audit();
    log.slice_changes = slicing_app->manager().changes();
    log.slice_controls = slicing_app->emitted();
    std::ostringstream snap;
    ric.sdl().write_snapshot(snap);
    log.sdl_snapshot = snap.str();
  } else {
    log.audit = legacy_audit;
  }
  return log;
}

}  // namespace ztran
