#include "ztran/ran_sim.hpp"

#include <algorithm>
#include <cmath>

#include "ztran/errors.hpp"
#include "ztran/rng.hpp"

namespace ztran::ran {

std::string_view to_string(TrafficKind k) {
  switch (k) {
    case TrafficKind::cbr: return "cbr";
    case TrafficKind::uniform_rate: return "uniform_rate";
    case TrafficKind::flood: return "flood";
  }
  return "?";
}

double TrafficSource::rate_mbps(std::uint64_t frame) {
  switch (model_.kind) {
    case TrafficKind::cbr:
      return model_.rate_mbps;
    case TrafficKind::uniform_rate:
      return std::uniform_real_distribution<double>(model_.lo_mbps, model_.hi_mbps)(rng_);
    case TrafficKind::flood:
      if (frame >= model_.flood_onset_frame) return model_.rate_mbps;
      if (model_.hi_mbps <= 0.0) return 0.0;
      return std::uniform_real_distribution<double>(model_.lo_mbps, model_.hi_mbps)(rng_);
  }
  return 0.0;
}

std::vector<double> TrafficSource::arrivals(std::uint64_t frame, std::uint32_t frame_ms) {
  credit_bits_ += rate_mbps(frame) * 1000.0 * frame_ms;
  const double size = 8.0 * model_.packet_size_bytes;
  const auto n = static_cast<std::size_t>(std::floor(credit_bits_ / size));
  credit_bits_ -= static_cast<double>(n) * size;
  std::vector<double> out;
  out.reserve(n);
  const double t0 = static_cast<double>(frame) * frame_ms;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(t0 + (static_cast<double>(i) + 0.5) * frame_ms / static_cast<double>(n));
  }
  return out;
}

std::uint64_t FrameReport::total_served_bits() const {
  std::uint64_t s = 0;
  for (const auto& u : ues) s += u.served_bits;
  return s;
}

const UeFrameStats* FrameReport::find(UeId ue) const {
  for (const auto& u : ues) {
    if (u.ue == ue) return &u;
  }
  return nullptr;
}

Cell::Cell(CellConfig cfg, CellId cell, E2Id e2, bool ztran, std::uint64_t seed, ric::AuditLog* audit,
           std::uint64_t reauth_period_frames)
    : cfg_(cfg),
      cell_(cell),
      e2_(e2),
      ztran_(ztran),
      seed_(seed),
      audit_(audit),
      reauth_period_(reauth_period_frames),
      uplink_(cell, e2) {}

void Cell::add_ue(UeId ue, TrafficModel traffic, RadioProfile radio) {
  if (ues_.contains(ue)) throw AttachError("UE " + to_string(ue) + " already known to the cell");
  UeState st;
  st.id = ue;
  st.radio = radio;
  ues_.emplace(ue, Ue{std::move(st), TrafficSource(traffic, make_stream(seed_, "traffic", ue.value)),
                      make_stream(seed_, "radio", ue.value)});
}

Cell::Ue& Cell::get(UeId id) {
  auto it = ues_.find(id);
  if (it == ues_.end()) throw AttachError("unknown UE " + to_string(id));
  return it->second;
}

const UeState& Cell::ue(UeId id) const {
  auto it = ues_.find(id);
  if (it == ues_.end()) throw AttachError("unknown UE " + to_string(id));
  return it->second.st;
}

std::vector<UeId> Cell::ue_ids() const {
  std::vector<UeId> ids;
  for (const auto& [id, u] : ues_) ids.push_back(id);
  return ids;
}

void Cell::send(e2::Payload payload) { outbox_.push_back(e2::encode(uplink_.make(std::move(payload)))); }

void Cell::set_state(Ue& u, AuthState to) {
  if (u.st.state == to) return;
  if (audit_) {
    audit_->record(frame_ * cfg_.frame_ms, "ran", "auth_state",
                   {{"frame", frame_}, {"ue", u.st.id.value}, {"from", to_string(u.st.state)}, {"to", to_string(to)}});
  }
  u.st.state = to;
}

std::optional<e2::Message> Cell::attach_ue(UeId id, UeAuthMaterial material) {
  Ue& u = get(id);
  if (u.st.attached) throw AttachError("UE " + to_string(id) + " is already attached");
  u.st.attached = true;
  if (!ztran_) return std::nullopt;

  const auto blob = auth::make_blob(material.token, id, cell_, e2_, kNoSlice, material.secret, material.credentials);
  u.st.material = std::move(material);
  auto msg = uplink_.make(e2::AuthRequestBody{std::vector<std::uint8_t>(blob.begin(), blob.end())});
  outbox_.push_back(e2::encode(msg));
  set_state(u, AuthState::verifying);
  return msg;
}

e2::Message Cell::attest(std::span<const std::uint8_t> secret) {
  const auto blob = auth::make_ran_blob(cell_, e2_, secret);
  auto msg = uplink_.make(e2::AuthRequestBody{std::vector<std::uint8_t>(blob.begin(), blob.end())});
  outbox_.push_back(e2::encode(msg));
  return msg;
}

void Cell::receive(std::span<const std::uint8_t> frame) { staged_.push_back(e2::decode(frame)); }

void Cell::apply_slices(const e2::SliceControlBody& body) {
  const auto report = validate_slice_table(body.slices, cfg_.total_prbs);
  if (!report.ok()) throw SchedulerInvariantError("slice table rejected: " + report.describe());
  slices_.clear();
  for (const auto& s : body.slices) slices_.emplace(s.id, s);

  std::map<UeId, SliceId> bound;
  for (const auto& b : body.bindings) bound[b.ue] = b.slice;
  for (auto& [id, u] : ues_) {
    auto it = bound.find(id);
    if (it == bound.end()) {
      if (u.st.slice) {
        u.st.slice.reset();
        u.st.queue.clear();
        u.st.queued_bits = 0;
      }
      continue;
    }
    const SliceSpec& spec = slices_.at(it->second);
    u.st.slice = it->second;
    if (spec.kind == SliceKind::restricted && u.st.state == AuthState::granted) {
      set_state(u, AuthState::isolated);
    } else if (spec.kind == SliceKind::normal && u.st.state == AuthState::isolated) {
      set_state(u, AuthState::granted);
    }
  }
}

void Cell::inject_backlog(UeId id, std::uint64_t bits, double arrival_ms) {
  Ue& u = get(id);
  const std::uint32_t size = 8 * u.traffic.model().packet_size_bytes;
  while (bits > 0) {
    const auto b = static_cast<std::uint32_t>(std::min<std::uint64_t>(bits, size));
    Packet p{id, arrival_ms, b, b};
    if (ztran_) {
      u.st.queue.push_back(p);
    } else {
      shared_queue_.push_back(p);
      u.st.legacy_arrivals.push_back(arrival_ms);
    }
    u.st.queued_bits += b;
    bits -= b;
  }
}

void Cell::apply(const e2::Message& msg) {
  if (msg.cell != cell_ || msg.e2 != e2_) return;
  switch (msg.kind()) {
    case e2::MessageKind::SubscriptionRequest: {
      const auto& body = std::get<e2::SubscriptionRequestBody>(msg.payload);
      report_period_ms_ = body.report_period_ms;
      report_filter_ = body.ue_filter;
      send(e2::SubscriptionAckBody{body.report_period_ms});
      break;
    }
    case e2::MessageKind::AuthResponse: {
      const auto& body = std::get<e2::AuthResponseBody>(msg.payload);
      auto it = ues_.find(body.ue);
      if (it == ues_.end()) break;
      Ue& u = it->second;
      u.st.reauth_pending = false;
      if (body.outcome == AuthOutcome::granted) {
        if (u.st.material) u.st.material->token = body.token;
        u.st.next_reauth_frame = frame_ + reauth_period_;
        if (u.st.state == AuthState::verifying) set_state(u, AuthState::granted);
      } else {
        set_state(u, AuthState::denied);
      }
      break;
    }
    case e2::MessageKind::SliceControl:
      apply_slices(std::get<e2::SliceControlBody>(msg.payload));
      break;
    default:
      break;
  }
}

bool Cell::admitted(const Ue& u) const {
  if (!ztran_) return u.st.attached;
  return u.st.slice.has_value() && u.st.state != AuthState::denied;
}

bool Cell::reporting(const Ue& u) const {
  if (!ztran_ || !report_period_ms_) return false;
  if (u.st.state != AuthState::granted && u.st.state != AuthState::isolated) return false;
  if (report_filter_ && std::find(report_filter_->begin(), report_filter_->end(), u.st.id) == report_filter_->end()) {
    return false;
  }
  return true;
}

std::uint64_t Cell::slice_capacity_bits(SliceId id) const {
  auto it = slices_.find(id);
  if (it == slices_.end()) return 0;
  return static_cast<std::uint64_t>(
      std::floor(frame_capacity_bits(it->second.mask.popcount(), cfg_.per_prb_rate_mbps) + 1e-9));
}

std::uint64_t Cell::cell_capacity_bits() const {
  return static_cast<std::uint64_t>(std::floor(frame_capacity_bits(cfg_.total_prbs, cfg_.per_prb_rate_mbps) + 1e-9));
}

void Cell::serve(std::deque<Packet>& q, std::uint64_t capacity, double window_start,
                 std::map<UeId, UeFrameStats>& stats, std::map<UeId, std::vector<double>>& latencies) {
  std::uint64_t used = 0;
  while (!q.empty() && used < capacity) {
    Packet& p = q.front();
    const std::uint64_t take = std::min<std::uint64_t>(p.remaining_bits, capacity - used);
    used += take;
    p.remaining_bits -= static_cast<std::uint32_t>(take);
    Ue& u = ues_.at(p.ue);
    u.st.queued_bits -= take;
    stats[p.ue].served_bits += take;
    if (p.remaining_bits == 0) {
      const double done = window_start + cfg_.frame_ms * static_cast<double>(used) / static_cast<double>(capacity);
      latencies[p.ue].push_back(done - p.arrival_ms);
      stats[p.ue].packets_served += 1;
      if (!ztran_) u.st.legacy_arrivals.pop_front();
      q.pop_front();
    }
  }
}

FrameReport Cell::step_frame() {
  const std::uint64_t f = frame_;

  // Frame boundary: downlink decisions take effect before any service.
  auto staged = std::move(staged_);
  staged_.clear();
  for (const auto& m : staged) apply(m);
  for (auto& [id, u] : ues_) {
    if (u.st.state != AuthState::granted && u.st.state != AuthState::isolated) continue;
    const std::string what = "UE " + to_string(id) + " is " + std::string(to_string(u.st.state));
    if (!u.st.slice) throw SchedulerInvariantError(what + " but unbound");
    const SliceKind want = u.st.state == AuthState::granted ? SliceKind::normal : SliceKind::restricted;
    if (slices_.at(*u.st.slice).kind != want) {
      throw SchedulerInvariantError(what + " but bound to a " + std::string(to_string(slices_.at(*u.st.slice).kind)) +
                                    " slice");
    }
  }

  if (ztran_) {
    for (auto& [id, u] : ues_) {
      if (u.st.state != AuthState::granted || !u.st.material || u.st.reauth_pending) continue;
      if (f < u.st.next_reauth_frame) continue;
      const auto blob = auth::make_blob(u.st.material->token, id, cell_, e2_, *u.st.slice, u.st.material->secret,
                                        u.st.material->credentials);
      send(e2::AuthRequestBody{std::vector<std::uint8_t>(blob.begin(), blob.end())});
      u.st.reauth_pending = true;
    }
  }

  std::map<UeId, UeFrameStats> stats;
  std::map<UeId, std::vector<double>> latencies;
  std::vector<Packet> legacy_new;
  const std::uint32_t bits_per_packet_unit = 8;
  for (auto& [id, u] : ues_) {
    auto& s = stats[id];
    s.ue = id;
    const auto times = u.traffic.arrivals(f, cfg_.frame_ms);
    if (!admitted(u)) continue;
    const std::uint32_t size = bits_per_packet_unit * u.traffic.model().packet_size_bytes;
    for (double t : times) {
      Packet p{id, t, size, size};
      if (ztran_) {
        u.st.queue.push_back(p);
      } else {
        legacy_new.push_back(p);
      }
      u.st.queued_bits += size;
      s.offered_bits += size;
    }
  }
  if (!ztran_) {
    // One shared FIFO ordered by arrival time; ties keep UE order.
    std::stable_sort(legacy_new.begin(), legacy_new.end(),
                     [](const Packet& a, const Packet& b) { return a.arrival_ms < b.arrival_ms; });
    for (const auto& p : legacy_new) {
      shared_queue_.push_back(p);
      ues_.at(p.ue).st.legacy_arrivals.push_back(p.arrival_ms);
    }
  }

  const double window_start = static_cast<double>(f + 1) * cfg_.frame_ms;
  if (ztran_) {
    for (auto& [id, u] : ues_) {
      if (!admitted(u)) continue;
      const std::uint64_t cap = slice_capacity_bits(*u.st.slice);
      stats[id].capacity_bits = cap;
      if (cap > 0) serve(u.st.queue, cap, window_start, stats, latencies);
    }
  } else {
    const std::uint64_t cap = cell_capacity_bits();
    for (auto& [id, u] : ues_) stats[id].capacity_bits = cap;
    serve(shared_queue_, cap, window_start, stats, latencies);
  }

  FrameReport report;
  report.frame_index = f;
  const double window_end = window_start + cfg_.frame_ms;
  for (auto& [id, u] : ues_) {
    UeFrameStats s = stats[id];
    s.queue_bytes = (u.st.queued_bits + 7) / 8;
    s.state = u.st.state;
    s.slice = u.st.slice;
    const auto& lat = latencies[id];
    if (!lat.empty()) {
      double sum = 0.0;
      for (double l : lat) sum += l;
      s.mean_latency_ms = sum / static_cast<double>(lat.size());
    }
    if (ztran_ && !u.st.queue.empty()) s.hol_latency_ms = window_end - u.st.queue.front().arrival_ms;
    if (!ztran_ && !u.st.legacy_arrivals.empty()) s.hol_latency_ms = window_end - u.st.legacy_arrivals.front();

    if (reporting(u)) {
      u.st.window_frames += 1;
      u.st.window_served_bits += s.served_bits;
      u.st.window_offered_bits += s.offered_bits;
      u.st.window_packets += s.packets_served;
      if (u.st.window_frames * cfg_.frame_ms >= *report_period_ms_) {
        send(e2::KpmIndicationBody{collect_kpm(id)});
      }
    }
    report.ues.push_back(s);
  }
  ++frame_;
  return report;
}

KpmReport Cell::collect_kpm(UeId id) {
  Ue& u = get(id);
  const double period_s = static_cast<double>(std::max<std::uint64_t>(1, u.st.window_frames) * cfg_.frame_ms) / 1000.0;
  auto draw = [&](const Gaussian& g) {
    return g.std > 0.0 ? std::normal_distribution<double>(g.mean, g.std)(u.radio_rng) : g.mean;
  };
  KpmReport r;
  r.ue = id;
  r.cell = cell_;
  r.seq = ++u.st.kpm_seq;
  r.snr_db = std::clamp(draw(u.st.radio.snr_db), -20.0, 50.0);
  r.cqi = static_cast<std::uint8_t>(std::clamp(std::lround(draw(u.st.radio.cqi)), 0l, 15l));
  r.tx_power_dbm = std::clamp(draw(u.st.radio.tx_power_dbm), -40.0, 23.0);
  r.tx_packets = u.st.window_packets;
  r.throughput_mbps = static_cast<double>(u.st.window_served_bits) / period_s / 1e6;
  r.offered_mbps = static_cast<double>(u.st.window_offered_bits) / period_s / 1e6;
  u.st.window_frames = 0;
  u.st.window_served_bits = 0;
  u.st.window_offered_bits = 0;
  u.st.window_packets = 0;
  return r;
}

std::vector<std::vector<std::uint8_t>> Cell::take_uplink() {
  std::vector<std::vector<std::uint8_t>> out;
  out.swap(outbox_);
  return out;
}

}  // namespace ztran::ran
