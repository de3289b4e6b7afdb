#pragma once

// Single-cell RAN model advancing in 10 ms frames.
//
// Timing: packets generated during frame f arrive spread over
// [10f, 10f + 10) ms and are scheduled in the transmission window
// [10f + 10, 10f + 20) ms. Within a window a queue drains at its slice rate,
// so a packet completes at window_start + 10 * (bits served so far) / capacity.
//
// The cell is also the enforcement point: it admits traffic only for UEs bound
// to a slice and changes UE access state only on E2 messages from the RIC.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ztran/core_model.hpp"
#include "ztran/e2_interface.hpp"
#include "ztran/ric_core.hpp"
#include "ztran/xapp_auth.hpp"

namespace ztran::ran {

struct CellConfig {
  std::uint32_t total_prbs = kDefaultTotalPrbs;
  double bandwidth_mhz = 20.0;
  double per_prb_rate_mbps = 0.24;
  std::uint32_t frame_ms = kFrameMs;
};

enum class TrafficKind { cbr, uniform_rate, flood };
std::string_view to_string(TrafficKind k);

struct TrafficModel {
  TrafficKind kind = TrafficKind::uniform_rate;
  double rate_mbps = 0.0;  // cbr, and flood after onset
  double lo_mbps = 10.0;   // uniform_rate, resampled every frame; flood before onset
  double hi_mbps = 20.0;
  std::uint64_t flood_onset_frame = 0;
  std::uint32_t packet_size_bytes = 1500;
};

struct Gaussian {
  double mean = 0.0;
  double std = 0.0;
};

struct RadioProfile {
  Gaussian snr_db{20.0, 2.0};
  Gaussian cqi{10.0, 1.0};
  Gaussian tx_power_dbm{10.0, 2.0};
};

/// Deterministic per-UE packet generator. Fractional packets carry over.
class TrafficSource {
 public:
  TrafficSource(TrafficModel model, std::mt19937_64 rng) : model_(model), rng_(rng) {}

  /// Offered rate for `frame`; draws from the stream for uniform rates.
  double rate_mbps(std::uint64_t frame);
  /// Arrival times (ms) of the packets generated during `frame`.
  std::vector<double> arrivals(std::uint64_t frame, std::uint32_t frame_ms);
  const TrafficModel& model() const noexcept { return model_; }

 private:
  TrafficModel model_;
  std::mt19937_64 rng_;
  double credit_bits_ = 0.0;
};

struct Packet {
  UeId ue;
  double arrival_ms = 0.0;
  std::uint32_t bits = 0;
  std::uint32_t remaining_bits = 0;
};

struct UeFrameStats {
  UeId ue;
  std::uint64_t served_bits = 0;
  std::uint64_t queue_bytes = 0;
  std::optional<double> hol_latency_ms;
  std::optional<double> mean_latency_ms;
  std::uint32_t packets_served = 0;
  std::uint64_t offered_bits = 0;
  /// Per-frame bound for this UE: its slice capacity, or the cell's in legacy mode.
  std::uint64_t capacity_bits = 0;
  AuthState state = AuthState::unauthenticated;
  std::optional<SliceId> slice;
};

struct FrameReport {
  std::uint64_t frame_index = 0;
  std::vector<UeFrameStats> ues;

  std::uint64_t total_served_bits() const;
  const UeFrameStats* find(UeId ue) const;
};

/// What the UE side holds to build authentication blobs.
struct UeAuthMaterial {
  std::vector<std::uint8_t> secret;
  auth::Credentials credentials;
  e2::Token token{};
};

struct UeState {
  UeId id;
  RadioProfile radio;
  bool attached = false;
  AuthState state = AuthState::unauthenticated;
  std::optional<SliceId> slice;
  std::deque<Packet> queue;  // ZTRAN mode
  std::uint64_t queued_bits = 0;
  std::deque<double> legacy_arrivals;  // legacy mode: this UE's packets in the shared FIFO
  std::optional<UeAuthMaterial> material;
  std::uint64_t next_reauth_frame = 0;
  bool reauth_pending = false;
  // Current KPM window.
  std::uint64_t window_frames = 0;
  std::uint64_t window_served_bits = 0;
  std::uint64_t window_offered_bits = 0;
  std::uint64_t window_packets = 0;
  std::uint64_t kpm_seq = 0;
};

class Cell {
 public:
  /// `audit` receives the enforcement point's state transitions; may be null.
  Cell(CellConfig cfg, CellId cell, E2Id e2, bool ztran, std::uint64_t seed, ric::AuditLog* audit = nullptr,
       std::uint64_t reauth_period_frames = 500);

  /// Makes the UE known to the cell. Its traffic is generated from frame 0
  /// whether or not it is admitted, so arrivals never depend on the mode.
  void add_ue(UeId ue, TrafficModel traffic, RadioProfile radio);

  /// ZTRAN mode: sends the UE's AuthRequest and moves it to verifying.
  /// Legacy mode: admits the UE directly and returns nullopt.
  /// Throws AttachError on a second attach or an unknown UE.
  std::optional<e2::Message> attach_ue(UeId ue, UeAuthMaterial material);
  /// Sends the RAN's own attestation request.
  e2::Message attest(std::span<const std::uint8_t> secret);

  /// Downlink E2 frame from the RIC; applied at the next frame boundary.
  void receive(std::span<const std::uint8_t> frame);
  /// Applies a slice table immediately, as a SliceControl would.
  void apply_slices(const e2::SliceControlBody& body);
  /// Puts `bits` of backlog (whole packets) in front of the UE's new traffic.
  void inject_backlog(UeId ue, std::uint64_t bits, double arrival_ms);

  /// Applies staged downlink, sends due re-authentications, enqueues this
  /// frame's arrivals, serves, emits due KPM reports. Throws
  /// SchedulerInvariantError when a granted UE holds no normal slice or an
  /// isolated UE no restricted slice.
  FrameReport step_frame();

  /// Closes the UE's current KPM window into a report.
  KpmReport collect_kpm(UeId ue);

  std::vector<std::vector<std::uint8_t>> take_uplink();

  const UeState& ue(UeId id) const;
  std::vector<UeId> ue_ids() const;
  std::uint64_t frame_index() const noexcept { return frame_; }
  std::uint64_t slice_capacity_bits(SliceId id) const;
  std::uint64_t cell_capacity_bits() const;
  const CellConfig& config() const noexcept { return cfg_; }
  bool ztran() const noexcept { return ztran_; }
  std::optional<std::uint32_t> report_period_ms() const noexcept { return report_period_ms_; }

 private:
  struct Ue {
    UeState st;
    TrafficSource traffic;
    std::mt19937_64 radio_rng;
  };

  Ue& get(UeId id);
  void send(e2::Payload payload);
  void set_state(Ue& u, AuthState to);
  void apply(const e2::Message& msg);
  bool admitted(const Ue& u) const;
  bool reporting(const Ue& u) const;
  void serve(std::deque<Packet>& q, std::uint64_t capacity, double window_start,
             std::map<UeId, UeFrameStats>& stats, std::map<UeId, std::vector<double>>& latencies);

  CellConfig cfg_;
  CellId cell_;
  E2Id e2_;
  bool ztran_;
  std::uint64_t seed_;
  ric::AuditLog* audit_;
  std::uint64_t reauth_period_;
  std::map<UeId, Ue> ues_;
  std::map<SliceId, SliceSpec> slices_;
  std::deque<Packet> shared_queue_;  // legacy mode
  e2::Connection uplink_;
  std::vector<std::vector<std::uint8_t>> outbox_;
  std::vector<e2::Message> staged_;
  std::optional<std::uint32_t> report_period_ms_;
  std::optional<std::vector<UeId>> report_filter_;
  std::uint64_t frame_ = 0;
};

}  // namespace ztran::ran
