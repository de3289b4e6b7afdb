#include <cmath>

#include "doctest.h"
#include "ztran/errors.hpp"
#include "ztran/ran_sim.hpp"

using namespace ztran;
using namespace ztran::ran;

namespace {

TrafficModel cbr(double mbps) {
  TrafficModel t;
  t.kind = TrafficKind::cbr;
  t.rate_mbps = mbps;
  return t;
}

e2::SliceControlBody whole_cell(std::vector<UeId> ues, std::uint32_t prbs = 100) {
  e2::SliceControlBody b;
  b.slices.push_back(SliceSpec{SliceId{1}, PrbMask::contiguous(100, 0, prbs)});
  for (UeId u : ues) b.bindings.push_back({u, SliceId{1}});
  return b;
}

// Plays the RIC side: grants the UE, binds it and subscribes to KPM.
struct Downlink {
  e2::Connection conn{CellId{1}, E2Id{1}};
  void send(Cell& c, e2::Payload p) { c.receive(e2::encode(conn.make(std::move(p)))); }
};

UeAuthMaterial material() {
  UeAuthMaterial m;
  m.secret = {'k'};
  m.credentials.inherence = {{'c'}};
  return m;
}

}  // namespace

TEST_CASE("a full 100-PRB slice carries 240000 bits per frame") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(0.0), RadioProfile{});
  cell.apply_slices(whole_cell({UeId{1}}));
  CHECK(cell.slice_capacity_bits(SliceId{1}) == 240000);
  CHECK(cell.cell_capacity_bits() == 240000);
  cell.inject_backlog(UeId{1}, 1'000'000, 0.0);
  const auto r = cell.step_frame();
  CHECK(r.find(UeId{1})->served_bits == 240000);
  CHECK(r.find(UeId{1})->queue_bytes == (1'000'000 - 240000) / 8);
  // Partial packets carry over: 240000 / 12000 = 20 whole packets.
  CHECK(r.find(UeId{1})->packets_served == 20);
}

TEST_CASE("one PRB carries 2400 bits; a packet spans several frames") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(0.0), RadioProfile{});
  cell.apply_slices(whole_cell({UeId{1}}, 1));
  cell.inject_backlog(UeId{1}, 12000, 0.0);
  for (int f = 0; f < 4; ++f) {
    const auto r = cell.step_frame();
    CHECK(r.find(UeId{1})->served_bits == 2400);
    CHECK(r.find(UeId{1})->packets_served == 0);
  }
  const auto last = cell.step_frame();
  CHECK(last.find(UeId{1})->packets_served == 1);
  // Served in frames 0..4; frame 4's window closes at 10 * 4 + 20 = 60 ms.
  CHECK(*last.find(UeId{1})->mean_latency_ms == doctest::Approx(60.0));
}

TEST_CASE("an idle UE is served nothing and has no head-of-line delay") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(0.0), RadioProfile{});
  cell.apply_slices(whole_cell({UeId{1}}));
  for (int f = 0; f < 5; ++f) {
    const auto r = cell.step_frame();
    const auto* s = r.find(UeId{1});
    CHECK(s->served_bits == 0);
    CHECK(s->queue_bytes == 0);
    CHECK_FALSE(s->hol_latency_ms);
    CHECK_FALSE(s->mean_latency_ms);
  }
}

TEST_CASE("per-packet latency follows the in-window completion times") {
  // 12 Mbps = ten 12000-bit packets per frame at 0.5, 1.5, ... ms. Served at
  // 240 kbit per 10 ms from the next window: packet i completes 0.5 (i + 1) ms
  // after the window opens, so its latency is 10 - 0.5 i and the mean 7.75.
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(12.0), RadioProfile{});
  cell.apply_slices(whole_cell({UeId{1}}));
  for (int f = 0; f < 3; ++f) {
    const auto r = cell.step_frame();
    CHECK(r.find(UeId{1})->packets_served == 10);
    CHECK(*r.find(UeId{1})->mean_latency_ms == doctest::Approx(7.75));
  }
}

TEST_CASE("unbound UEs generate traffic but are not admitted in ZTRAN mode") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(12.0), RadioProfile{});
  const auto r = cell.step_frame();
  CHECK(r.find(UeId{1})->offered_bits == 0);
  CHECK(r.find(UeId{1})->served_bits == 0);
}

TEST_CASE("legacy shared FIFO backs up under a 40 Mbps flood") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, false, 1);
  TrafficModel flood;
  flood.kind = TrafficKind::flood;
  flood.rate_mbps = 40.0;
  cell.add_ue(UeId{1}, flood, RadioProfile{});
  cell.add_ue(UeId{2}, cbr(12.0), RadioProfile{});
  CHECK_FALSE(cell.attach_ue(UeId{1}, {}));
  cell.attach_ue(UeId{2}, {});

  std::uint64_t prev_queue = 0;
  double prev_hol = 0.0;
  std::uint64_t offered = 0, served = 0;
  for (int f = 0; f < 50; ++f) {
    const auto r = cell.step_frame();
    CHECK(r.total_served_bits() <= 240000);
    for (const auto& s : r.ues) {
      offered += s.offered_bits;
      served += s.served_bits;
    }
    const std::uint64_t q = r.find(UeId{1})->queue_bytes + r.find(UeId{2})->queue_bytes;
    CHECK(q > prev_queue);
    CHECK(q * 8 == offered - served);
    const double hol = *r.find(UeId{2})->hol_latency_ms;
    CHECK(hol >= prev_hol);
    prev_queue = q;
    prev_hol = hol;
  }
  // 52 Mbps offered into 24 Mbps: about 280 kbit more backlog per frame.
  CHECK(static_cast<double>(prev_queue * 8) == doctest::Approx(50 * 280000.0).epsilon(0.01));
  CHECK(prev_hol > 250.0);
}

TEST_CASE("KPM reports carry the window's served and offered rate") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(15.0), RadioProfile{});
  REQUIRE(cell.attach_ue(UeId{1}, material()));
  Downlink dl;
  dl.send(cell, e2::SubscriptionRequestBody{100, std::nullopt});
  dl.send(cell, e2::AuthResponseBody{UeId{1}, AuthOutcome::granted, AuthReason::ok, {}});
  dl.send(cell, whole_cell({UeId{1}}));
  cell.take_uplink();

  for (int f = 0; f < 10; ++f) cell.step_frame();
  CHECK(cell.ue(UeId{1}).state == AuthState::granted);
  std::vector<KpmReport> kpm;
  bool acked = false;
  for (const auto& bytes : cell.take_uplink()) {
    const auto m = e2::decode(bytes);
    if (m.kind() == e2::MessageKind::KpmIndication) kpm.push_back(std::get<e2::KpmIndicationBody>(m.payload).report);
    if (m.kind() == e2::MessageKind::SubscriptionAck) acked = true;
  }
  CHECK(acked);
  REQUIRE(kpm.size() == 1);
  CHECK(kpm[0].ue == UeId{1});
  CHECK(kpm[0].throughput_mbps == doctest::Approx(15.0));
  CHECK(kpm[0].offered_mbps == doctest::Approx(15.0));
  CHECK(kpm[0].tx_packets == 125);
  CHECK(kpm[0].cqi <= 15);
}

TEST_CASE("attach rules") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  for (std::uint64_t u = 1; u <= 4; ++u) cell.add_ue(UeId{u}, cbr(1.0), RadioProfile{});
  std::vector<std::uint64_t> seqs;
  for (std::uint64_t u = 1; u <= 4; ++u) {
    const auto m = cell.attach_ue(UeId{u}, material());
    REQUIRE(m);
    seqs.push_back(m->seq);
    CHECK(cell.ue(UeId{u}).state == AuthState::verifying);
  }
  for (std::size_t i = 1; i < seqs.size(); ++i) CHECK(seqs[i] > seqs[i - 1]);
  CHECK_THROWS_AS(cell.attach_ue(UeId{2}, material()), AttachError);
  CHECK_THROWS_AS(cell.attach_ue(UeId{9}, material()), AttachError);
  CHECK(cell.take_uplink().size() == 4);
}

TEST_CASE("denied UEs are not admitted; granted UEs without a slice break the scheduler invariant") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(12.0), RadioProfile{});
  cell.add_ue(UeId{2}, cbr(12.0), RadioProfile{});
  cell.attach_ue(UeId{1}, material());
  cell.attach_ue(UeId{2}, material());
  Downlink dl;
  dl.send(cell, e2::AuthResponseBody{UeId{1}, AuthOutcome::denied, AuthReason::bad_tag, {}});
  dl.send(cell, whole_cell({UeId{1}}));
  const auto r = cell.step_frame();
  CHECK(cell.ue(UeId{1}).state == AuthState::denied);
  CHECK(r.find(UeId{1})->served_bits == 0);

  dl.send(cell, e2::AuthResponseBody{UeId{2}, AuthOutcome::granted, AuthReason::ok, {}});
  CHECK_THROWS_AS(cell.step_frame(), SchedulerInvariantError);
}

TEST_CASE("a restricted binding isolates a granted UE and caps it at the slice rate") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  TrafficModel flood;
  flood.kind = TrafficKind::flood;
  flood.rate_mbps = 40.0;
  cell.add_ue(UeId{1}, flood, RadioProfile{});
  cell.attach_ue(UeId{1}, material());
  Downlink dl;
  dl.send(cell, e2::AuthResponseBody{UeId{1}, AuthOutcome::granted, AuthReason::ok, {}});
  dl.send(cell, whole_cell({UeId{1}}));
  cell.step_frame();
  e2::SliceControlBody restricted;
  restricted.slices.push_back(SliceSpec{SliceId{2}, PrbMask::contiguous(100, 99, 1), Priority::commercial,
                                        SliceKind::restricted});
  restricted.bindings.push_back({UeId{1}, SliceId{2}});
  dl.send(cell, restricted);
  for (int f = 0; f < 5; ++f) {
    const auto r = cell.step_frame();
    CHECK(r.find(UeId{1})->state == AuthState::isolated);
    CHECK(r.find(UeId{1})->served_bits == 2400);
  }
}

TEST_CASE("overlapping slice tables are rejected by the enforcement point") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  e2::SliceControlBody bad;
  bad.slices.push_back(SliceSpec{SliceId{1}, PrbMask::contiguous(100, 0, 60)});
  bad.slices.push_back(SliceSpec{SliceId{2}, PrbMask::contiguous(100, 50, 50)});
  CHECK_THROWS_AS(cell.apply_slices(bad), SchedulerInvariantError);
}

TEST_CASE("traffic source conserves offered bits across frames") {
  TrafficSource src(cbr(1.0), std::mt19937_64(1));
  std::size_t packets = 0;
  for (std::uint64_t f = 0; f < 120; ++f) {
    const auto a = src.arrivals(f, 10);
    for (double t : a) {
      CHECK(t >= 10.0 * f);
      CHECK(t < 10.0 * (f + 1));
    }
    packets += a.size();
  }
  // 1 Mbps for 1.2 s = 1.2 Mbit = 100 packets of 12000 bits.
  CHECK(packets == 100);
}

TEST_CASE("a granted UE left on its verification slice breaks the scheduler invariant") {
  Cell cell(CellConfig{}, CellId{1}, E2Id{1}, true, 1);
  cell.add_ue(UeId{1}, cbr(1.0), RadioProfile{});
  cell.attach_ue(UeId{1}, material());
  e2::SliceControlBody verify;
  verify.slices.push_back(SliceSpec{SliceId{3}, PrbMask::contiguous(100, 98, 2), Priority::commercial,
                                    SliceKind::verification});
  verify.bindings.push_back({UeId{1}, SliceId{3}});
  Downlink dl;
  dl.send(cell, verify);
  CHECK_NOTHROW(cell.step_frame());
  dl.send(cell, e2::AuthResponseBody{UeId{1}, AuthOutcome::granted, AuthReason::ok, {}});
  CHECK_THROWS_AS(cell.step_frame(), SchedulerInvariantError);
}
