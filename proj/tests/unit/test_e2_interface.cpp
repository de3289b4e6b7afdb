#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "generators.hpp"
#include "ztran/e2_interface.hpp"
#include "ztran/errors.hpp"

using namespace ztran;
using namespace ztran::e2;

namespace {

std::vector<std::uint8_t> golden(const std::string& name) {
  std::ifstream f(std::string(ZTRAN_GOLDEN_DIR) + "/" + name + ".hex");
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_hex(ss.str());
}

std::size_t decode_error_offset(const std::vector<std::uint8_t>& bytes) {
  try {
    decode(bytes);
  } catch (const DecodeError& e) {
    return e.offset();
  }
  FAIL("decode accepted a malformed frame");
  return 0;
}

}  // namespace

TEST_CASE("golden SubscriptionRequest") {
  const auto bytes = golden("subscription_request");
  CHECK(bytes.size() == 26);
  const Message m{CellId{1}, E2Id{1}, 1, SubscriptionRequestBody{100, std::nullopt}};
  CHECK(decode(bytes) == m);
  CHECK(encode(m) == bytes);
}

TEST_CASE("golden SubscriptionAck") {
  const Message m{CellId{1}, E2Id{1}, 2, SubscriptionAckBody{100}};
  CHECK(encode(m) == golden("subscription_ack"));
}

TEST_CASE("golden AuthResponse") {
  const Message m{CellId{1}, E2Id{1}, 3, AuthResponseBody{UeId{4}, AuthOutcome::denied, AuthReason::bad_tag, {}}};
  const auto bytes = golden("auth_response");
  CHECK(encode(m) == bytes);
  CHECK(decode(bytes) == m);
}

TEST_CASE("golden KpmIndication") {
  KpmReport r;
  r.ue = UeId{2};
  r.cell = CellId{1};
  r.seq = 5;
  r.snr_db = 20.0;
  r.cqi = 10;
  r.tx_packets = 125;
  r.tx_power_dbm = 10.0;
  r.throughput_mbps = 15.0;
  r.offered_mbps = 15.0;
  const Message m{CellId{1}, E2Id{1}, 7, KpmIndicationBody{r}};
  const auto bytes = golden("kpm_indication");
  CHECK(encode(m) == bytes);
  CHECK(decode(bytes) == m);
}

TEST_CASE("golden SliceControl") {
  SliceControlBody b;
  b.bindings.push_back({UeId{1}, SliceId{5}});
  b.slices.push_back(SliceSpec{SliceId{5}, PrbMask::contiguous(100, 0, 100)});
  const Message m{CellId{1}, E2Id{1}, 1, b};
  const auto bytes = golden("slice_control");
  CHECK(encode(m) == bytes);
  CHECK(decode(bytes) == m);
}

TEST_CASE("golden AuthRequest decodes to a 66-byte blob") {
  const auto bytes = golden("auth_request");
  const auto m = decode(bytes);
  REQUIRE(m.kind() == MessageKind::AuthRequest);
  const auto& blob = std::get<AuthRequestBody>(m.payload).blob;
  CHECK(blob.size() == kAuthBlobSize);
  CHECK(blob[0] == 0x00);
  CHECK(blob[15] == 0x0f);
  CHECK(encode(m) == bytes);
}

TEST_CASE("decode errors name the offending offset") {
  const auto good = golden("kpm_indication");

  SUBCASE("truncated") {
    auto b = good;
    b.resize(30);
    CHECK(decode_error_offset(b) == 30);
  }
  SUBCASE("trailing byte") {
    auto b = good;
    b.push_back(0);
    CHECK(decode_error_offset(b) == good.size());
  }
  SUBCASE("length field below header size") {
    auto b = good;
    b[3] = 0x05;
    CHECK(decode_error_offset(b) == 0);
  }
  SUBCASE("unknown kind") {
    auto b = good;
    b[4] = 0x06;
    CHECK(decode_error_offset(b) == 4);
  }
  SUBCASE("cqi out of range fails the body invariants") {
    auto b = good;
    b[kHeaderSize + 8 + 4 + 8 + 8] = 16;
    CHECK(decode_error_offset(b) == kHeaderSize);
  }
  SUBCASE("bad auth outcome byte") {
    auto b = golden("auth_response");
    b[kHeaderSize + 8] = 3;
    CHECK(decode_error_offset(b) == kHeaderSize + 8);
  }
  SUBCASE("bad auth reason byte") {
    auto b = golden("auth_response");
    b[kHeaderSize + 9] = 6;
    CHECK(decode_error_offset(b) == kHeaderSize + 9);
  }
  SUBCASE("nonzero padding in a PRB mask") {
    auto b = golden("slice_control");
    b.back() |= 0x01;
    const std::size_t mask_at = b.size() - 13;
    CHECK(decode_error_offset(b) == mask_at);
  }
  SUBCASE("binding to an undeclared slice") {
    auto b = golden("slice_control");
    b[kHeaderSize + 2 + 8 + 1] = 0x06;
    CHECK(decode_error_offset(b) == kHeaderSize);
  }
}

TEST_CASE("encode refuses messages that break payload invariants") {
  CHECK_THROWS_AS(encode(Message{CellId{1}, E2Id{1}, 1, AuthRequestBody{std::vector<std::uint8_t>(65)}}),
                  EncodeError);
  CHECK_THROWS_AS(
      encode(Message{CellId{1}, E2Id{1}, 1, AuthResponseBody{UeId{1}, AuthOutcome::granted, AuthReason::bad_tag, {}}}),
      EncodeError);
  CHECK_THROWS_AS(encode(Message{CellId{1}, E2Id{1}, 1, SubscriptionRequestBody{15, std::nullopt}}), EncodeError);

  SliceControlBody overlap;
  overlap.slices.push_back(SliceSpec{SliceId{1}, PrbMask::contiguous(100, 0, 60)});
  overlap.slices.push_back(SliceSpec{SliceId{2}, PrbMask::contiguous(100, 50, 50)});
  CHECK_THROWS_AS(encode(Message{CellId{1}, E2Id{1}, 1, overlap}), EncodeError);
}

TEST_CASE("round trip property over random messages") {
  std::mt19937_64 rng(2024);
  std::array<int, kNumKinds> seen{};
  for (int i = 0; i < 10000; ++i) {
    const auto m = testing::random_message(rng);
    ++seen[static_cast<std::size_t>(m.kind())];
    const auto bytes = encode(m);
    REQUIRE(bytes.size() >= kHeaderSize);
    const std::uint32_t len = (std::uint32_t{bytes[0]} << 24) | (bytes[1] << 16) | (bytes[2] << 8) | bytes[3];
    CHECK(len == bytes.size());
    CHECK(bytes[4] == static_cast<std::uint8_t>(m.kind()));
    const auto back = decode(bytes);
    REQUIRE(back == m);
    CHECK(encode(back) == bytes);
  }
  for (int n : seen) CHECK(n > 1000);
}

TEST_CASE("connection stamps strictly increasing sequence numbers") {
  Connection c(CellId{3}, E2Id{9});
  std::uint64_t prev = 0;
  for (int i = 0; i < 5; ++i) {
    const auto m = c.make(SubscriptionAckBody{100});
    CHECK(m.seq > prev);
    CHECK(m.cell == CellId{3});
    CHECK(m.e2 == E2Id{9});
    prev = m.seq;
  }
}

TEST_CASE("hex helpers") {
  const std::vector<std::uint8_t> b{0x00, 0xab, 0x10};
  CHECK(to_hex(b) == "00ab10");
  CHECK(from_hex("00 ab # comment\n 10") == b);
}
