#pragma once

// Compact binary framing for RAN <-> RIC traffic.
//
// Frame layout (all integers big-endian):
//   u32 total_length   length of the whole frame including this field
//   u8  kind           MessageKind
//   u32 cell
//   u32 e2
//   u64 seq
//   ... body, fields in declaration order of the body struct
//
// Reals are IEEE-754 binary64 written as their u64 bit pattern. PRB masks use
// PrbMask::to_bytes and are preceded by their PRB count (u16).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ztran/core_model.hpp"

namespace ztran::e2 {

enum class MessageKind : std::uint8_t {
  AuthRequest = 0,
  AuthResponse = 1,
  KpmIndication = 2,
  SliceControl = 3,
  SubscriptionRequest = 4,
  SubscriptionAck = 5,
};

inline constexpr std::size_t kNumKinds = 6;
inline constexpr std::size_t kHeaderSize = 21;
inline constexpr std::size_t kAuthBlobSize = 66;
inline constexpr std::size_t kTokenSize = 16;

using Token = std::array<std::uint8_t, kTokenSize>;

std::string_view to_string(MessageKind k);
/// RAN -> RIC kinds. The rest travel RIC -> RAN.
bool is_uplink(MessageKind k);

struct AuthRequestBody {
  std::vector<std::uint8_t> blob;
  bool operator==(const AuthRequestBody&) const = default;
};

/// Decision sent back to the RAN. On a grant `token` carries the token to use
/// for the UE's next authentication transaction; otherwise it is all zero.
struct AuthResponseBody {
  UeId ue;
  AuthOutcome outcome = AuthOutcome::denied;
  AuthReason reason = AuthReason::bad_tag;
  Token token{};
  bool operator==(const AuthResponseBody&) const = default;
};

struct KpmIndicationBody {
  KpmReport report;
  bool operator==(const KpmIndicationBody&) const = default;
};

struct Binding {
  UeId ue;
  SliceId slice;
  bool operator==(const Binding&) const = default;
};

struct SliceControlBody {
  std::vector<Binding> bindings;
  std::vector<SliceSpec> slices;
  bool operator==(const SliceControlBody&) const = default;
};

struct SubscriptionRequestBody {
  std::uint32_t report_period_ms = 100;
  /// nullopt subscribes to every UE.
  std::optional<std::vector<UeId>> ue_filter;
  bool operator==(const SubscriptionRequestBody&) const = default;
};

struct SubscriptionAckBody {
  std::uint32_t report_period_ms = 100;
  bool operator==(const SubscriptionAckBody&) const = default;
};

/// Alternative index == MessageKind value.
using Payload = std::variant<AuthRequestBody, AuthResponseBody, KpmIndicationBody,
                             SliceControlBody, SubscriptionRequestBody, SubscriptionAckBody>;

struct Message {
  CellId cell;
  E2Id e2;
  std::uint64_t seq = 0;
  Payload payload;

  MessageKind kind() const noexcept { return static_cast<MessageKind>(payload.index()); }
  bool operator==(const Message&) const = default;
};

/// Describes the first payload invariant the message breaks, if any.
std::optional<std::string> check_invariants(const Message& msg);

/// Throws EncodeError when check_invariants fails.
std::vector<std::uint8_t> encode(const Message& msg);

/// Throws DecodeError naming the byte offset of the problem.
Message decode(std::span<const std::uint8_t> bytes);

/// One direction of an E2 association; stamps outgoing messages with a
/// strictly increasing sequence number.
class Connection {
 public:
  Connection(CellId cell, E2Id e2) : cell_(cell), e2_(e2) {}

  Message make(Payload payload) { return Message{cell_, e2_, next_seq_++, std::move(payload)}; }
  CellId cell() const noexcept { return cell_; }
  E2Id e2() const noexcept { return e2_; }
  std::uint64_t next_seq() const noexcept { return next_seq_; }

 private:
  CellId cell_;
  E2Id e2_;
  std::uint64_t next_seq_ = 1;
};

std::string to_hex(std::span<const std::uint8_t> bytes);
/// Accepts whitespace and '#' comments between byte pairs.
std::vector<std::uint8_t> from_hex(std::string_view text);

}  // namespace ztran::e2
