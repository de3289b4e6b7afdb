#pragma once

// Shared domain types and resource arithmetic for the cell, the E2 link and
// the xApps. Everything here is a value type or a pure function.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ztran {

template <typename Tag, typename Rep>
struct StrongId {
  using rep_type = Rep;
  Rep value{};

  constexpr auto operator<=>(const StrongId&) const = default;
};

using UeId = StrongId<struct UeIdTag, std::uint64_t>;
using CellId = StrongId<struct CellIdTag, std::uint32_t>;
using E2Id = StrongId<struct E2IdTag, std::uint32_t>;
using SliceId = StrongId<struct SliceIdTag, std::uint16_t>;

/// SliceId 0 is reserved: "no slice" inside authentication blobs.
inline constexpr SliceId kNoSlice{0};

inline constexpr std::uint32_t kDefaultTotalPrbs = 100;
inline constexpr std::uint32_t kFrameMs = 10;

/// Fixed-length PRB bitmap. Bit i set means PRB i belongs to the slice.
class PrbMask {
 public:
  PrbMask() = default;
  explicit PrbMask(std::size_t num_prbs) : bits_(num_prbs, false) {}

  static PrbMask contiguous(std::size_t num_prbs, std::size_t first, std::size_t count);

  std::size_t size() const noexcept { return bits_.size(); }
  bool test(std::size_t prb) const { return bits_.at(prb); }
  void set(std::size_t prb, bool on = true) { bits_.at(prb) = on; }
  std::size_t popcount() const noexcept;
  bool intersects(const PrbMask& other) const;
  /// PRB indices that are set, ascending.
  std::vector<std::size_t> indices() const;

  /// Big-endian bit string: MSB of byte 0 is PRB 0, zero padded to whole bytes.
  std::vector<std::uint8_t> to_bytes() const;
  /// Inverse of to_bytes. Throws std::invalid_argument on a wrong byte count or
  /// nonzero padding bits.
  static PrbMask from_bytes(std::span<const std::uint8_t> bytes, std::size_t num_prbs);
  static constexpr std::size_t byte_length(std::size_t num_prbs) { return (num_prbs + 7) / 8; }

  bool operator==(const PrbMask&) const = default;

 private:
  std::vector<bool> bits_;
};

enum class Priority : std::uint8_t { commercial = 0, mission_critical = 1 };
enum class SliceKind : std::uint8_t { normal = 0, verification = 1, restricted = 2 };

std::string_view to_string(Priority p);
std::string_view to_string(SliceKind k);

struct SliceSpec {
  SliceId id;
  PrbMask mask;
  Priority priority = Priority::commercial;
  SliceKind kind = SliceKind::normal;

  bool operator==(const SliceSpec&) const = default;
};

struct KpmReport {
  UeId ue;
  CellId cell;
  std::uint64_t seq = 0;
  double snr_db = 0.0;
  std::uint8_t cqi = 0;
  /// Packets delivered for the UE during the report period.
  std::uint64_t tx_packets = 0;
  double tx_power_dbm = 0.0;
  /// Served bits over the period, in Mbps.
  double throughput_mbps = 0.0;
  /// Bits the UE pushed into its uplink buffer over the period, in Mbps.
  /// Unlike throughput this is not capped by the UE's slice.
  double offered_mbps = 0.0;

  bool operator==(const KpmReport&) const = default;
};

enum class KpmField : std::uint8_t {
  snr_db,
  cqi,
  tx_packets,
  tx_power_dbm,
  throughput_mbps,
  offered_mbps,
};

inline constexpr std::array<KpmField, 6> kAllKpmFields{
    KpmField::snr_db,       KpmField::cqi,             KpmField::tx_packets,
    KpmField::tx_power_dbm, KpmField::throughput_mbps, KpmField::offered_mbps};

std::string_view to_string(KpmField f);
std::optional<KpmField> kpm_field_from_string(std::string_view name);
double kpm_value(const KpmReport& r, KpmField f);

struct FieldProfile {
  KpmField field;
  double mean = 0.0;
  double std = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const FieldProfile&) const = default;
};

/// Per-field mean/std and the accepted range used for assessment. Only the
/// fields listed are assessed.
struct BehaviorProfile {
  std::vector<FieldProfile> fields;

  const FieldProfile* find(KpmField f) const;
  bool operator==(const BehaviorProfile&) const = default;
};

/// Splits `total_prbs` into `n` budgets whose spread is at most one PRB. The
/// remainder goes to the lowest indices.
std::vector<std::uint32_t> equal_split(std::uint32_t total_prbs, std::uint32_t n);

/// Lays budgets out back to back from PRB 0.
std::vector<PrbMask> budgets_to_masks(std::span<const std::uint32_t> budgets,
                                      std::uint32_t total_prbs);

struct SliceTableReport {
  std::vector<std::pair<SliceId, SliceId>> overlapping;
  std::vector<SliceId> wrong_length;
  std::size_t total_popcount = 0;
  bool over_budget = false;

  bool ok() const noexcept { return overlapping.empty() && wrong_length.empty() && !over_budget; }
  std::string describe() const;
};

SliceTableReport validate_slice_table(std::span<const SliceSpec> slices, std::uint32_t total_prbs);

/// Bits a slice of `prbs` PRBs can carry in one frame.
double frame_capacity_bits(std::size_t prbs, double per_prb_rate_mbps);

std::string to_string(UeId id);

enum class AuthOutcome : std::uint8_t { granted = 0, denied = 1, revoked = 2 };
enum class AuthReason : std::uint8_t {
  ok = 0,
  bad_tag = 1,
  unknown_token = 2,
  ran_unverified = 3,
  expired = 4,
  slice_mismatch = 5,
};

std::string_view to_string(AuthOutcome o);
std::string_view to_string(AuthReason r);

/// Access state of a UE as enforced on the RAN side.
enum class AuthState : std::uint8_t { unauthenticated, verifying, granted, denied, isolated };

std::string_view to_string(AuthState s);
std::optional<AuthState> auth_state_from_string(std::string_view s);

}  // namespace ztran
