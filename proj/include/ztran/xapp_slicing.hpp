#pragma once

// Slice lifecycle. The layout is recomputed from scratch on every change:
//
//   [mission-critical reserved][commercial equal split ...][verification ...][restricted]
//   PRB 0                                                               highest PRB
//
// All isolated UEs share one restricted slice, so isolating another UE never
// adds a slice.

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "ztran/core_model.hpp"
#include "ztran/e2_interface.hpp"
#include "ztran/ric_core.hpp"

namespace ztran::slicing {

struct RestrictedPolicy {
  std::uint32_t budget_prbs = 1;  // placed on the highest-index PRBs
};

struct SlicingConfig {
  std::uint32_t total_prbs = kDefaultTotalPrbs;
  std::uint32_t verification_budget_prbs = 2;
  RestrictedPolicy restricted;
};

struct UePriority {
  Priority priority = Priority::commercial;
  std::uint32_t reserved_prbs = 0;  // mission_critical only
};

enum class ChangeCause { grant, verify, isolate, release, reauth_revoke };
std::string_view to_string(ChangeCause c);
std::optional<ChangeCause> change_cause_from_string(std::string_view s);

struct SliceChange {
  std::uint64_t frame = 0;
  UeId ue;
  std::optional<SliceId> old_slice;
  std::optional<SliceId> new_slice;
  ChangeCause cause = ChangeCause::grant;

  bool operator==(const SliceChange&) const = default;
};

struct SliceTable {
  std::vector<SliceSpec> slices;
  std::map<UeId, SliceId> bindings;
  std::uint64_t epoch = 0;

  const SliceSpec* find(SliceId id) const;
  std::optional<SliceId> binding(UeId ue) const;
  /// The E2 form: full table plus bindings in UeId order.
  e2::SliceControlBody to_control() const;
};

/// Slicing decisions without the RIC plumbing. `frame` is the frame that just
/// completed; changes take effect at the next boundary (epoch = frame + 1).
class SliceManager {
 public:
  explicit SliceManager(SlicingConfig cfg = {});

  void set_priority(UeId ue, UePriority p);

  /// Throws PolicyError when the UE's state does not allow the binding or the
  /// layout does not fit the cell. Re-binding with the same kind is a no-op
  /// that still returns the current table.
  e2::SliceControlBody bind_ue(UeId ue, SliceKind kind, AuthState state, std::uint64_t frame);
  /// nullopt when the UE is already isolated. Throws PolicyError when the UE
  /// holds no normal slice.
  std::optional<e2::SliceControlBody> isolate(UeId ue, std::uint64_t frame);
  /// nullopt when the UE is not bound.
  std::optional<e2::SliceControlBody> release(UeId ue, std::uint64_t frame,
                                              ChangeCause cause = ChangeCause::release);

  const SliceTable& table() const noexcept { return table_; }
  std::optional<SliceKind> kind_of(UeId ue) const;
  std::size_t isolated_count() const;
  const std::vector<SliceChange>& changes() const noexcept { return changes_; }
  const SlicingConfig& config() const noexcept { return cfg_; }

  /// Decision work of the last bind/isolate/release: membership update,
  /// restricted-slice upkeep and one step per non-restricted slice laid out.
  /// Building the E2 message is not counted.
  std::uint64_t last_ops() const noexcept { return last_ops_; }

 private:
  struct Member {
    SliceKind kind = SliceKind::normal;
    SliceId slice;
  };

  SliceId allocate_id() const;
  void relayout(std::uint64_t frame);
  void log(std::uint64_t frame, UeId ue, std::optional<SliceId> from, std::optional<SliceId> to,
           ChangeCause cause);

  SlicingConfig cfg_;
  std::map<UeId, UePriority> priorities_;
  std::map<UeId, Member> members_;
  std::optional<SliceId> restricted_id_;
  mutable std::uint16_t next_id_ = 1;
  SliceTable table_;
  std::vector<SliceChange> changes_;
  std::uint64_t last_ops_ = 0;
};

/// xApp wrapper. Topics consumed:
///   slicing.bind     {ue, kind: "normal" | "verification"}
///   slicing.release  {ue, cause: "release" | "reauth_revoke"}
///   intrusion.flag   {ue, window_used, offending: [...]}
class SlicingXapp : public ric::Xapp {
 public:
  static constexpr const char* kName = "ztran-slicing";

  explicit SlicingXapp(SlicingConfig cfg, std::map<UeId, UePriority> priorities = {});

  std::string name() const override { return kName; }
  void on_init(ric::RicContext& ctx) override;
  void on_internal(ric::RicContext& ctx, const ric::XappMessage& msg) override;

  const SliceManager& manager() const noexcept { return manager_; }
  /// Every SliceControl sent, in order.
  const std::vector<e2::SliceControlBody>& emitted() const noexcept { return emitted_; }

 private:
  void emit(ric::RicContext& ctx, e2::SliceControlBody body);

  SliceManager manager_;
  std::vector<e2::SliceControlBody> emitted_;
};

}  // namespace ztran::slicing
