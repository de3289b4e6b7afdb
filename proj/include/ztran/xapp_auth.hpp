#pragma once

// Multi-factor service authentication.
//
// Factors: possession (a per-transaction random token), knowledge (the shared
// secret keying the blob tag) and one or more inherence credentials, which are
// folded into the tag input but never sent. An authentication blob is
//
//   token(16) | ue_id(8) | cell_id(4) | e2_id(4) | slice_id(2) | tag(32)
//
// with tag = HMAC-SHA256(secret, first 34 bytes | credential_1 | ... ).
// A RAN attests itself with the same layout, zero token, UE id 0 and no
// credentials.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ztran/core_model.hpp"
#include "ztran/e2_interface.hpp"
#include "ztran/keyed_tag.hpp"
#include "ztran/ric_core.hpp"

namespace ztran::auth {

inline constexpr std::size_t kBlobPrefixSize = 34;
inline constexpr UeId kRanAttestationUe{0};

using Blob = std::array<std::uint8_t, e2::kAuthBlobSize>;
using Credential = std::vector<std::uint8_t>;

struct Credentials {
  std::vector<Credential> inherence;

  /// possession + knowledge + inherence
  std::size_t factor_count() const noexcept { return 2 + inherence.size(); }
};

struct AuthConfig {
  std::uint32_t verification_budget_prbs = 2;
  std::uint64_t reauth_period_frames = 500;
  std::uint64_t token_expiry_frames = 1000;
  double usage_tolerance = 0.10;
  std::uint64_t verify_delay_frames = 2;
  double per_prb_rate_mbps = 0.24;
};

struct AuthToken {
  e2::Token token{};
  UeId ue;
  std::uint64_t issued_frame = 0;
  std::uint64_t expiry_frames = 0;

  bool expired_at(std::uint64_t frame) const noexcept { return frame >= issued_frame + expiry_frames; }
  bool operator==(const AuthToken&) const = default;
};

struct BlobFields {
  e2::Token token{};
  UeId ue;
  CellId cell;
  E2Id e2;
  SliceId slice;
  Tag32 tag{};
};

struct AuthDecision {
  UeId ue;
  AuthOutcome outcome = AuthOutcome::denied;
  AuthReason reason = AuthReason::bad_tag;

  bool operator==(const AuthDecision&) const = default;
};

/// Decision plus, on a grant, the token for the UE's next transaction.
struct AuthResult {
  AuthDecision decision;
  std::optional<AuthToken> next_token;
};

Blob make_blob(const e2::Token& token, UeId ue, CellId cell, E2Id e2, SliceId slice,
               std::span<const std::uint8_t> secret, const Credentials& creds);
Blob make_ran_blob(CellId cell, E2Id e2, std::span<const std::uint8_t> secret);
/// nullopt when the length is not the fixed blob size.
std::optional<BlobFields> parse_blob(std::span<const std::uint8_t> blob);

/// Policy decision point. All persistent state lives in the SDL "auth"
/// namespace; decisions are audit-logged.
class AuthService {
 public:
  AuthService(ric::Sdl& sdl, ric::AuditLog& audit, std::vector<std::uint8_t> secret,
              AuthConfig cfg, std::uint64_t seed);

  void register_ue(UeId ue, const Credentials& creds);
  std::optional<Credentials> credentials(UeId ue) const;

  /// New random token for the UE; any previous token stops verifying.
  AuthToken issue_token(UeId ue, std::uint64_t frame);
  std::optional<AuthToken> current_token(UeId ue) const;

  bool verify_ran(CellId cell, E2Id e2, std::span<const std::uint8_t> ran_tag, std::uint64_t frame);
  bool ran_verified(CellId cell, E2Id e2) const;

  /// Initial authentication of a blob carried over the verified pair
  /// (via_cell, via_e2).
  AuthResult verify_ue(std::span<const std::uint8_t> blob, CellId via_cell, E2Id via_e2,
                       std::uint64_t frame);

  /// Periodic re-authentication: the blob carries the UE's current slice id
  /// and the UE's served rate since the last re-auth must fit the slice.
  AuthResult periodic_reauth(std::span<const std::uint8_t> blob, CellId via_cell, E2Id via_e2,
                             std::uint64_t frame);

  /// Accumulates RAN-reported served throughput against the slice capacity
  /// the UE held when the report was produced.
  void record_usage(UeId ue, double throughput_mbps, std::size_t slice_prbs);

  void set_state(UeId ue, AuthState state);
  std::optional<AuthState> state(UeId ue) const;

  const AuthConfig& config() const noexcept { return cfg_; }
  /// Primitive steps spent by the most recent verify_ue / periodic_reauth.
  std::uint64_t last_ops() const noexcept { return last_ops_; }

 private:
  AuthResult verify(std::span<const std::uint8_t> blob, CellId via_cell, E2Id via_e2,
                    std::uint64_t frame, bool reauth);
  AuthResult finish(UeId ue, AuthOutcome outcome, AuthReason reason, std::uint64_t frame);

  ric::Sdl* sdl_;
  ric::AuditLog* audit_;
  std::vector<std::uint8_t> secret_;
  AuthConfig cfg_;
  std::mt19937_64 rng_;
  std::uint64_t last_ops_ = 0;
};

/// xApp wrapper: consumes AuthRequest and KpmIndication, drives the
/// verification-slice / grant / deny / revoke workflow through xapp_slicing.
class AuthXapp : public ric::Xapp {
 public:
  static constexpr const char* kName = "ztran-auth";

  AuthXapp(std::vector<std::uint8_t> secret, AuthConfig cfg, std::uint64_t seed,
           std::map<UeId, Credentials> id_store);

  std::string name() const override { return kName; }
  void on_init(ric::RicContext& ctx) override;
  void on_e2(ric::RicContext& ctx, const e2::Message& msg) override;
  void on_frame(ric::RicContext& ctx, std::uint64_t frame) override;

  /// Out-of-band provisioning of a UE's first token (the possession factor
  /// handed to the subscriber). Only valid after registration.
  AuthToken provision(UeId ue);
  AuthService& service() { return *service_; }

 private:
  struct Pending {
    std::vector<std::uint8_t> blob;
    CellId cell;
    E2Id e2;
    std::uint64_t due_frame = 0;
  };

  void handle_auth_request(ric::RicContext& ctx, const e2::Message& msg);
  void respond(ric::RicContext& ctx, const AuthResult& result);

  std::vector<std::uint8_t> secret_;
  AuthConfig cfg_;
  std::uint64_t seed_;
  std::map<UeId, Credentials> id_store_;
  std::optional<AuthService> service_;
  ric::RicContext* ctx_ = nullptr;
  std::map<UeId, Pending> pending_;
};

}  // namespace ztran::auth
