#include "ztran/xapp_auth.hpp"

#include <algorithm>

#include "ztran/errors.hpp"
#include "ztran/rng.hpp"
#include "ztran/sdl_keys.hpp"

namespace ztran::auth {
namespace {

using ric::Json;

void put_be(std::uint8_t* out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>(v >> (8 * (n - 1 - i)));
}

std::uint64_t get_be(const std::uint8_t* in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v = (v << 8) | in[i];
  return v;
}

std::array<std::uint8_t, kBlobPrefixSize> blob_prefix(const e2::Token& token, UeId ue, CellId cell,
                                                       E2Id e2, SliceId slice) {
  std::array<std::uint8_t, kBlobPrefixSize> p{};
  std::copy(token.begin(), token.end(), p.begin());
  put_be(p.data() + 16, ue.value, 8);
  put_be(p.data() + 24, cell.value, 4);
  put_be(p.data() + 28, e2.value, 4);
  put_be(p.data() + 32, slice.value, 2);
  return p;
}

Tag32 blob_tag(std::span<const std::uint8_t> prefix, std::span<const std::uint8_t> secret,
               const Credentials& creds) {
  std::vector<std::span<const std::uint8_t>> parts;
  parts.reserve(1 + creds.inherence.size());
  parts.push_back(prefix);
  for (const auto& c : creds.inherence) parts.emplace_back(c);
  return keyed_tag(secret, parts);
}

Json creds_to_json(const Credentials& c) {
  Json arr = Json::array();
  for (const auto& f : c.inherence) arr.push_back(e2::to_hex(f));
  return arr;
}

Credentials creds_from_json(const Json& j) {
  Credentials c;
  for (const auto& f : j) c.inherence.push_back(e2::from_hex(f.get<std::string>()));
  return c;
}

}  // namespace

Blob make_blob(const e2::Token& token, UeId ue, CellId cell, E2Id e2, SliceId slice,
               std::span<const std::uint8_t> secret, const Credentials& creds) {
  const auto prefix = blob_prefix(token, ue, cell, e2, slice);
  const Tag32 tag = blob_tag(prefix, secret, creds);
  Blob blob{};
  std::copy(prefix.begin(), prefix.end(), blob.begin());
  std::copy(tag.begin(), tag.end(), blob.begin() + kBlobPrefixSize);
  return blob;
}

Blob make_ran_blob(CellId cell, E2Id e2, std::span<const std::uint8_t> secret) {
  return make_blob(e2::Token{}, kRanAttestationUe, cell, e2, kNoSlice, secret, Credentials{});
}

std::optional<BlobFields> parse_blob(std::span<const std::uint8_t> blob) {
  if (blob.size() != e2::kAuthBlobSize) return std::nullopt;
  BlobFields f;
  std::copy_n(blob.begin(), 16, f.token.begin());
  f.ue = UeId{get_be(blob.data() + 16, 8)};
  f.cell = CellId{static_cast<std::uint32_t>(get_be(blob.data() + 24, 4))};
  f.e2 = E2Id{static_cast<std::uint32_t>(get_be(blob.data() + 28, 4))};
  f.slice = SliceId{static_cast<std::uint16_t>(get_be(blob.data() + 32, 2))};
  std::copy_n(blob.begin() + kBlobPrefixSize, 32, f.tag.begin());
  return f;
}

AuthService::AuthService(ric::Sdl& sdl, ric::AuditLog& audit, std::vector<std::uint8_t> secret,
                         AuthConfig cfg, std::uint64_t seed)
    : sdl_(&sdl),
      audit_(&audit),
      secret_(std::move(secret)),
      cfg_(cfg),
      rng_(make_stream(seed, "auth.tokens")) {}

void AuthService::register_ue(UeId ue, const Credentials& creds) {
  sdl_->put_json(sdl::kAuth, sdl::ue_key("cred", ue), creds_to_json(creds));
}

std::optional<Credentials> AuthService::credentials(UeId ue) const {
  auto j = sdl_->get_json(sdl::kAuth, sdl::ue_key("cred", ue));
  if (!j) return std::nullopt;
  return creds_from_json(*j);
}

AuthToken AuthService::issue_token(UeId ue, std::uint64_t frame) {
  AuthToken t;
  t.ue = ue;
  t.issued_frame = frame;
  t.expiry_frames = cfg_.token_expiry_frames;
  const std::uint64_t a = rng_();
  const std::uint64_t b = rng_();
  put_be(t.token.data(), a, 8);
  put_be(t.token.data() + 8, b, 8);
  sdl_->put_json(sdl::kAuth, sdl::ue_key("token", ue),
                 {{"token", e2::to_hex(t.token)}, {"issued", frame}, {"expiry_frames", t.expiry_frames}});
  audit_->record(frame * kFrameMs, "auth", "issue_token",
                 {{"frame", frame}, {"ue", ue.value}, {"expires_frame", frame + t.expiry_frames}});
  return t;
}

std::optional<AuthToken> AuthService::current_token(UeId ue) const {
  auto j = sdl_->get_json(sdl::kAuth, sdl::ue_key("token", ue));
  if (!j) return std::nullopt;
  AuthToken t;
  t.ue = ue;
  const auto bytes = e2::from_hex((*j)["token"].get<std::string>());
  std::copy_n(bytes.begin(), t.token.size(), t.token.begin());
  t.issued_frame = (*j)["issued"].get<std::uint64_t>();
  t.expiry_frames = (*j)["expiry_frames"].get<std::uint64_t>();
  return t;
}

bool AuthService::verify_ran(CellId cell, E2Id e2, std::span<const std::uint8_t> ran_tag,
                             std::uint64_t frame) {
  const Blob expected = make_ran_blob(cell, e2, secret_);
  const bool ok = tags_equal(std::span(expected).subspan(kBlobPrefixSize), ran_tag);
  const Json detail = {{"frame", frame}, {"cell", cell.value}, {"e2", e2.value}};
  if (!ok) {
    audit_->record(frame * kFrameMs, "auth", "ran_rejected", detail);
    return false;
  }
  sdl_->put(sdl::kAuth, sdl::ran_key(cell, e2), std::string_view("verified"));
  audit_->record(frame * kFrameMs, "auth", "verified_ran", detail);
  return true;
}

bool AuthService::ran_verified(CellId cell, E2Id e2) const {
  return sdl_->get(sdl::kAuth, sdl::ran_key(cell, e2)).has_value();
}

void AuthService::set_state(UeId ue, AuthState state) {
  sdl_->put(sdl::kAuth, sdl::ue_key("state", ue), to_string(state));
}

std::optional<AuthState> AuthService::state(UeId ue) const {
  auto s = sdl_->get_string(sdl::kAuth, sdl::ue_key("state", ue));
  if (!s) return std::nullopt;
  return auth_state_from_string(*s);
}

void AuthService::record_usage(UeId ue, double throughput_mbps, std::size_t slice_prbs) {
  const auto key = sdl::ue_key("usage", ue);
  Json u = sdl_->get_json(sdl::kAuth, key).value_or(Json{{"sum", 0.0}, {"count", 0}, {"max_capacity_mbps", 0.0}});
  u["sum"] = u["sum"].get<double>() + throughput_mbps;
  u["count"] = u["count"].get<std::uint64_t>() + 1;
  const double cap = static_cast<double>(slice_prbs) * cfg_.per_prb_rate_mbps;
  u["max_capacity_mbps"] = std::max(u["max_capacity_mbps"].get<double>(), cap);
  sdl_->put_json(sdl::kAuth, key, u);
}

AuthResult AuthService::verify_ue(std::span<const std::uint8_t> blob, CellId via_cell, E2Id via_e2,
                                  std::uint64_t frame) {
  return verify(blob, via_cell, via_e2, frame, false);
}

AuthResult AuthService::periodic_reauth(std::span<const std::uint8_t> blob, CellId via_cell,
                                        E2Id via_e2, std::uint64_t frame) {
  return verify(blob, via_cell, via_e2, frame, true);
}

AuthResult AuthService::verify(std::span<const std::uint8_t> blob, CellId via_cell, E2Id via_e2,
                               std::uint64_t frame, bool reauth) {
  last_ops_ = 0;
  if (!ran_verified(via_cell, via_e2)) {
    // Requests relayed by an unverified RAN are ignored, not decided.
    audit_->record(frame * kFrameMs, "auth", "ran_unverified",
                   {{"frame", frame}, {"cell", via_cell.value}, {"e2", via_e2.value}});
    return AuthResult{AuthDecision{UeId{0}, AuthOutcome::denied, AuthReason::ran_unverified}, std::nullopt};
  }
  const auto fields = parse_blob(blob);
  if (!fields) return finish(UeId{0}, AuthOutcome::denied, AuthReason::bad_tag, frame);
  const UeId ue = fields->ue;

  // Subscriber lookup in the ID store.
  ++last_ops_;
  const auto creds = credentials(ue);
  if (!creds) return finish(ue, AuthOutcome::denied, AuthReason::bad_tag, frame);

  // Knowledge (secret) and inherence factors: one tag recomputation folding
  // in every registered credential.
  last_ops_ += 1 + creds->inherence.size();
  const Tag32 expected = blob_tag(blob.first(kBlobPrefixSize), secret_, *creds);
  if (!tags_equal(expected, fields->tag)) {
    return finish(ue, AuthOutcome::denied, AuthReason::bad_tag, frame);
  }

  // The blob must name the RAN pair that relayed it.
  last_ops_ += 2;
  if (fields->cell != via_cell || fields->e2 != via_e2) {
    return finish(ue, AuthOutcome::denied, AuthReason::ran_unverified, frame);
  }

  // Possession factor.
  ++last_ops_;
  const auto token = current_token(ue);
  if (!token || !tags_equal(token->token, fields->token)) {
    return finish(ue, AuthOutcome::denied, AuthReason::unknown_token, frame);
  }
  if (token->expired_at(frame)) return finish(ue, AuthOutcome::denied, AuthReason::expired, frame);

  if (!reauth) {
    if (fields->slice != kNoSlice) return finish(ue, AuthOutcome::denied, AuthReason::slice_mismatch, frame);
    return finish(ue, AuthOutcome::granted, AuthReason::ok, frame);
  }

  const auto usage_key = sdl::ue_key("usage", ue);
  const auto usage = sdl_->get_json(sdl::kAuth, usage_key);
  sdl_->put_json(sdl::kAuth, usage_key, Json{{"sum", 0.0}, {"count", 0}, {"max_capacity_mbps", 0.0}});

  const auto binding = sdl_->get_json(sdl::kSlices, sdl::ue_key("binding", ue));
  if (!binding || fields->slice.value != (*binding)["slice"].get<std::uint16_t>()) {
    return finish(ue, AuthOutcome::revoked, AuthReason::slice_mismatch, frame);
  }
  if (usage && (*usage)["count"].get<std::uint64_t>() > 0) {
    const double mean = (*usage)["sum"].get<double>() / (*usage)["count"].get<double>();
    const double cap = (*usage)["max_capacity_mbps"].get<double>();
    if (mean > cap * (1.0 + cfg_.usage_tolerance)) {
      return finish(ue, AuthOutcome::revoked, AuthReason::slice_mismatch, frame);
    }
  }
  return finish(ue, AuthOutcome::granted, AuthReason::ok, frame);
}

AuthResult AuthService::finish(UeId ue, AuthOutcome outcome, AuthReason reason, std::uint64_t frame) {
  AuthResult r{AuthDecision{ue, outcome, reason}, std::nullopt};
  audit_->record(frame * kFrameMs, "auth", "auth_decision",
                 {{"frame", frame},
                  {"ue", ue.value},
                  {"outcome", to_string(outcome)},
                  {"reason", to_string(reason)}});
  if (outcome == AuthOutcome::granted) {
    set_state(ue, AuthState::granted);
    r.next_token = issue_token(ue, frame);
  } else {
    set_state(ue, AuthState::denied);
  }
  return r;
}

AuthXapp::AuthXapp(std::vector<std::uint8_t> secret, AuthConfig cfg, std::uint64_t seed,
                   std::map<UeId, Credentials> id_store)
    : secret_(std::move(secret)), cfg_(cfg), seed_(seed), id_store_(std::move(id_store)) {}

void AuthXapp::on_init(ric::RicContext& ctx) {
  ctx_ = &ctx;
  service_.emplace(ctx.sdl(), ctx.audit(), secret_, cfg_, seed_);
  for (const auto& [ue, creds] : id_store_) service_->register_ue(ue, creds);
  ctx.subscribe(e2::MessageKind::AuthRequest);
  ctx.subscribe(e2::MessageKind::KpmIndication);
}

AuthToken AuthXapp::provision(UeId ue) {
  if (!ctx_) throw Error("auth xApp is not registered");
  return service_->issue_token(ue, ctx_->frame());
}

void AuthXapp::on_e2(ric::RicContext& ctx, const e2::Message& msg) {
  if (msg.kind() == e2::MessageKind::AuthRequest) {
    handle_auth_request(ctx, msg);
    return;
  }
  if (msg.kind() == e2::MessageKind::KpmIndication) {
    const auto& report = std::get<e2::KpmIndicationBody>(msg.payload).report;
    const auto binding = ctx.sdl().get_json(sdl::kSlices, sdl::ue_key("binding", report.ue));
    const std::size_t prbs = binding ? (*binding)["prbs"].get<std::size_t>() : 0;
    service_->record_usage(report.ue, report.throughput_mbps, prbs);
  }
}

void AuthXapp::handle_auth_request(ric::RicContext& ctx, const e2::Message& msg) {
  const auto& blob = std::get<e2::AuthRequestBody>(msg.payload).blob;
  const auto fields = parse_blob(blob);
  const std::uint64_t frame = ctx.frame();

  if (fields && fields->ue == kRanAttestationUe) {
    service_->verify_ran(msg.cell, msg.e2, std::span(blob).subspan(kBlobPrefixSize), frame);
    return;
  }
  if (!service_->ran_verified(msg.cell, msg.e2)) {
    ctx.audit().record(ctx.time_ms(), "auth", "ran_unverified",
                       {{"frame", frame},
                        {"ue", fields ? fields->ue.value : 0},
                        {"cell", msg.cell.value},
                        {"e2", msg.e2.value}});
    return;
  }
  if (!fields) {
    respond(ctx, service_->verify_ue(blob, msg.cell, msg.e2, frame));
    return;
  }

  if (fields->slice != kNoSlice) {
    const auto result = service_->periodic_reauth(blob, msg.cell, msg.e2, frame);
    respond(ctx, result);
    if (result.decision.outcome != AuthOutcome::granted) {
      ctx.publish("slicing.release", {{"ue", fields->ue.value}, {"cause", "reauth_revoke"}});
    }
    return;
  }

  if (pending_.contains(fields->ue)) {
    ctx.audit().record(ctx.time_ms(), "auth", "duplicate_auth_request", {{"frame", frame}, {"ue", fields->ue.value}});
    return;
  }
  // Least privilege while verifying: a small verification slice only.
  service_->set_state(fields->ue, AuthState::verifying);
  ctx.publish("slicing.bind", {{"ue", fields->ue.value}, {"kind", "verification"}});
  pending_[fields->ue] = Pending{blob, msg.cell, msg.e2, frame + cfg_.verify_delay_frames};
}

void AuthXapp::on_frame(ric::RicContext& ctx, std::uint64_t frame) {
  for (auto it = pending_.begin(); it != pending_.end();) {
    if (it->second.due_frame > frame) {
      ++it;
      continue;
    }
    const UeId ue = it->first;
    const auto result = service_->verify_ue(it->second.blob, it->second.cell, it->second.e2, frame);
    it = pending_.erase(it);
    respond(ctx, result);
    if (result.decision.outcome == AuthOutcome::granted) {
      ctx.publish("slicing.bind", {{"ue", ue.value}, {"kind", "normal"}});
    } else {
      ctx.publish("slicing.release", {{"ue", ue.value}, {"cause", "release"}});
    }
  }
}

void AuthXapp::respond(ric::RicContext& ctx, const AuthResult& result) {
  if (result.decision.reason == AuthReason::ran_unverified && result.decision.ue == UeId{0}) return;
  e2::AuthResponseBody body;
  body.ue = result.decision.ue;
  body.outcome = result.decision.outcome;
  body.reason = result.decision.reason;
  if (result.next_token) body.token = result.next_token->token;
  ctx.send_to_ran(body);
}

}  // namespace ztran::auth
