#include "ztran/xapp_slicing.hpp"

#include <algorithm>
#include <set>

#include "ztran/errors.hpp"
#include "ztran/sdl_keys.hpp"

namespace ztran::slicing {

using ric::Json;

std::string_view to_string(ChangeCause c) {
  switch (c) {
    case ChangeCause::grant: return "grant";
    case ChangeCause::verify: return "verify";
    case ChangeCause::isolate: return "isolate";
    case ChangeCause::release: return "release";
    case ChangeCause::reauth_revoke: return "reauth_revoke";
  }
  return "?";
}

std::optional<ChangeCause> change_cause_from_string(std::string_view s) {
  for (auto c : {ChangeCause::grant, ChangeCause::verify, ChangeCause::isolate, ChangeCause::release,
                 ChangeCause::reauth_revoke}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

const SliceSpec* SliceTable::find(SliceId id) const {
  for (const auto& s : slices) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::optional<SliceId> SliceTable::binding(UeId ue) const {
  auto it = bindings.find(ue);
  if (it == bindings.end()) return std::nullopt;
  return it->second;
}

e2::SliceControlBody SliceTable::to_control() const {
  e2::SliceControlBody body;
  body.slices = slices;
  for (const auto& [ue, slice] : bindings) body.bindings.push_back(e2::Binding{ue, slice});
  return body;
}

SliceManager::SliceManager(SlicingConfig cfg) : cfg_(cfg) {
  if (cfg_.restricted.budget_prbs < 1 || cfg_.restricted.budget_prbs > 5) {
    throw PolicyError("restricted budget must be 1..5 PRBs");
  }
}

void SliceManager::set_priority(UeId ue, UePriority p) { priorities_[ue] = p; }

std::optional<SliceKind> SliceManager::kind_of(UeId ue) const {
  auto it = members_.find(ue);
  if (it == members_.end()) return std::nullopt;
  return it->second.kind;
}

std::size_t SliceManager::isolated_count() const {
  return static_cast<std::size_t>(std::count_if(members_.begin(), members_.end(), [](const auto& m) {
    return m.second.kind == SliceKind::restricted;
  }));
}

SliceId SliceManager::allocate_id() const {
  std::set<std::uint16_t> used;
  for (const auto& [ue, m] : members_) used.insert(m.slice.value);
  if (restricted_id_) used.insert(restricted_id_->value);
  for (;;) {
    const std::uint16_t id = next_id_++;
    if (next_id_ == 0) next_id_ = 1;
    if (id != 0 && !used.contains(id)) return SliceId{id};
  }
}

e2::SliceControlBody SliceManager::bind_ue(UeId ue, SliceKind kind, AuthState state, std::uint64_t frame) {
  last_ops_ = 1;
  if (kind == SliceKind::restricted) throw PolicyError("restricted binding goes through isolate()");
  if (kind == SliceKind::normal && state != AuthState::granted) {
    throw PolicyError("cannot bind " + to_string(ue) + " to a normal slice while " + std::string(to_string(state)));
  }
  if (kind == SliceKind::verification && state != AuthState::verifying) {
    throw PolicyError("cannot bind " + to_string(ue) + " to a verification slice while " +
                      std::string(to_string(state)));
  }
  auto it = members_.find(ue);
  if (it != members_.end() && it->second.kind == kind) return table_.to_control();

  const auto saved = members_;
  const std::optional<SliceId> old = it == members_.end() ? std::nullopt : std::optional(it->second.slice);
  const SliceId id = allocate_id();
  const auto saved_restricted = restricted_id_;
  members_[ue] = Member{kind, id};
  if (restricted_id_ && isolated_count() == 0) restricted_id_.reset();
  try {
    relayout(frame);
  } catch (...) {
    members_ = saved;
    restricted_id_ = saved_restricted;
    throw;
  }
  log(frame, ue, old, id, kind == SliceKind::normal ? ChangeCause::grant : ChangeCause::verify);
  return table_.to_control();
}

std::optional<e2::SliceControlBody> SliceManager::isolate(UeId ue, std::uint64_t frame) {
  last_ops_ = 1;
  auto it = members_.find(ue);
  if (it != members_.end() && it->second.kind == SliceKind::restricted) return std::nullopt;
  if (it == members_.end() || it->second.kind != SliceKind::normal) {
    throw PolicyError("cannot isolate " + to_string(ue) + ": not holding a normal slice");
  }
  const SliceId old = it->second.slice;
  const bool created = !restricted_id_;
  if (created) restricted_id_ = allocate_id();
  it->second = Member{SliceKind::restricted, *restricted_id_};
  relayout(frame);
  log(frame, ue, old, *restricted_id_, ChangeCause::isolate);
  return table_.to_control();
}

std::optional<e2::SliceControlBody> SliceManager::release(UeId ue, std::uint64_t frame, ChangeCause cause) {
  last_ops_ = 1;
  auto it = members_.find(ue);
  if (it == members_.end()) return std::nullopt;
  const SliceId old = it->second.slice;
  members_.erase(it);
  if (restricted_id_ && isolated_count() == 0) restricted_id_.reset();
  relayout(frame);
  log(frame, ue, old, std::nullopt, cause);
  return table_.to_control();
}

void SliceManager::relayout(std::uint64_t frame) {
  const std::uint32_t total = cfg_.total_prbs;
  std::vector<SliceSpec> slices;
  std::uint32_t top = total;

  if (restricted_id_) {
    ++last_ops_;
    const std::uint32_t b = cfg_.restricted.budget_prbs;
    if (b > top) throw PolicyError("restricted slice does not fit the cell");
    top -= b;
    slices.push_back(SliceSpec{*restricted_id_, PrbMask::contiguous(total, top, b), Priority::commercial,
                               SliceKind::restricted});
  }

  std::vector<std::pair<UeId, SliceId>> critical, commercial;
  for (const auto& [ue, m] : members_) {
    if (m.kind == SliceKind::verification) {
      ++last_ops_;
      const std::uint32_t b = cfg_.verification_budget_prbs;
      if (b > top) throw PolicyError("no room for a verification slice");
      top -= b;
      slices.push_back(SliceSpec{m.slice, PrbMask::contiguous(total, top, b), Priority::commercial,
                                 SliceKind::verification});
    } else if (m.kind == SliceKind::normal) {
      auto p = priorities_.find(ue);
      if (p != priorities_.end() && p->second.priority == Priority::mission_critical) {
        critical.emplace_back(ue, m.slice);
      } else {
        commercial.emplace_back(ue, m.slice);
      }
    }
  }

  std::uint32_t start = 0;
  for (const auto& [ue, id] : critical) {
    ++last_ops_;
    const std::uint32_t b = priorities_.at(ue).reserved_prbs;
    if (b == 0 || start + b > top) throw PolicyError("mission-critical reservation for " + to_string(ue) + " does not fit");
    slices.push_back(SliceSpec{id, PrbMask::contiguous(total, start, b), Priority::mission_critical, SliceKind::normal});
    start += b;
  }
  if (!commercial.empty()) {
    const std::uint32_t avail = top - start;
    if (commercial.size() > avail) throw PolicyError("more granted UEs than free PRBs");
    const auto budgets = equal_split(avail, static_cast<std::uint32_t>(commercial.size()));
    for (std::size_t i = 0; i < commercial.size(); ++i) {
      ++last_ops_;
      slices.push_back(SliceSpec{commercial[i].second, PrbMask::contiguous(total, start, budgets[i]),
                                 Priority::commercial, SliceKind::normal});
      start += budgets[i];
    }
  }

  std::sort(slices.begin(), slices.end(), [](const SliceSpec& a, const SliceSpec& b) { return a.id < b.id; });
  table_.slices = std::move(slices);
  table_.bindings.clear();
  for (const auto& [ue, m] : members_) table_.bindings[ue] = m.slice;
  table_.epoch = frame + 1;
}

void SliceManager::log(std::uint64_t frame, UeId ue, std::optional<SliceId> from, std::optional<SliceId> to,
                       ChangeCause cause) {
  changes_.push_back(SliceChange{frame, ue, from, to, cause});
}

SlicingXapp::SlicingXapp(SlicingConfig cfg, std::map<UeId, UePriority> priorities) : manager_(cfg) {
  for (const auto& [ue, p] : priorities) manager_.set_priority(ue, p);
}

void SlicingXapp::on_init(ric::RicContext& ctx) {
  ctx.subscribe(std::string("slicing.bind"));
  ctx.subscribe(std::string("slicing.release"));
  ctx.subscribe(std::string("intrusion.flag"));
}

void SlicingXapp::on_internal(ric::RicContext& ctx, const ric::XappMessage& msg) {
  const UeId ue{msg.body.at("ue").get<std::uint64_t>()};
  const std::uint64_t frame = ctx.frame();
  auto& audit = ctx.audit();
  const auto state_name = ctx.sdl().get_string(sdl::kAuth, sdl::ue_key("state", ue));
  const AuthState state =
      state_name ? auth_state_from_string(*state_name).value_or(AuthState::unauthenticated) : AuthState::unauthenticated;

  try {
    if (msg.topic == "slicing.bind") {
      const std::string kind_name = msg.body.at("kind").get<std::string>();
      const SliceKind kind = kind_name == "verification" ? SliceKind::verification : SliceKind::normal;
      emit(ctx, manager_.bind_ue(ue, kind, state, frame));
      audit.record(ctx.time_ms(), "slicing", "slice_bind",
                   {{"frame", frame}, {"ue", ue.value}, {"kind", kind_name},
                    {"slice", manager_.table().binding(ue)->value}, {"effective_frame", frame + 1}});
    } else if (msg.topic == "slicing.release") {
      const auto cause =
          change_cause_from_string(msg.body.value("cause", std::string("release"))).value_or(ChangeCause::release);
      auto body = manager_.release(ue, frame, cause);
      if (!body) {
        audit.record(ctx.time_ms(), "slicing", "release_noop", {{"frame", frame}, {"ue", ue.value}});
        return;
      }
      emit(ctx, std::move(*body));
      audit.record(ctx.time_ms(), "slicing", "release",
                   {{"frame", frame}, {"ue", ue.value}, {"cause", to_string(cause)}, {"effective_frame", frame + 1}});
    } else if (msg.topic == "intrusion.flag") {
      if (state != AuthState::granted && state != AuthState::isolated) {
        audit.record(ctx.time_ms(), "slicing", "isolate_rejected",
                     {{"frame", frame}, {"ue", ue.value}, {"state", to_string(state)}});
        return;
      }
      auto body = manager_.isolate(ue, frame);
      if (!body) {
        audit.record(ctx.time_ms(), "slicing", "isolate_noop", {{"frame", frame}, {"ue", ue.value}});
        return;
      }
      ctx.sdl().put(sdl::kAuth, sdl::ue_key("state", ue), to_string(AuthState::isolated));
      emit(ctx, std::move(*body));
      audit.record(ctx.time_ms(), "slicing", "isolate",
                   {{"frame", frame},
                    {"ue", ue.value},
                    {"offending", msg.body.value("offending", Json::array())},
                    {"window_used", msg.body.value("window_used", 0)},
                    {"effective_frame", frame + 1}});
    }
  } catch (const PolicyError& e) {
    audit.record(ctx.time_ms(), "slicing", "policy_error",
                 {{"frame", frame}, {"ue", ue.value}, {"topic", msg.topic}, {"error", e.what()}});
  }
}

void SlicingXapp::emit(ric::RicContext& ctx, e2::SliceControlBody body) {
  const auto report = validate_slice_table(body.slices, manager_.config().total_prbs);
  if (!report.ok()) throw InvariantBreach(ctx.frame(), "slice table rejected: " + report.describe());

  auto& sdl = ctx.sdl();
  Json table = Json::object();
  table["epoch"] = manager_.table().epoch;
  table["slices"] = Json::array();
  for (const auto& s : body.slices) {
    table["slices"].push_back({{"id", s.id.value},
                               {"kind", to_string(s.kind)},
                               {"priority", to_string(s.priority)},
                               {"prbs", s.mask.indices()}});
  }
  table["bindings"] = Json::array();
  for (const auto& b : body.bindings) table["bindings"].push_back({{"ue", b.ue.value}, {"slice", b.slice.value}});
  sdl.put_json(sdl::kSlices, "table", table);

  std::set<std::string> live;
  for (const auto& b : body.bindings) {
    const SliceSpec* spec = manager_.table().find(b.slice);
    const auto key = sdl::ue_key("binding", b.ue);
    live.insert(key);
    const Json value = {{"slice", b.slice.value}, {"kind", to_string(spec->kind)}, {"prbs", spec->mask.popcount()}};
    const auto current = sdl.get_json(sdl::kSlices, key);
    if (!current || *current != value) sdl.put_json(sdl::kSlices, key, value);
  }
  for (const auto& key : sdl.keys(sdl::kSlices, "binding/")) {
    if (!live.contains(key)) sdl.erase(sdl::kSlices, key);
  }

  emitted_.push_back(body);
  ctx.send_to_ran(std::move(body));
}

}  // namespace ztran::slicing
