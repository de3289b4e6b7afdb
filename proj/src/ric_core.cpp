#include "ztran/ric_core.hpp"

#include <algorithm>

#include "ztran/errors.hpp"

namespace ztran::ric {

void AuditLog::record(std::uint64_t time_ms, std::string actor, std::string action, Json detail) {
  records_.push_back(AuditRecord{time_ms, std::move(actor), std::move(action), std::move(detail)});
}

std::vector<AuditRecord> AuditLog::with_action(std::string_view action) const {
  std::vector<AuditRecord> out;
  for (const auto& r : records_) {
    if (r.action == action) out.push_back(r);
  }
  return out;
}

void AuditLog::write_jsonl(std::ostream& os) const {
  for (const auto& r : records_) {
    Json line = {{"time_ms", r.time_ms}, {"actor", r.actor}, {"action", r.action}, {"detail", r.detail}};
    os << line.dump() << '\n';
  }
}

std::uint64_t Sdl::put(const std::string& ns, const std::string& key, std::vector<std::uint8_t> value) {
  auto& entry = data_[ns][key];
  entry.value = std::move(value);
  ++writes_;
  return ++entry.version;
}

std::uint64_t Sdl::put(const std::string& ns, const std::string& key, std::string_view value) {
  return put(ns, key, std::vector<std::uint8_t>(value.begin(), value.end()));
}

std::uint64_t Sdl::put_json(const std::string& ns, const std::string& key, const Json& value) {
  return put(ns, key, std::string_view(value.dump()));
}

bool Sdl::erase(const std::string& ns, const std::string& key) {
  auto nit = data_.find(ns);
  if (nit == data_.end() || nit->second.erase(key) == 0) return false;
  ++writes_;
  return true;
}

std::optional<SdlEntry> Sdl::get(const std::string& ns, const std::string& key) const {
  auto nit = data_.find(ns);
  if (nit == data_.end()) return std::nullopt;
  auto kit = nit->second.find(key);
  if (kit == nit->second.end()) return std::nullopt;
  return kit->second;
}

std::optional<std::string> Sdl::get_string(const std::string& ns, const std::string& key) const {
  auto e = get(ns, key);
  if (!e) return std::nullopt;
  return std::string(e->value.begin(), e->value.end());
}

std::optional<Json> Sdl::get_json(const std::string& ns, const std::string& key) const {
  auto s = get_string(ns, key);
  if (!s) return std::nullopt;
  return Json::parse(*s);
}

std::vector<std::string> Sdl::keys(const std::string& ns, std::string_view prefix) const {
  std::vector<std::string> out;
  auto nit = data_.find(ns);
  if (nit == data_.end()) return out;
  for (const auto& [k, v] : nit->second) {
    if (k.starts_with(prefix)) out.push_back(k);
  }
  return out;
}

void Sdl::write_snapshot(std::ostream& os) const {
  Json snap = Json::object();
  for (const auto& [ns, entries] : data_) {
    Json obj = Json::object();
    for (const auto& [k, e] : entries) {
      obj[k] = {{"version", e.version}, {"value_hex", e2::to_hex(e.value)}};
    }
    snap[ns] = std::move(obj);
  }
  os << snap.dump(2) << '\n';
}

void RicContext::subscribe(e2::MessageKind kind) { ric_->subscribe(self_, kind); }
void RicContext::subscribe(const std::string& topic) { ric_->subscribe(self_, topic); }

void RicContext::publish(const std::string& topic, Json body) {
  auto& entry = ric_->xapps_.at(self_);
  ric_->route(XappMessage{topic, self_, entry.next_internal_seq++, std::move(body)});
}

void RicContext::send_to_ran(e2::Payload payload) { ric_->send_to_ran(self_, std::move(payload)); }
Sdl& RicContext::sdl() { return ric_->sdl(); }
AuditLog& RicContext::audit() { return ric_->audit(); }
std::uint64_t RicContext::frame() const { return ric_->frame(); }
std::uint64_t RicContext::time_ms() const { return ric_->time_ms(); }

XappId Ric::register_xapp(std::unique_ptr<Xapp> xapp) {
  const std::string name = xapp->name();
  if (find(name)) throw RegistrationError("xApp '" + name + "' is already registered");
  const XappId id{next_xapp_id_++};
  Entry entry;
  entry.xapp = std::move(xapp);
  entry.ctx = std::make_unique<RicContext>(*this, id);
  auto [it, inserted] = xapps_.emplace(id, std::move(entry));
  audit_.record(time_ms(), "ric", "xapp_registered", {{"xapp", name}, {"id", id.value}});
  it->second.xapp->on_init(*it->second.ctx);
  return id;
}

void Ric::unregister_xapp(XappId id) {
  auto it = xapps_.find(id);
  if (it == xapps_.end()) return;
  for (auto& [kind, subs] : kind_subs_) std::erase(subs, id);
  for (auto& [topic, subs] : topic_subs_) std::erase(subs, id);
  audit_.record(time_ms(), "ric", "xapp_unregistered", {{"xapp", it->second.xapp->name()}, {"id", id.value}});
  xapps_.erase(it);
}

Xapp* Ric::find(XappId id) const {
  auto it = xapps_.find(id);
  return it == xapps_.end() ? nullptr : it->second.xapp.get();
}

std::optional<XappId> Ric::find(const std::string& name) const {
  for (const auto& [id, e] : xapps_) {
    if (e.xapp->name() == name) return id;
  }
  return std::nullopt;
}

void Ric::subscribe(XappId id, e2::MessageKind kind) {
  auto& subs = kind_subs_[kind];
  if (std::find(subs.begin(), subs.end(), id) == subs.end()) subs.push_back(id);
}

void Ric::subscribe(XappId id, const std::string& topic) {
  auto& subs = topic_subs_[topic];
  if (std::find(subs.begin(), subs.end(), id) == subs.end()) subs.push_back(id);
}

std::size_t Ric::subscriber_count(e2::MessageKind kind) const {
  auto it = kind_subs_.find(kind);
  return it == kind_subs_.end() ? 0 : it->second.size();
}

void Ric::receive(std::span<const std::uint8_t> frame) {
  try {
    route(e2::decode(frame));
  } catch (const DecodeError& e) {
    audit_.record(time_ms(), "e2term", "decode_error", {{"error", e.what()}, {"offset", e.offset()}});
  }
}

bool Ric::route(e2::Message msg) {
  const auto key = std::make_tuple(msg.cell.value, msg.e2.value, e2::is_uplink(msg.kind()));
  auto it = last_seq_.find(key);
  if (it != last_seq_.end() && msg.seq <= it->second) {
    audit_.record(time_ms(), "router", "replay_dropped",
                  {{"kind", e2::to_string(msg.kind())}, {"seq", msg.seq}, {"last_seq", it->second}});
    return false;
  }
  last_seq_[key] = msg.seq;
  queue_.emplace_back(std::move(msg));
  return true;
}

void Ric::route(XappMessage msg) { queue_.emplace_back(std::move(msg)); }

void Ric::send_to_ran(XappId from, e2::Payload payload) {
  auto msg = downlink_.make(std::move(payload));
  outbox_.push_back(e2::encode(msg));
  (void)from;
  if (subscriber_count(msg.kind()) > 0) route(std::move(msg));
}

void Ric::deliver(const Routed& item) {
  if (const auto* m = std::get_if<e2::Message>(&item)) {
    auto it = kind_subs_.find(m->kind());
    const std::vector<XappId> subs = it == kind_subs_.end() ? std::vector<XappId>{} : it->second;
    if (subs.empty()) {
      audit_.record(time_ms(), "router", "dead_letter",
                    {{"kind", e2::to_string(m->kind())}, {"seq", m->seq}});
      return;
    }
    for (XappId id : subs) {
      auto xit = xapps_.find(id);
      if (xit == xapps_.end()) continue;
      deliveries_.push_back(Delivery{deliveries_.size() + 1, id, std::string(e2::to_string(m->kind())), m->seq});
      xit->second.xapp->on_e2(*xit->second.ctx, *m);
    }
    return;
  }
  const auto& x = std::get<XappMessage>(item);
  auto it = topic_subs_.find(x.topic);
  const std::vector<XappId> subs = it == topic_subs_.end() ? std::vector<XappId>{} : it->second;
  if (subs.empty()) {
    audit_.record(time_ms(), "router", "dead_letter", {{"topic", x.topic}, {"seq", x.seq}});
    return;
  }
  for (XappId id : subs) {
    auto xit = xapps_.find(id);
    if (xit == xapps_.end()) continue;
    deliveries_.push_back(Delivery{deliveries_.size() + 1, id, x.topic, x.seq});
    xit->second.xapp->on_internal(*xit->second.ctx, x);
  }
}

void Ric::dispatch() {
  if (dispatching_) return;  // handlers only enqueue; the outer loop drains
  dispatching_ = true;
  try {
    while (!queue_.empty()) {
      Routed item = std::move(queue_.front());
      queue_.pop_front();
      deliver(item);
    }
  } catch (...) {
    dispatching_ = false;
    throw;
  }
  dispatching_ = false;
}

void Ric::tick(std::uint64_t frame) {
  set_frame(frame);
  dispatch();
  std::vector<XappId> ids;
  for (const auto& [id, e] : xapps_) ids.push_back(id);
  for (XappId id : ids) {
    auto it = xapps_.find(id);
    if (it == xapps_.end()) continue;
    it->second.xapp->on_frame(*it->second.ctx, frame);
    dispatch();
  }
}

std::vector<std::vector<std::uint8_t>> Ric::take_outbox() {
  std::vector<std::vector<std::uint8_t>> out;
  out.swap(outbox_);
  return out;
}

}  // namespace ztran::ric
