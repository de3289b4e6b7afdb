#pragma once

// Near-RT RIC skeleton: E2 termination, message router, shared data layer
// (SDL), audit log and xApp registry. Everything runs on the frame loop's
// thread; xApps are invoked synchronously from dispatch().

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ztran/core_model.hpp"
#include "ztran/e2_interface.hpp"

namespace ztran::ric {

using XappId = StrongId<struct XappIdTag, std::uint32_t>;
using Json = nlohmann::json;

struct AuditRecord {
  std::uint64_t time_ms = 0;
  std::string actor;
  std::string action;
  Json detail;
};

/// Append-only audit trail, written as JSON lines.
class AuditLog {
 public:
  void record(std::uint64_t time_ms, std::string actor, std::string action, Json detail = Json::object());
  const std::vector<AuditRecord>& records() const noexcept { return records_; }
  std::vector<AuditRecord> with_action(std::string_view action) const;
  void write_jsonl(std::ostream& os) const;

 private:
  std::vector<AuditRecord> records_;
};

struct SdlEntry {
  std::vector<std::uint8_t> value;
  std::uint64_t version = 0;
};

/// In-memory key-value store partitioned by namespace. Versions count writes
/// per key starting at 1.
class Sdl {
 public:
  std::uint64_t put(const std::string& ns, const std::string& key, std::vector<std::uint8_t> value);
  std::uint64_t put(const std::string& ns, const std::string& key, std::string_view value);
  std::uint64_t put_json(const std::string& ns, const std::string& key, const Json& value);
  /// Returns false when the key was absent.
  bool erase(const std::string& ns, const std::string& key);

  std::optional<SdlEntry> get(const std::string& ns, const std::string& key) const;
  std::optional<std::string> get_string(const std::string& ns, const std::string& key) const;
  std::optional<Json> get_json(const std::string& ns, const std::string& key) const;

  /// Keys of `ns` starting with `prefix`, in lexicographic order.
  std::vector<std::string> keys(const std::string& ns, std::string_view prefix = {}) const;
  std::uint64_t writes() const noexcept { return writes_; }

  /// Values are hex encoded; keys ordered.
  void write_snapshot(std::ostream& os) const;

 private:
  std::map<std::string, std::map<std::string, SdlEntry>> data_;
  std::uint64_t writes_ = 0;
};

/// Message exchanged between xApps through the router.
struct XappMessage {
  std::string topic;
  XappId source;
  std::uint64_t seq = 0;
  Json body;
};

class RicContext;

class Xapp {
 public:
  virtual ~Xapp() = default;
  virtual std::string name() const = 0;
  /// Called once on registration. Subscriptions made here are active for the
  /// next dispatch.
  virtual void on_init(RicContext& ctx) = 0;
  virtual void on_e2(RicContext& ctx, const e2::Message& msg) {
    (void)ctx;
    (void)msg;
  }
  virtual void on_internal(RicContext& ctx, const XappMessage& msg) {
    (void)ctx;
    (void)msg;
  }
  /// Called between frames, after frame `frame` completed on the RAN.
  virtual void on_frame(RicContext& ctx, std::uint64_t frame) {
    (void)ctx;
    (void)frame;
  }
};

struct Delivery {
  std::uint64_t id = 0;
  XappId xapp;
  std::string what;  ///< E2 kind name or internal topic
  std::uint64_t source_seq = 0;
};

class Ric;

/// Handle an xApp uses to reach the RIC platform.
class RicContext {
 public:
  RicContext(Ric& ric, XappId self) : ric_(&ric), self_(self) {}

  XappId self() const noexcept { return self_; }
  void subscribe(e2::MessageKind kind);
  void subscribe(const std::string& topic);
  void publish(const std::string& topic, Json body);
  /// Queues a downlink message for the RAN. Subscribers of its kind on the
  /// RIC see it too.
  void send_to_ran(e2::Payload payload);

  Sdl& sdl();
  AuditLog& audit();
  std::uint64_t frame() const;
  std::uint64_t time_ms() const;

 private:
  Ric* ric_;
  XappId self_;
};

class Ric {
 public:
  Ric(CellId cell, E2Id e2) : downlink_(cell, e2) {}
  Ric(const Ric&) = delete;
  Ric& operator=(const Ric&) = delete;

  /// Throws RegistrationError on a duplicate name.
  XappId register_xapp(std::unique_ptr<Xapp> xapp);
  void unregister_xapp(XappId id);
  Xapp* find(XappId id) const;
  std::optional<XappId> find(const std::string& name) const;

  /// E2 termination: decodes one uplink frame and routes it. Undecodable
  /// frames are audit-logged and dropped.
  void receive(std::span<const std::uint8_t> frame);
  /// Queues a message for delivery. Messages whose seq does not exceed the
  /// last one seen on their connection are dropped and audited.
  /// Returns false when dropped.
  bool route(e2::Message msg);
  void route(XappMessage msg);
  /// Delivers queued messages, including any queued by handlers, until idle.
  void dispatch();
  /// Runs every xApp's on_frame hook for `frame`, then dispatches.
  void tick(std::uint64_t frame);

  /// Encoded downlink frames accumulated since the last call.
  std::vector<std::vector<std::uint8_t>> take_outbox();

  void set_frame(std::uint64_t frame) noexcept { frame_ = frame; }
  std::uint64_t frame() const noexcept { return frame_; }
  std::uint64_t time_ms() const noexcept { return frame_ * kFrameMs; }

  Sdl& sdl() noexcept { return sdl_; }
  AuditLog& audit() noexcept { return audit_; }
  const std::vector<Delivery>& deliveries() const noexcept { return deliveries_; }
  std::size_t subscriber_count(e2::MessageKind kind) const;

 private:
  friend class RicContext;

  struct Entry {
    std::unique_ptr<Xapp> xapp;
    std::unique_ptr<RicContext> ctx;
    std::uint64_t next_internal_seq = 1;
  };
  using Routed = std::variant<e2::Message, XappMessage>;

  void subscribe(XappId id, e2::MessageKind kind);
  void subscribe(XappId id, const std::string& topic);
  void send_to_ran(XappId from, e2::Payload payload);
  void deliver(const Routed& item);

  std::map<XappId, Entry> xapps_;
  std::uint32_t next_xapp_id_ = 1;
  std::map<e2::MessageKind, std::vector<XappId>> kind_subs_;
  std::map<std::string, std::vector<XappId>> topic_subs_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, bool>, std::uint64_t> last_seq_;
  std::deque<Routed> queue_;
  std::vector<std::vector<std::uint8_t>> outbox_;
  std::vector<Delivery> deliveries_;
  e2::Connection downlink_;
  Sdl sdl_;
  AuditLog audit_;
  std::uint64_t frame_ = 0;
  bool dispatching_ = false;
};

}  // namespace ztran::ric
