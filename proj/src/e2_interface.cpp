#include "ztran/e2_interface.hpp"

#include <bit>
#include <cmath>
#include <set>
#include <stdexcept>

#include "ztran/errors.hpp"

namespace ztran::e2 {
namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::span<const std::uint8_t> bytes(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DecodeError(in_.size(), "truncated frame");
  }
  std::uint64_t be(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += n;
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::optional<std::string> check_slice_control(const SliceControlBody& b) {
  if (b.slices.size() > 0xFFFF || b.bindings.size() > 0xFFFF) return "too many entries";
  std::set<SliceId> ids;
  std::size_t prbs = b.slices.empty() ? 0 : b.slices.front().mask.size();
  if (prbs > 0xFFFF) return "mask too long";
  for (const auto& s : b.slices) {
    if (!ids.insert(s.id).second) return "duplicate slice id " + std::to_string(s.id.value);
    if (s.mask.size() != prbs) return "slice masks differ in length";
    if (static_cast<std::uint8_t>(s.priority) > 1) return "bad priority";
    if (static_cast<std::uint8_t>(s.kind) > 2) return "bad slice kind";
  }
  for (const auto& bind : b.bindings) {
    if (!ids.contains(bind.slice)) {
      return "binding of UE " + to_string(bind.ue) + " references undeclared slice " +
             std::to_string(bind.slice.value);
    }
  }
  const auto report = validate_slice_table(b.slices, static_cast<std::uint32_t>(prbs));
  if (!report.ok()) return "slice table invalid: " + report.describe();
  return std::nullopt;
}

std::optional<std::string> check_kpm(const KpmReport& r) {
  if (r.cqi > 15) return "cqi out of range";
  for (double v : {r.snr_db, r.tx_power_dbm, r.throughput_mbps, r.offered_mbps}) {
    if (!std::isfinite(v)) return "non-finite KPM value";
  }
  if (r.throughput_mbps < 0 || r.offered_mbps < 0) return "negative rate";
  return std::nullopt;
}

void write_body(Writer& w, const AuthRequestBody& b) { w.bytes(b.blob); }

void write_body(Writer& w, const AuthResponseBody& b) {
  w.u64(b.ue.value);
  w.u8(static_cast<std::uint8_t>(b.outcome));
  w.u8(static_cast<std::uint8_t>(b.reason));
  w.bytes(b.token);
}

void write_body(Writer& w, const KpmIndicationBody& b) {
  const auto& r = b.report;
  w.u64(r.ue.value);
  w.u32(r.cell.value);
  w.u64(r.seq);
  w.f64(r.snr_db);
  w.u8(r.cqi);
  w.u64(r.tx_packets);
  w.f64(r.tx_power_dbm);
  w.f64(r.throughput_mbps);
  w.f64(r.offered_mbps);
}

void write_body(Writer& w, const SliceControlBody& b) {
  w.u16(static_cast<std::uint16_t>(b.bindings.size()));
  for (const auto& bind : b.bindings) {
    w.u64(bind.ue.value);
    w.u16(bind.slice.value);
  }
  w.u16(static_cast<std::uint16_t>(b.slices.size()));
  for (const auto& s : b.slices) {
    w.u16(s.id.value);
    w.u8(static_cast<std::uint8_t>(s.priority));
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u16(static_cast<std::uint16_t>(s.mask.size()));
    w.bytes(s.mask.to_bytes());
  }
}

void write_body(Writer& w, const SubscriptionRequestBody& b) {
  w.u32(b.report_period_ms);
  if (!b.ue_filter) {
    w.u8(0);
    return;
  }
  w.u8(1);
  w.u16(static_cast<std::uint16_t>(b.ue_filter->size()));
  for (UeId ue : *b.ue_filter) w.u64(ue.value);
}

void write_body(Writer& w, const SubscriptionAckBody& b) { w.u32(b.report_period_ms); }

Payload read_body(Reader& r, MessageKind kind) {
  switch (kind) {
    case MessageKind::AuthRequest: {
      auto blob = r.bytes(kAuthBlobSize);
      return AuthRequestBody{{blob.begin(), blob.end()}};
    }
    case MessageKind::AuthResponse: {
      AuthResponseBody b;
      b.ue = UeId{r.u64()};
      const std::size_t at = r.pos();
      const auto outcome = r.u8();
      const auto reason = r.u8();
      if (outcome > 2) throw DecodeError(at, "bad auth outcome");
      if (reason > 5) throw DecodeError(at + 1, "bad auth reason");
      b.outcome = static_cast<AuthOutcome>(outcome);
      b.reason = static_cast<AuthReason>(reason);
      auto tok = r.bytes(kTokenSize);
      std::copy(tok.begin(), tok.end(), b.token.begin());
      return b;
    }
    case MessageKind::KpmIndication: {
      KpmReport k;
      k.ue = UeId{r.u64()};
      k.cell = CellId{r.u32()};
      k.seq = r.u64();
      k.snr_db = r.f64();
      k.cqi = r.u8();
      k.tx_packets = r.u64();
      k.tx_power_dbm = r.f64();
      k.throughput_mbps = r.f64();
      k.offered_mbps = r.f64();
      return KpmIndicationBody{k};
    }
    case MessageKind::SliceControl: {
      SliceControlBody b;
      const std::size_t nb = r.u16();
      for (std::size_t i = 0; i < nb; ++i) {
        Binding bind;
        bind.ue = UeId{r.u64()};
        bind.slice = SliceId{r.u16()};
        b.bindings.push_back(bind);
      }
      const std::size_t ns = r.u16();
      for (std::size_t i = 0; i < ns; ++i) {
        SliceSpec s;
        s.id = SliceId{r.u16()};
        const std::size_t at = r.pos();
        const auto prio = r.u8();
        const auto kind_byte = r.u8();
        if (prio > 1) throw DecodeError(at, "bad slice priority");
        if (kind_byte > 2) throw DecodeError(at + 1, "bad slice kind");
        s.priority = static_cast<Priority>(prio);
        s.kind = static_cast<SliceKind>(kind_byte);
        const std::size_t nbits = r.u16();
        const std::size_t mask_at = r.pos();
        auto mask_bytes = r.bytes(PrbMask::byte_length(nbits));
        try {
          s.mask = PrbMask::from_bytes(mask_bytes, nbits);
        } catch (const std::invalid_argument& e) {
          throw DecodeError(mask_at, e.what());
        }
        b.slices.push_back(std::move(s));
      }
      return b;
    }
    case MessageKind::SubscriptionRequest: {
      SubscriptionRequestBody b;
      b.report_period_ms = r.u32();
      const std::size_t at = r.pos();
      const auto filter = r.u8();
      if (filter == 1) {
        std::vector<UeId> ues;
        const std::size_t n = r.u16();
        for (std::size_t i = 0; i < n; ++i) ues.push_back(UeId{r.u64()});
        b.ue_filter = std::move(ues);
      } else if (filter != 0) {
        throw DecodeError(at, "bad UE filter tag");
      }
      return b;
    }
    case MessageKind::SubscriptionAck: return SubscriptionAckBody{r.u32()};
  }
  throw std::logic_error("unreachable");
}

}  // namespace

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::AuthRequest: return "AuthRequest";
    case MessageKind::AuthResponse: return "AuthResponse";
    case MessageKind::KpmIndication: return "KpmIndication";
    case MessageKind::SliceControl: return "SliceControl";
    case MessageKind::SubscriptionRequest: return "SubscriptionRequest";
    case MessageKind::SubscriptionAck: return "SubscriptionAck";
  }
  return "?";
}

bool is_uplink(MessageKind k) {
  return k == MessageKind::AuthRequest || k == MessageKind::KpmIndication ||
         k == MessageKind::SubscriptionAck;
}

std::optional<std::string> check_invariants(const Message& msg) {
  return std::visit(
      [](const auto& body) -> std::optional<std::string> {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, AuthRequestBody>) {
          if (body.blob.size() != kAuthBlobSize) {
            return "auth blob must be " + std::to_string(kAuthBlobSize) + " bytes";
          }
        } else if constexpr (std::is_same_v<T, AuthResponseBody>) {
          if (body.outcome == AuthOutcome::granted && body.reason != AuthReason::ok) {
            return "granted decision must carry reason ok";
          }
        } else if constexpr (std::is_same_v<T, KpmIndicationBody>) {
          return check_kpm(body.report);
        } else if constexpr (std::is_same_v<T, SliceControlBody>) {
          return check_slice_control(body);
        } else if constexpr (std::is_same_v<T, SubscriptionRequestBody>) {
          if (body.report_period_ms == 0 || body.report_period_ms % kFrameMs != 0) {
            return "report period must be a positive multiple of the frame duration";
          }
          if (body.ue_filter && body.ue_filter->size() > 0xFFFF) return "UE filter too long";
        } else if constexpr (std::is_same_v<T, SubscriptionAckBody>) {
          if (body.report_period_ms == 0 || body.report_period_ms % kFrameMs != 0) {
            return "report period must be a positive multiple of the frame duration";
          }
        }
        return std::nullopt;
      },
      msg.payload);
}

std::vector<std::uint8_t> encode(const Message& msg) {
  if (auto err = check_invariants(msg)) {
    throw EncodeError(std::string(to_string(msg.kind())) + ": " + *err);
  }
  Writer w;
  w.u32(0);  // patched below
  w.u8(static_cast<std::uint8_t>(msg.kind()));
  w.u32(msg.cell.value);
  w.u32(msg.e2.value);
  w.u64(msg.seq);
  std::visit([&w](const auto& body) { write_body(w, body); }, msg.payload);

  auto& out = w.buffer();
  const auto len = static_cast<std::uint32_t>(out.size());
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>(len >> (8 * (3 - i)));
  return std::move(out);
}

Message decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const std::uint32_t declared = r.u32();
  if (declared < kHeaderSize) throw DecodeError(0, "length field smaller than header");
  if (bytes.size() < declared) throw DecodeError(bytes.size(), "truncated frame");
  if (bytes.size() > declared) throw DecodeError(declared, "length mismatch");

  const std::uint8_t tag = r.u8();
  if (tag >= kNumKinds) throw DecodeError(4, "unknown kind tag");
  Message msg;
  msg.cell = CellId{r.u32()};
  msg.e2 = E2Id{r.u32()};
  msg.seq = r.u64();
  msg.payload = read_body(r, static_cast<MessageKind>(tag));
  if (r.remaining() != 0) throw DecodeError(r.pos(), "length mismatch");
  if (auto err = check_invariants(msg)) throw DecodeError(kHeaderSize, *err);
  return msg;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  int pending = -1;
  bool comment = false;
  for (char c : text) {
    if (comment) {
      if (c == '\n') comment = false;
      continue;
    }
    if (c == '#') {
      comment = true;
      continue;
    }
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') continue;
    int v;
    if (c >= '0' && c <= '9') {
      v = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      v = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      v = c - 'A' + 10;
    } else {
      throw std::invalid_argument(std::string("bad hex digit '") + c + "'");
    }
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(pending << 4 | v));
      pending = -1;
    }
  }
  if (pending >= 0) throw std::invalid_argument("odd number of hex digits");
  return out;
}

}  // namespace ztran::e2
