#include "ztran/core_model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ztran/errors.hpp"

namespace ztran {

PrbMask PrbMask::contiguous(std::size_t num_prbs, std::size_t first, std::size_t count) {
  if (first + count > num_prbs) {
    throw std::out_of_range("contiguous mask exceeds PRB count");
  }
  PrbMask mask(num_prbs);
  for (std::size_t i = first; i < first + count; ++i) mask.bits_[i] = true;
  return mask;
}

std::size_t PrbMask::popcount() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

bool PrbMask::intersects(const PrbMask& other) const {
  const std::size_t n = std::min(size(), other.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (bits_[i] && other.bits_[i]) return true;
  }
  return false;
}

std::vector<std::size_t> PrbMask::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::uint8_t> PrbMask::to_bytes() const {
  std::vector<std::uint8_t> out(byte_length(bits_.size()), 0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

PrbMask PrbMask::from_bytes(std::span<const std::uint8_t> bytes, std::size_t num_prbs) {
  if (bytes.size() != byte_length(num_prbs)) {
    throw std::invalid_argument("mask byte count does not match PRB count");
  }
  PrbMask mask(num_prbs);
  for (std::size_t i = 0; i < bytes.size() * 8; ++i) {
    const bool on = (bytes[i / 8] & (0x80u >> (i % 8))) != 0;
    if (i < num_prbs) {
      mask.bits_[i] = on;
    } else if (on) {
      throw std::invalid_argument("nonzero padding bit in mask");
    }
  }
  return mask;
}

std::string_view to_string(Priority p) {
  switch (p) {
    case Priority::commercial: return "commercial";
    case Priority::mission_critical: return "mission_critical";
  }
  return "?";
}

std::string_view to_string(SliceKind k) {
  switch (k) {
    case SliceKind::normal: return "normal";
    case SliceKind::verification: return "verification";
    case SliceKind::restricted: return "restricted";
  }
  return "?";
}

std::string_view to_string(KpmField f) {
  switch (f) {
    case KpmField::snr_db: return "snr_db";
    case KpmField::cqi: return "cqi";
    case KpmField::tx_packets: return "tx_packets";
    case KpmField::tx_power_dbm: return "tx_power_dbm";
    case KpmField::throughput_mbps: return "throughput_mbps";
    case KpmField::offered_mbps: return "offered_mbps";
  }
  return "?";
}

std::optional<KpmField> kpm_field_from_string(std::string_view name) {
  for (KpmField f : kAllKpmFields) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

double kpm_value(const KpmReport& r, KpmField f) {
  switch (f) {
    case KpmField::snr_db: return r.snr_db;
    case KpmField::cqi: return r.cqi;
    case KpmField::tx_packets: return static_cast<double>(r.tx_packets);
    case KpmField::tx_power_dbm: return r.tx_power_dbm;
    case KpmField::throughput_mbps: return r.throughput_mbps;
    case KpmField::offered_mbps: return r.offered_mbps;
  }
  return 0.0;
}

const FieldProfile* BehaviorProfile::find(KpmField f) const {
  for (const auto& fp : fields) {
    if (fp.field == f) return &fp;
  }
  return nullptr;
}

std::vector<std::uint32_t> equal_split(std::uint32_t total_prbs, std::uint32_t n) {
  if (n == 0 || n > total_prbs) {
    throw InvalidSplit("cannot split " + std::to_string(total_prbs) + " PRBs into " +
                       std::to_string(n) + " slices");
  }
  std::vector<std::uint32_t> budgets(n, total_prbs / n);
  const std::uint32_t remainder = total_prbs % n;
  for (std::uint32_t i = 0; i < remainder; ++i) ++budgets[i];
  return budgets;
}

std::vector<PrbMask> budgets_to_masks(std::span<const std::uint32_t> budgets,
                                      std::uint32_t total_prbs) {
  const std::uint64_t sum =
      std::accumulate(budgets.begin(), budgets.end(), std::uint64_t{0});
  if (sum > total_prbs) {
    throw OverAllocation("budgets sum to " + std::to_string(sum) + " PRBs, cell has " +
                         std::to_string(total_prbs));
  }
  std::vector<PrbMask> masks;
  masks.reserve(budgets.size());
  std::size_t next = 0;
  for (std::uint32_t b : budgets) {
    masks.push_back(PrbMask::contiguous(total_prbs, next, b));
    next += b;
  }
  return masks;
}

SliceTableReport validate_slice_table(std::span<const SliceSpec> slices, std::uint32_t total_prbs) {
  SliceTableReport report;
  for (const auto& s : slices) {
    if (s.mask.size() != total_prbs) report.wrong_length.push_back(s.id);
    report.total_popcount += s.mask.popcount();
  }
  for (std::size_t i = 0; i < slices.size(); ++i) {
    for (std::size_t j = i + 1; j < slices.size(); ++j) {
      if (slices[i].mask.intersects(slices[j].mask)) {
        report.overlapping.emplace_back(slices[i].id, slices[j].id);
      }
    }
  }
  report.over_budget = report.total_popcount > total_prbs;
  return report;
}

std::string SliceTableReport::describe() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (const auto& [a, b] : overlapping) {
    os << "slices " << a.value << " and " << b.value << " overlap; ";
  }
  for (const auto& id : wrong_length) os << "slice " << id.value << " has wrong mask length; ";
  if (over_budget) os << "total popcount " << total_popcount << " exceeds cell; ";
  std::string s = os.str();
  if (s.size() >= 2) s.resize(s.size() - 2);
  return s;
}

double frame_capacity_bits(std::size_t prbs, double per_prb_rate_mbps) {
  // Mbps * ms = kbit.
  return static_cast<double>(prbs) * (per_prb_rate_mbps * (1000.0 * kFrameMs));
}

std::string to_string(UeId id) { return std::to_string(id.value); }

std::string_view to_string(AuthOutcome o) {
  switch (o) {
    case AuthOutcome::granted: return "granted";
    case AuthOutcome::denied: return "denied";
    case AuthOutcome::revoked: return "revoked";
  }
  return "?";
}

std::string_view to_string(AuthReason r) {
  switch (r) {
    case AuthReason::ok: return "ok";
    case AuthReason::bad_tag: return "bad_tag";
    case AuthReason::unknown_token: return "unknown_token";
    case AuthReason::ran_unverified: return "ran_unverified";
    case AuthReason::expired: return "expired";
    case AuthReason::slice_mismatch: return "slice_mismatch";
  }
  return "?";
}

std::string_view to_string(AuthState s) {
  switch (s) {
    case AuthState::unauthenticated: return "unauthenticated";
    case AuthState::verifying: return "verifying";
    case AuthState::granted: return "granted";
    case AuthState::denied: return "denied";
    case AuthState::isolated: return "isolated";
  }
  return "?";
}

std::optional<AuthState> auth_state_from_string(std::string_view s) {
  for (auto st : {AuthState::unauthenticated, AuthState::verifying, AuthState::granted,
                  AuthState::denied, AuthState::isolated}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

}  // namespace ztran
