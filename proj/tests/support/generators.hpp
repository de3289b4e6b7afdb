#pragma once

// Random valid E2 messages for round-trip properties.

#include <random>

#include "ztran/core_model.hpp"
#include "ztran/e2_interface.hpp"

namespace ztran::testing {

inline e2::Message random_message(std::mt19937_64& rng) {
  auto pick = [&](std::uint64_t n) { return rng() % n; };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  e2::Message m;
  m.cell = CellId{static_cast<std::uint32_t>(rng())};
  m.e2 = E2Id{static_cast<std::uint32_t>(rng())};
  m.seq = rng();
  switch (pick(e2::kNumKinds)) {
    case 0: {
      e2::AuthRequestBody b;
      b.blob.resize(e2::kAuthBlobSize);
      for (auto& x : b.blob) x = static_cast<std::uint8_t>(rng());
      m.payload = b;
      break;
    }
    case 1: {
      e2::AuthResponseBody b;
      b.ue = UeId{rng()};
      b.outcome = static_cast<AuthOutcome>(pick(3));
      b.reason = b.outcome == AuthOutcome::granted ? AuthReason::ok : static_cast<AuthReason>(pick(6));
      for (auto& x : b.token) x = static_cast<std::uint8_t>(rng());
      m.payload = b;
      break;
    }
    case 2: {
      KpmReport r;
      r.ue = UeId{rng()};
      r.cell = m.cell;
      r.seq = rng();
      r.snr_db = real(-20, 50);
      r.cqi = static_cast<std::uint8_t>(pick(16));
      r.tx_packets = pick(1u << 20);
      r.tx_power_dbm = real(-40, 23);
      r.throughput_mbps = real(0, 100);
      r.offered_mbps = real(0, 100);
      m.payload = e2::KpmIndicationBody{r};
      break;
    }
    case 3: {
      const auto total = static_cast<std::uint32_t>(1 + pick(120));
      const auto n = static_cast<std::uint32_t>(pick(std::min<std::uint32_t>(total, 8) + 1));
      e2::SliceControlBody b;
      if (n > 0) {
        const auto budgets = equal_split(total - static_cast<std::uint32_t>(pick(total - n + 1)), n);
        const auto masks = budgets_to_masks(budgets, total);
        for (std::uint32_t i = 0; i < n; ++i) {
          b.slices.push_back(SliceSpec{SliceId{static_cast<std::uint16_t>(i + 1)}, masks[i],
                                       static_cast<Priority>(pick(2)), static_cast<SliceKind>(pick(3))});
          for (std::uint64_t k = pick(3); k > 0; --k) {
            b.bindings.push_back(e2::Binding{UeId{rng()}, SliceId{static_cast<std::uint16_t>(i + 1)}});
          }
        }
      }
      m.payload = b;
      break;
    }
    case 4: {
      e2::SubscriptionRequestBody b;
      b.report_period_ms = static_cast<std::uint32_t>(10 * (1 + pick(100)));
      if (pick(2)) {
        std::vector<UeId> ues(pick(5));
        for (auto& u : ues) u = UeId{rng()};
        b.ue_filter = ues;
      }
      m.payload = b;
      break;
    }
    default:
      m.payload = e2::SubscriptionAckBody{static_cast<std::uint32_t>(10 * (1 + pick(100)))};
      break;
  }
  return m;
}

}  // namespace ztran::testing
