#include <cmath>

#include "doctest.h"
#include "ztran/errors.hpp"
#include "ztran/sdl_keys.hpp"
#include "ztran/xapp_intrusion.hpp"

using namespace ztran;
using namespace ztran::intrusion;

namespace {

KpmReport report(double offered, double snr = 20.0, std::uint8_t cqi = 10, double txp = 10.0) {
  KpmReport r;
  r.ue = UeId{1};
  r.cell = CellId{1};
  r.offered_mbps = offered;
  r.throughput_mbps = offered;
  r.snr_db = snr;
  r.cqi = cqi;
  r.tx_power_dbm = txp;
  return r;
}

DetectionConfig rate_only() {
  DetectionConfig c;
  c.gaussian_fields.clear();
  return c;
}

BehaviorProfile benign_profile(const DetectionConfig& cfg) {
  std::vector<KpmReport> h;
  for (int i = 0; i < 50; ++i) {
    h.push_back(report(10.0 + (i % 11), 18.0 + (i % 5), static_cast<std::uint8_t>(9 + i % 3), 8.0 + (i % 5)));
  }
  return build_profile(h, cfg);
}

}  // namespace

TEST_CASE("profile of {10, 20}: mean 15, sample std 7.0711") {
  DetectionConfig cfg;
  cfg.rate_field = KpmField::throughput_mbps;
  cfg.gaussian_fields = {KpmField::offered_mbps};
  const std::vector<KpmReport> h{report(10), report(20)};
  const auto p = build_profile(h, cfg);
  const auto* f = p.find(KpmField::offered_mbps);
  REQUIRE(f);
  CHECK(f->mean == doctest::Approx(15.0));
  CHECK(f->std == doctest::Approx(7.0710678).epsilon(1e-6));
  CHECK(f->lo == doctest::Approx(15.0 - 3 * 7.0710678).epsilon(1e-6));
  const auto* rate = p.find(KpmField::throughput_mbps);
  REQUIRE(rate);
  CHECK(rate->lo == 10.0);
  CHECK(rate->hi == 20.0);
  CHECK_THROWS_AS(build_profile(std::vector<KpmReport>{report(10)}, cfg), InsufficientData);
}

TEST_CASE("zero-variance field gets a point range") {
  DetectionConfig cfg;
  const std::vector<KpmReport> h(5, report(15, 20.0, 10, 10.0));
  const auto p = build_profile(h, cfg);
  CHECK(p.find(KpmField::snr_db)->lo == 20.0);
  CHECK(p.find(KpmField::snr_db)->hi == 20.0);
}

TEST_CASE("window-mean decisions at the pinned rate range") {
  const auto cfg = rate_only();
  const auto p = build_profile(std::vector<KpmReport>{report(12), report(18)}, cfg);

  const std::vector<KpmReport> inside{report(9), report(21)};
  const auto v1 = assess(p, inside, cfg);
  CHECK_FALSE(v1.flagged);
  CHECK(v1.window_used == 2);

  const std::vector<KpmReport> high{report(21), report(21)};
  const auto v2 = assess(p, high, cfg);
  CHECK(v2.flagged);
  REQUIRE(v2.offending_fields.size() == 1);
  CHECK(v2.offending_fields[0] == Offense{KpmField::offered_mbps, 21.0, 10.0, 20.0});

  // Boundaries are inside.
  CHECK_FALSE(assess(p, std::vector<KpmReport>{report(20)}, cfg).flagged);
  CHECK_FALSE(assess(p, std::vector<KpmReport>{report(10)}, cfg).flagged);

  CHECK_THROWS_AS(assess(p, std::vector<KpmReport>{}, cfg), NoVerdict);
  auto strict = cfg;
  strict.min_reports_before_decision = 3;
  CHECK_THROWS_AS(assess(p, inside, strict), NoVerdict);
}

TEST_CASE("only the last window_n reports count") {
  auto cfg = rate_only();
  cfg.window_n = 3;
  const auto p = build_profile(std::vector<KpmReport>{report(12), report(18)}, cfg);
  const std::vector<KpmReport> h{report(40), report(40), report(15), report(15), report(15)};
  const auto v = assess(p, h, cfg);
  CHECK(v.window_used == 3);
  CHECK_FALSE(v.flagged);
}

TEST_CASE("a constant 40 Mbps flood is flagged for every window size") {
  DetectionConfig cfg;
  const auto p = benign_profile(cfg);
  const std::vector<KpmReport> flood(20, report(40));
  for (std::uint32_t n : {1u, 2u, 5u, 10u, 20u}) {
    auto c = cfg;
    c.window_n = n;
    const auto v = assess(p, flood, c);
    CHECK(v.flagged);
    CHECK(v.window_used == n);
  }
}

TEST_CASE("assessment work is linear in the window length") {
  DetectionConfig cfg;
  const auto p = benign_profile(cfg);
  const std::vector<KpmReport> h(64, report(15));
  const std::uint64_t fields = p.fields.size();
  for (std::uint32_t k = 1; k <= 64; k *= 2) {
    auto c = cfg;
    c.window_n = k;
    std::uint64_t ops = 0;
    assess(p, h, c, &ops);
    CHECK(ops == fields * (k + 1));
  }
}

TEST_CASE("Wilson interval against hand-computed values") {
  // k = 0: [0, z^2 / (n + z^2)].
  const auto [lo0, hi0] = wilson_interval(0, 100);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == doctest::Approx(3.8414588 / 103.8414588).epsilon(1e-7));
  // k = 50, n = 100: centre 0.5, half width 0.0951.
  const auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo == doctest::Approx(0.4038315).epsilon(1e-6));
  CHECK(hi == doctest::Approx(0.5961685).epsilon(1e-6));
}

TEST_CASE("FPR with zero-variance radio fields and benign rates inside the range is zero") {
  DetectionConfig cfg;
  const std::vector<KpmReport> h(10, report(15));
  const auto p = build_profile(h, cfg);
  for (std::uint32_t n : {1u, 2u, 5u, 10u}) {
    const auto e = estimate_fpr(p, n, 10000, 5, cfg, BenignModel{10.0, 20.0});
    CHECK(e.flagged == 0);
    CHECK(e.fpr == 0.0);
    CHECK(e.ci_low == 0.0);
  }
}

TEST_CASE("FPR of the rate test matches the closed form for uniform rates") {
  // Benign rates U(8, 22), accepted [10, 20]. Window of one: 4/14 outside.
  // Window of two: the sum of two draws exceeds 40 with probability
  // 4^2 / (2 * 14^2), and the lower tail is symmetric.
  const auto cfg = rate_only();
  const auto p = build_profile(std::vector<KpmReport>{report(12), report(18)}, cfg);
  const std::vector<std::pair<std::uint32_t, double>> expected{{1, 4.0 / 14.0}, {2, 16.0 / 196.0}};
  for (const auto& [n, fpr] : expected) {
    const auto e = estimate_fpr(p, n, 40000, 11, cfg, BenignModel{8.0, 22.0});
    const double sigma = std::sqrt(fpr * (1 - fpr) / 40000.0);
    CHECK(std::abs(e.fpr - fpr) < 4 * sigma);
    CHECK(e.ci_low <= e.fpr);
    CHECK(e.fpr <= e.ci_high);
  }
  CHECK_THROWS(estimate_fpr(p, 1, 999, 1, cfg, BenignModel{}));
}

TEST_CASE("FPR estimates are reproducible from the seed") {
  DetectionConfig cfg;
  const auto p = benign_profile(cfg);
  const auto a = estimate_fpr(p, 5, 5000, 3, cfg, BenignModel{8.0, 22.0});
  const auto b = estimate_fpr(p, 5, 5000, 3, cfg, BenignModel{8.0, 22.0});
  CHECK(a.flagged == b.flagged);
}

TEST_CASE("profile JSON round trip") {
  DetectionConfig cfg;
  const auto p = benign_profile(cfg);
  CHECK(profile_from_json(profile_to_json(p)) == p);
}

namespace {

class FlagSink : public ric::Xapp {
 public:
  std::string name() const override { return "sink"; }
  void on_init(ric::RicContext& ctx) override { ctx.subscribe("intrusion.flag"); }
  void on_internal(ric::RicContext&, const ric::XappMessage& m) override { flags.push_back(m.body); }
  std::vector<ric::Json> flags;
};

}  // namespace

TEST_CASE("intrusion xApp flags a normal-slice UE once and skips UEs in other slices") {
  DetectionConfig cfg;
  cfg.window_n = 3;
  ric::Ric ric(CellId{1}, E2Id{1});
  auto sink_owned = std::make_unique<FlagSink>();
  auto* sink = sink_owned.get();
  ric.register_xapp(std::move(sink_owned));
  std::map<UeId, BehaviorProfile> profiles{{UeId{1}, benign_profile(cfg)}, {UeId{2}, benign_profile(cfg)}};
  ric.register_xapp(std::make_unique<IntrusionXapp>(cfg, profiles, 100));

  // Subscription request went out on init.
  const auto out = ric.take_outbox();
  REQUIRE(out.size() == 1);
  CHECK(e2::decode(out[0]).kind() == e2::MessageKind::SubscriptionRequest);

  ric.sdl().put_json(sdl::kSlices, sdl::ue_key("binding", UeId{1}), {{"slice", 1}, {"kind", "normal"}, {"prbs", 50}});
  ric.sdl().put_json(sdl::kSlices, sdl::ue_key("binding", UeId{2}),
                     {{"slice", 2}, {"kind", "verification"}, {"prbs", 2}});
  std::uint64_t seq = 1;
  for (int i = 0; i < 4; ++i) {
    for (UeId ue : {UeId{1}, UeId{2}}) {
      auto r = report(40);
      r.ue = ue;
      ric.route(e2::Message{CellId{1}, E2Id{1}, seq++, e2::KpmIndicationBody{r}});
    }
    ric.tick(static_cast<std::uint64_t>(i));
  }
  // Window of one is enough with min_reports 1; the window is cleared after a flag.
  REQUIRE(sink->flags.size() >= 1);
  for (const auto& f : sink->flags) CHECK(f["ue"] == 1);
  CHECK(ric.audit().with_action("intrusion_flag").size() == sink->flags.size());
}
