#include <algorithm>
#include <random>

#include "doctest.h"
#include "ztran/errors.hpp"
#include "ztran/sdl_keys.hpp"
#include "ztran/xapp_slicing.hpp"

using namespace ztran;
using namespace ztran::slicing;

namespace {

std::size_t prbs_of(const SliceManager& m, UeId ue) {
  const auto id = m.table().binding(ue);
  REQUIRE(id);
  return m.table().find(*id)->mask.popcount();
}

void grant(SliceManager& m, UeId ue, std::uint64_t frame = 0) { m.bind_ue(ue, SliceKind::normal, AuthState::granted, frame); }

}  // namespace

TEST_CASE("three commercial UEs split 100 PRBs as 34/33/33") {
  SliceManager m;
  for (std::uint64_t u = 1; u <= 3; ++u) grant(m, UeId{u});
  CHECK(prbs_of(m, UeId{1}) == 34);
  CHECK(prbs_of(m, UeId{2}) == 33);
  CHECK(prbs_of(m, UeId{3}) == 33);
  CHECK(validate_slice_table(m.table().slices, 100).ok());
  // Lowest UeId starts at PRB 0.
  CHECK(m.table().find(*m.table().binding(UeId{1}))->mask.test(0));
}

TEST_CASE("isolating one of three leaves 50/49 and a single top PRB") {
  SliceManager m;
  for (std::uint64_t u = 1; u <= 3; ++u) grant(m, UeId{u});
  const auto body = m.isolate(UeId{1}, 10);
  REQUIRE(body);
  CHECK(m.kind_of(UeId{1}) == SliceKind::restricted);
  CHECK(prbs_of(m, UeId{2}) == 50);
  CHECK(prbs_of(m, UeId{3}) == 49);
  const auto* r = m.table().find(*m.table().binding(UeId{1}));
  CHECK(r->kind == SliceKind::restricted);
  CHECK(r->mask.indices() == std::vector<std::size_t>{99});
  CHECK(m.table().epoch == 11);
  CHECK(m.changes().back() ==
        SliceChange{10, UeId{1}, m.changes().front().new_slice, r->id, ChangeCause::isolate});

  // Idempotent.
  CHECK_FALSE(m.isolate(UeId{1}, 11));
  CHECK(m.isolated_count() == 1);
}

TEST_CASE("isolated UEs share one restricted slice") {
  SliceManager m;
  for (std::uint64_t u = 1; u <= 4; ++u) grant(m, UeId{u});
  m.isolate(UeId{1}, 1);
  m.isolate(UeId{3}, 2);
  CHECK(m.table().binding(UeId{1}) == m.table().binding(UeId{3}));
  const auto restricted = std::count_if(m.table().slices.begin(), m.table().slices.end(),
                                        [](const SliceSpec& s) { return s.kind == SliceKind::restricted; });
  CHECK(restricted == 1);
  CHECK(prbs_of(m, UeId{2}) == 50);
  CHECK(prbs_of(m, UeId{4}) == 49);
}

TEST_CASE("release frees the UE's PRBs and drops the restricted slice with its last member") {
  SliceManager m;
  for (std::uint64_t u = 1; u <= 3; ++u) grant(m, UeId{u});
  m.isolate(UeId{1}, 1);
  REQUIRE(m.release(UeId{1}, 2));
  CHECK_FALSE(m.table().binding(UeId{1}));
  CHECK(m.table().slices.size() == 2);
  CHECK(prbs_of(m, UeId{2}) == 50);
  CHECK(prbs_of(m, UeId{3}) == 50);
  CHECK_FALSE(m.release(UeId{1}, 3));
}

TEST_CASE("re-binding with the same kind changes nothing") {
  SliceManager m;
  grant(m, UeId{1});
  const auto before = m.table();
  const auto n = m.changes().size();
  const auto body = m.bind_ue(UeId{1}, SliceKind::normal, AuthState::granted, 5);
  CHECK(body == before.to_control());
  CHECK(m.changes().size() == n);
}

TEST_CASE("release then re-grant restores the same PRB budgets") {
  SliceManager m;
  for (std::uint64_t u = 1; u <= 3; ++u) grant(m, UeId{u});
  std::vector<std::size_t> before;
  for (std::uint64_t u = 1; u <= 3; ++u) before.push_back(prbs_of(m, UeId{u}));
  m.release(UeId{2}, 1);
  grant(m, UeId{2}, 2);
  std::vector<std::size_t> after;
  for (std::uint64_t u = 1; u <= 3; ++u) after.push_back(prbs_of(m, UeId{u}));
  CHECK(before == after);
  CHECK(validate_slice_table(m.table().slices, 100).ok());
}

TEST_CASE("verification slices sit just below the restricted slice") {
  SliceManager m;
  grant(m, UeId{1});
  grant(m, UeId{2});
  m.isolate(UeId{2}, 1);
  m.bind_ue(UeId{3}, SliceKind::verification, AuthState::verifying, 2);
  const auto* v = m.table().find(*m.table().binding(UeId{3}));
  CHECK(v->kind == SliceKind::verification);
  CHECK(v->mask.indices() == std::vector<std::size_t>{97, 98});
  CHECK(prbs_of(m, UeId{1}) == 97);
  CHECK(m.changes().back().cause == ChangeCause::verify);
}

TEST_CASE("mission-critical reservations come first") {
  SliceManager m;
  m.set_priority(UeId{2}, UePriority{Priority::mission_critical, 20});
  grant(m, UeId{1});
  grant(m, UeId{2});
  grant(m, UeId{3});
  const auto* mc = m.table().find(*m.table().binding(UeId{2}));
  CHECK(mc->priority == Priority::mission_critical);
  CHECK(mc->mask.indices().front() == 0);
  CHECK(mc->mask.popcount() == 20);
  CHECK(prbs_of(m, UeId{1}) == 40);
  CHECK(prbs_of(m, UeId{3}) == 40);
}

TEST_CASE("policy violations") {
  SliceManager m;
  CHECK_THROWS_AS(m.bind_ue(UeId{1}, SliceKind::normal, AuthState::verifying, 0), PolicyError);
  CHECK_THROWS_AS(m.bind_ue(UeId{1}, SliceKind::verification, AuthState::granted, 0), PolicyError);
  CHECK_THROWS_AS(m.bind_ue(UeId{1}, SliceKind::restricted, AuthState::granted, 0), PolicyError);
  CHECK_THROWS_AS(m.isolate(UeId{1}, 0), PolicyError);

  // A failed layout leaves the table untouched.
  m.set_priority(UeId{1}, UePriority{Priority::mission_critical, 60});
  m.set_priority(UeId{2}, UePriority{Priority::mission_critical, 60});
  grant(m, UeId{1});
  const auto before = m.table();
  CHECK_THROWS_AS(grant(m, UeId{2}), PolicyError);
  CHECK(m.table().slices == before.slices);
  CHECK(m.table().bindings == before.bindings);
  CHECK_FALSE(m.kind_of(UeId{2}));

  CHECK_THROWS_AS(SliceManager(SlicingConfig{100, 2, RestrictedPolicy{6}}), PolicyError);
}

TEST_CASE("isolation work does not depend on how many UEs are already isolated") {
  constexpr std::uint64_t kNormal = 3;
  std::vector<std::uint64_t> ops;
  for (std::uint64_t already : {1u, 5u, 25u}) {
    SliceManager m;
    std::uint64_t next = 1;
    for (std::uint64_t i = 0; i < already; ++i) {
      grant(m, UeId{next});
      m.isolate(UeId{next}, 1);
      ++next;
    }
    const UeId target{next++};
    grant(m, target);
    for (std::uint64_t i = 0; i < kNormal; ++i) grant(m, UeId{next++});
    m.isolate(target, 2);
    CHECK(m.isolated_count() == already + 1);
    ops.push_back(m.last_ops());
  }
  CHECK(ops[0] == ops[1]);
  CHECK(ops[1] == ops[2]);
  // membership + restricted upkeep + one per normal slice
  CHECK(ops[0] == 2 + kNormal);
}

TEST_CASE("random operation sequences keep every table valid") {
  std::mt19937_64 rng(7);
  for (int run = 0; run < 50; ++run) {
    SliceManager m;
    for (std::uint64_t f = 0; f < 200; ++f) {
      const UeId ue{1 + rng() % 12};
      const auto kind = m.kind_of(ue);
      try {
        switch (rng() % 4) {
          case 0: m.bind_ue(ue, SliceKind::normal, AuthState::granted, f); break;
          case 1: m.bind_ue(ue, SliceKind::verification, AuthState::verifying, f); break;
          case 2:
            if (kind == SliceKind::normal || kind == SliceKind::restricted) m.isolate(ue, f);
            break;
          default: m.release(ue, f); break;
        }
      } catch (const PolicyError&) {
        FAIL("unexpected policy error");
      }
      const auto& t = m.table();
      REQUIRE(validate_slice_table(t.slices, 100).ok());
      std::size_t restricted = 0;
      std::vector<std::size_t> commercial;
      for (const auto& s : t.slices) {
        if (s.kind == SliceKind::restricted) {
          ++restricted;
          CHECK(s.mask.indices().back() == 99);
        }
      }
      for (const auto& [u, id] : t.bindings) {
        const auto* s = t.find(id);
        REQUIRE(s);
        if (s->kind == SliceKind::normal) commercial.push_back(s->mask.popcount());
      }
      CHECK(restricted <= 1);
      CHECK(restricted == (m.isolated_count() > 0 ? 1u : 0u));
      if (!commercial.empty()) {
        const auto [lo, hi] = std::minmax_element(commercial.begin(), commercial.end());
        CHECK(*hi - *lo <= 1);
      }
      // The E2 form encodes.
      CHECK_NOTHROW(e2::encode(e2::Message{CellId{1}, E2Id{1}, f + 1, t.to_control()}));
    }
  }
}

namespace {

class Publisher : public ric::Xapp {
 public:
  std::string name() const override { return "pub"; }
  void on_init(ric::RicContext& ctx) override { ctx_ = &ctx; }
  ric::RicContext* ctx_ = nullptr;
};

}  // namespace

TEST_CASE("slicing xApp reacts to bind, flag and release topics") {
  ric::Ric ric(CellId{1}, E2Id{1});
  auto pub_owned = std::make_unique<Publisher>();
  auto* pub = pub_owned.get();
  ric.register_xapp(std::make_unique<SlicingXapp>(SlicingConfig{}));
  ric.register_xapp(std::move(pub_owned));
  for (std::uint64_t u = 1; u <= 2; ++u) ric.sdl().put(sdl::kAuth, sdl::ue_key("state", UeId{u}), "granted");

  pub->ctx_->publish("slicing.bind", {{"ue", 1}, {"kind", "normal"}});
  pub->ctx_->publish("slicing.bind", {{"ue", 2}, {"kind", "normal"}});
  ric.dispatch();
  CHECK(ric.take_outbox().size() == 2);
  CHECK(ric.sdl().get_json(sdl::kSlices, sdl::ue_key("binding", UeId{2}))->at("prbs") == 50);

  pub->ctx_->publish("intrusion.flag", {{"ue", 1}, {"window_used", 1}, {"offending", ric::Json::array()}});
  pub->ctx_->publish("intrusion.flag", {{"ue", 1}, {"window_used", 1}, {"offending", ric::Json::array()}});
  ric.dispatch();
  const auto out = ric.take_outbox();
  REQUIRE(out.size() == 1);
  const auto body = std::get<e2::SliceControlBody>(e2::decode(out[0]).payload);
  CHECK(body.slices.size() == 2);
  CHECK(ric.sdl().get_string(sdl::kAuth, sdl::ue_key("state", UeId{1})) == "isolated");
  CHECK(ric.audit().with_action("isolate_noop").size() == 1);

  pub->ctx_->publish("slicing.release", {{"ue", 2}, {"cause", "release"}});
  ric.dispatch();
  CHECK_FALSE(ric.sdl().get(sdl::kSlices, sdl::ue_key("binding", UeId{2})));
}
