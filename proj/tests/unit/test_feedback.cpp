#include <algorithm>
#include <regex>
#include <set>

#include "arena/feedback.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace arena;
using arena::testing::bundled_dex;
using arena::testing::duel;
using arena::testing::random_battle;

namespace {

std::vector<std::string> texts(const std::vector<FeedbackItem>& items, FeedbackKind k) {
  std::vector<std::string> out;
  for (const auto& i : items) {
    if (i.kind == k) out.push_back(i.text);
  }
  return out;
}

bool has(const std::vector<FeedbackItem>& items, FeedbackKind k, const std::string& text) {
  const auto t = texts(items, k);
  return std::find(t.begin(), t.end(), text) != t.end();
}

int pct(int hp, int max_hp) { return hp <= 0 ? 0 : std::max(1, (100 * hp) / max_hp); }

}  // namespace

TEST_CASE("immunity by ability is reported as no effect, from both sides") {
  auto s = duel({"Kingler", {"Crabhammer", "Swords Dance", "X-Scissor", "Rock Slide"}},
                {"Toxicroak", {"Swords Dance", "Gunk Shot", "Drain Punch", "Ice Punch"}});
  const auto& rec = step(s, Action::use("Crabhammer"), Action::use("Swords Dance"));
  const auto mine = derive_feedback(rec, s, Side::A);
  const auto theirs = derive_feedback(rec, s, Side::B);
  CHECK(has(mine, FeedbackKind::Effectiveness,
            "Your Kingler's Crabhammer had no effect on the opposing Toxicroak (immune due to its ability Dry Skin)."));
  CHECK(has(theirs, FeedbackKind::Effectiveness,
            "The opposing Kingler's Crabhammer had no effect on your Toxicroak (immune due to its ability Dry Skin)."));
  CHECK(has(mine, FeedbackKind::MoveEffect, "The opposing Toxicroak's attack rose by 2 stages (Swords Dance)."));
  CHECK(mine.size() == theirs.size());
  for (const auto& f : mine) CHECK(f.turn == 1);
}

TEST_CASE("effectiveness classes and stage wording") {
  SUBCASE("super-effective") {
    auto s = duel({"Lapras", {"Ice Beam", "Hydro Pump", "Thunderbolt", "Toxic"}},
                  {"Dragonite", {"Dragon Dance", "Outrage", "Extreme Speed", "Earthquake"}});
    const auto& rec = step(s, Action::use("Ice Beam"), Action::use("Dragon Dance"));
    const auto fb = derive_feedback(rec, s, Side::A);
    CHECK(has(fb, FeedbackKind::Effectiveness,
              "Your Lapras's Ice Beam was super-effective against the opposing Dragonite (4x damage)."));
    CHECK(has(fb, FeedbackKind::MoveEffect, "The opposing Dragonite's attack and speed rose by 1 stage (Dragon Dance)."));
  }
  SUBCASE("ineffective") {
    auto s = duel({"Lapras", {"Ice Beam", "Hydro Pump", "Thunderbolt", "Toxic"}},
                  {"Vaporeon", {"Scald", "Ice Beam", "Protect", "Toxic"}});
    const auto& rec = step(s, Action::use("Ice Beam"), Action::use("Toxic"));
    CHECK(has(derive_feedback(rec, s, Side::A), FeedbackKind::Effectiveness,
              "Your Lapras's Ice Beam was ineffective against the opposing Vaporeon (0.5x damage)."));
  }
  SUBCASE("priority explains the order") {
    auto s = duel({"Snorlax", {"Body Slam", "Earthquake", "Crunch", "Return"}},
                  {"Persian", {"Return", "Night Slash", "Quick Attack", "Nasty Plot"}});
    const auto& rec = step(s, Action::use("Body Slam"), Action::use("Quick Attack"));
    CHECK(texts(derive_feedback(rec, s, Side::A), FeedbackKind::ExecutionOrder) ==
          std::vector<std::string>{"The opposing Persian moved before your Snorlax because Quick Attack has higher priority."});
  }
  SUBCASE("switches produce no order item") {
    auto s = duel({"Dragonite", {}}, {"Snorlax", {}});
    const auto& rec = step(s, Action::switch_to(2), Action::switch_to(3));
    CHECK(texts(derive_feedback(rec, s, Side::A), FeedbackKind::ExecutionOrder).empty());
  }
}

TEST_CASE("hp items agree with the record snapshots over random battles") {
  const std::regex hp_re(R"(^(Your|The opposing) (.+)'s HP went from (\d+)% to (\d+)% \(([+-])(\d+)%\)( and it fainted)?\.$)");
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    random_battle(seed, kDefaultTurnCap, [&](const BattleState& s) {
      const TurnRecord& rec = s.log.back();
      if (rec.kind == RecordKind::Start) return;
      for (Side me : {Side::A, Side::B}) {
        const auto items = derive_feedback(rec, s, me);
        // Independent expectation: every slot whose HP moved, as before/after percentages.
        std::multiset<std::tuple<bool, std::string, int, int>> expected, got;
        for (Side side : {Side::A, Side::B}) {
          for (int i = 0; i < kTeamSize; ++i) {
            const int b = rec.hp_before[idx(side)][i], a = rec.hp_after[idx(side)][i];
            if (a == b) continue;
            const auto& p = s.side(side).team[i];
            expected.insert({side == me, p.species, pct(b, p.max_hp), pct(a, p.max_hp)});
          }
        }
        for (const auto& t : texts(items, FeedbackKind::HpChange)) {
          std::smatch m;
          REQUIRE_MESSAGE(std::regex_match(t, m, hp_re), t);
          const int b = std::stoi(m[3]), a = std::stoi(m[4]);
          CHECK(std::abs(a - b) == std::stoi(m[6]));
          CHECK((m[5] == "+") == (a >= b));
          CHECK(m[7].matched == (a == 0));
          got.insert({m[1] == "Your", m[2], b, a});
          ++checked;
        }
        // Damage then an equal heal nets to zero but still gets an item; everything expected is there.
        for (const auto& e : expected) CHECK(got.count(e) >= expected.count(e));
        for (const auto& i : items) CHECK(i.turn == rec.turn);
      }
    });
  }
  CHECK(checked > 500);
}

TEST_CASE("every move hit gets exactly one effectiveness item of the matching class") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    random_battle(seed, kDefaultTurnCap, [&](const BattleState& s) {
      const TurnRecord& rec = s.log.back();
      // Phrase expected for each hit, from the event's effectiveness in quarters.
      std::vector<std::string> expected;
      for (std::size_t i = 0; i < rec.events.size(); ++i) {
        if (rec.events[i].kind != EventKind::MoveUsed) continue;
        for (std::size_t j = i + 1; j < rec.events.size() && rec.events[j].kind != EventKind::MoveUsed; ++j) {
          const Event& e = rec.events[j];
          if (e.kind == EventKind::Immune) {
            expected.push_back(" had no effect on ");
            break;
          }
          if (e.kind == EventKind::Damage && e.cause == "move" && e.effectiveness >= 0) {
            expected.push_back(e.effectiveness > 4    ? " was super-effective against "
                               : e.effectiveness == 4 ? " had standard effectiveness against "
                               : e.effectiveness > 0  ? " was ineffective against "
                                                      : " had no effect on ");
            break;
          }
        }
      }
      const auto items = texts(derive_feedback(rec, s, Side::A), FeedbackKind::Effectiveness);
      REQUIRE(items.size() == expected.size());
      for (std::size_t i = 0; i < items.size(); ++i) CHECK_MESSAGE(items[i].find(expected[i]) != std::string::npos, items[i]);
    });
  }
}
