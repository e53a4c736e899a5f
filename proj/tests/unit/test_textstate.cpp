#include <algorithm>
#include <map>
#include <set>

#include "arena/textstate.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace arena;
using arena::testing::bundled_dex;
using arena::testing::duel;
using arena::testing::random_battle;

namespace {

// What the opposing side has shown so far, straight from the log.
struct Shown {
  std::set<int> slots;
  std::map<int, std::set<std::string>> moves;
};

Shown shown_by(const BattleState& s, Side foe) {
  Shown out;
  for (const auto& r : s.log) {
    for (const auto& e : r.events) {
      if (e.side != foe) continue;
      if (e.kind == EventKind::SwitchIn) out.slots.insert(e.slot);
      if (e.kind == EventKind::MoveUsed) out.moves[e.slot].insert(e.move);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("labels are unique and map one to one onto legal actions") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    random_battle(seed, kDefaultTurnCap, [](const BattleState& s) {
      if (s.finished()) return;
      for (Side side : {Side::A, Side::B}) {
        const auto legal = legal_actions(s, side);
        const auto opts = action_options(s, side);
        REQUIRE(opts.size() == legal.size());
        std::set<std::string> labels;
        for (std::size_t i = 0; i < opts.size(); ++i) {
          CHECK(opts[i].action == legal[i]);
          labels.insert(opts[i].label);
          if (legal[i].is_move()) {
            CHECK(opts[i].label == "move " + legal[i].move);
            CHECK(opts[i].power == s.dex->move(legal[i].move).power);
          } else {
            CHECK(opts[i].label == "switch " + s.side(side).team[legal[i].slot].species);
          }
        }
        CHECK(labels.size() == opts.size());
      }
    });
  }
}

TEST_CASE("the view hides what the opponent has not shown") {
  int states = 0;
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    random_battle(seed, kDefaultTurnCap, [&](const BattleState& s) {
      ++states;
      for (Side me : {Side::A, Side::B}) {
        const BattleView v = view_of(s, me);
        const Shown shown = shown_by(s, other(me));
        REQUIRE(v.opponent.team.size() == kTeamSize);
        for (int i = 0; i < kTeamSize; ++i) {
          const MonView& m = v.opponent.team[i];
          const auto& truth = s.side(other(me)).team[i];
          CHECK(m.revealed == (shown.slots.count(i) == 1));
          CHECK(m.active == (i == s.side(other(me)).active));
          CHECK_FALSE(m.hp.has_value());
          CHECK_FALSE(m.max_hp.has_value());
          CHECK_FALSE(m.atk.has_value());
          if (!m.revealed) {
            CHECK(m.species.empty());
            CHECK(m.moves.empty());
            continue;
          }
          CHECK(m.species == truth.species);
          CHECK(m.hp_percent == (truth.hp <= 0 ? 0 : std::max(1, truth.hp * 100 / truth.max_hp)));
          const std::set<std::string> moves(m.moves.begin(), m.moves.end());
          const auto it = shown.moves.find(i);
          CHECK(moves == (it == shown.moves.end() ? std::set<std::string>{} : it->second));
        }
        // Own side is complete.
        for (int i = 0; i < kTeamSize; ++i) {
          const auto& truth = s.side(me).team[i];
          CHECK(v.own.team[i].hp == truth.hp);
          CHECK(v.own.team[i].moves == truth.moves);
        }
        // No unrevealed species name reaches the prompt text, unless our own team has it too.
        const std::string text = describe(v, *s.dex).render();
        for (int i = 0; i < kTeamSize; ++i) {
          if (v.opponent.team[i].revealed) continue;
          const std::string& sp = s.side(other(me)).team[i].species;
          const bool ours = std::any_of(s.side(me).team.begin(), s.side(me).team.end(),
                                        [&](const PokemonInstance& p) { return p.species == sp; });
          if (!ours) CHECK_MESSAGE(text.find(sp) == std::string::npos, sp);
        }
      }
    });
  }
  CHECK(states > 200);
}

TEST_CASE("history respects the window") {
  const auto s = random_battle(7);
  REQUIRE(s.field.turn > 8);
  for (int w : {1, 3, 5}) {
    const BattleView v = view_of(s, Side::A, {w});
    REQUIRE_FALSE(v.history.empty());
    for (const auto& h : v.history) CHECK(h.turn > s.field.turn - w);
    const auto obs = describe(v, *s.dex, {w});
    for (const auto& h : v.history) CHECK(obs.turn_history.find(h.text) != std::string::npos);
  }
  const BattleView none = view_of(s, Side::A, {0});
  CHECK(none.history.empty());
}

TEST_CASE("observation sections and the finished state") {
  auto s = duel({"Dragonite", {"Dragon Dance", "Outrage", "Extreme Speed", "Earthquake"}}, {"Snorlax", {}});
  step(s, Action::use("Dragon Dance"), Action::use("Body Slam"));
  const Observation o = describe(s, Side::A);
  const std::string text = o.render();
  for (const char* section : {"Your team:", "Opponent team:", "Field:", "Recent turns:", "Available actions:"}) {
    CHECK_MESSAGE(text.find(section) != std::string::npos, section);
  }
  CHECK(text.find("Turn 1: you used Dragon Dance; the opponent used Body Slam.") != std::string::npos);
  CHECK(text.find("- move Outrage") != std::string::npos);
  CHECK(o.find(Action::use("Outrage")) != nullptr);
  CHECK(o.find(Action::use("Hyper Beam")) == nullptr);

  end_battle(s, Side::A, FinishReason::Forfeit);
  const BattleView v = view_of(s, Side::A);
  CHECK(v.actions.empty());
  CHECK_FALSE(v.forced_switch);
  const auto j = view_to_json(v, *s.dex);
  CHECK(j["actions"].empty());
  CHECK(j["own"]["team"].size() == kTeamSize);
  for (const auto& m : j["opponent"]["team"]) {
    if (!m["revealed"].get<bool>()) CHECK(m.size() == 2);
    CHECK_FALSE(m.contains("hp"));
  }
}
