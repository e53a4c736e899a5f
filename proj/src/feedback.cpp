#include "arena/feedback.hpp"

#include <algorithm>
#include <map>

namespace arena {

std::string_view feedback_kind_name(FeedbackKind k) {
  switch (k) {
    case FeedbackKind::HpChange: return "hp_change";
    case FeedbackKind::Effectiveness: return "effectiveness";
    case FeedbackKind::ExecutionOrder: return "execution_order";
    case FeedbackKind::MoveEffect: return "move_effect";
  }
  return "hp_change";
}

namespace {

int percent(int hp, int max_hp) {
  if (hp <= 0) return 0;
  return std::max(1, hp * 100 / max_hp);
}

std::string status_phrase(StatusKind s) {
  switch (s) {
    case StatusKind::Poison: return "poisoned";
    case StatusKind::Toxic: return "badly poisoned";
    case StatusKind::Burn: return "burned";
    case StatusKind::Paralysis: return "paralyzed";
    case StatusKind::Sleep: return "put to sleep";
    case StatusKind::Freeze: return "frozen";
    case StatusKind::None: break;
  }
  return "affected";
}

std::string stages_word(int n) {
  const int a = std::abs(n);
  return std::to_string(a) + (a == 1 ? " stage" : " stages");
}

class Narrator {
 public:
  Narrator(const TurnRecord& rec, const BattleState& after, Side me)
      : rec_(rec), after_(after), me_(me) {}

  // "Your Charizard" / "The opposing Venusaur"
  std::string Name(Side s, int slot) const { return (s == me_ ? "Your " : "The opposing ") + species(s, slot); }
  std::string name(Side s, int slot) const { return (s == me_ ? "your " : "the opposing ") + species(s, slot); }
  std::string Poss(Side s, int slot) const { return Name(s, slot) + "'s"; }
  std::string owner(Side s) const { return s == me_ ? "your" : "the opposing"; }

  std::string species(Side s, int slot) const {
    if (slot < 0) slot = after_.side(s).active;
    return after_.side(s).team[static_cast<std::size_t>(slot)].species;
  }

  void add(FeedbackKind k, std::string text) { out_.push_back({k, rec_.turn, std::move(text)}); }

  void hp_changes() {
    std::vector<std::pair<Side, int>> touched;
    auto touch = [&](Side s, int slot) {
      if (std::find(touched.begin(), touched.end(), std::pair{s, slot}) == touched.end()) touched.emplace_back(s, slot);
    };
    for (const auto& e : rec_.events) {
      if (e.kind == EventKind::Damage || e.kind == EventKind::Heal) touch(e.side, e.slot);
    }
    for (Side s : {Side::A, Side::B}) {
      for (int i = 0; i < kTeamSize; ++i) {
        if (rec_.hp_before[idx(s)][static_cast<std::size_t>(i)] != rec_.hp_after[idx(s)][static_cast<std::size_t>(i)]) touch(s, i);
      }
    }
    for (const auto& [s, slot] : touched) {
      const int max_hp = after_.side(s).team[static_cast<std::size_t>(slot)].max_hp;
      const int b = percent(rec_.hp_before[idx(s)][static_cast<std::size_t>(slot)], max_hp);
      const int a = percent(rec_.hp_after[idx(s)][static_cast<std::size_t>(slot)], max_hp);
      std::string text = Poss(s, slot) + " HP went from " + std::to_string(b) + "% to " + std::to_string(a) + "% (" +
                         (a >= b ? "+" : "-") + std::to_string(std::abs(a - b)) + "%)";
      if (a == 0) text += " and it fainted";
      add(FeedbackKind::HpChange, text + ".");
    }
  }

  void move_outcomes() {
    const auto& ev = rec_.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      if (ev[i].kind != EventKind::MoveUsed) continue;
      const Event& used = ev[i];
      const MoveDef& mv = after_.dex->move(used.move);
      const std::string who = Poss(used.side, used.slot) + " " + mv.name;
      for (std::size_t j = i + 1; j < ev.size() && ev[j].kind != EventKind::MoveUsed; ++j) {
        const Event& e = ev[j];
        if (e.kind == EventKind::Damage && e.cause == "move" && e.move == mv.name && e.effectiveness >= 0) {
          const auto eff = Effectiveness::from_quarters(e.effectiveness);
          const std::string target = name(e.side, e.slot);
          std::string text;
          switch (eff.effect_class()) {
            case EffectClass::SuperEffective:
              text = who + " was super-effective against " + target + " (" + multiplier(eff) + " damage).";
              break;
            case EffectClass::Standard:
              text = who + " had standard effectiveness against " + target + " (1x damage).";
              break;
            case EffectClass::Ineffective:
              text = who + " was ineffective against " + target + " (" + multiplier(eff) + " damage).";
              break;
            case EffectClass::NoEffect:
              text = who + " had no effect on " + target + ".";
              break;
          }
          add(FeedbackKind::Effectiveness, text);
          break;
        }
        if (e.kind == EventKind::Immune) {
          std::string why = "immune";
          if (e.cause == "ability") {
            why = "immune due to its ability " + after_.side(e.side).team[static_cast<std::size_t>(e.slot)].ability;
          } else if (e.cause == "magnet_rise") {
            why = "immune to ground-type moves due to Magnet Rise";
          }
          add(FeedbackKind::Effectiveness, who + " had no effect on " + name(e.side, e.slot) + " (" + why + ").");
          break;
        }
        if (e.kind == EventKind::Miss) {
          add(FeedbackKind::MoveEffect, who + " missed.");
          break;
        }
        if (e.kind == EventKind::Protected) {
          add(FeedbackKind::MoveEffect, who + " was blocked by " + name(e.side, e.slot) + "'s protection.");
          break;
        }
        if (e.kind == EventKind::Fail && e.move == mv.name && e.side == used.side && e.cause != "ability") {
          add(FeedbackKind::MoveEffect, who + " failed (" + fail_reason(e.cause) + ").");
          break;
        }
      }
    }
  }

  static std::string multiplier(Effectiveness e) {
    switch (e.quarters()) {
      case 16: return "4x";
      case 8: return "2x";
      case 2: return "0.5x";
      case 1: return "0.25x";
      default: return "1x";
    }
  }

  static std::string fail_reason(const std::string& cause) {
    if (cause == "no_target") return "no target";
    if (cause == "already_statused") return "the target already has a status condition";
    if (cause == "type") return "the target's type is immune";
    if (cause == "ability") return "the target's ability prevents it";
    if (cause == "full_hp") return "HP is already full";
    if (cause == "protect_chain") return "consecutive protection failed";
    if (cause == "hazard_full") return "the hazard is already in place";
    if (cause == "already_active") return "already active";
    if (cause == "weather_active") return "that weather is already active";
    return cause;
  }

  void execution_order() {
    std::vector<const Event*> first;
    for (const auto& e : rec_.events) {
      if (e.kind != EventKind::MoveUsed && e.kind != EventKind::Cant) continue;
      if (std::none_of(first.begin(), first.end(), [&](const Event* f) { return f->side == e.side; })) first.push_back(&e);
    }
    if (first.size() != 2) return;
    const Event& a = *first[0];
    const Event& b = *first[1];
    std::string text = Name(a.side, a.slot) + " moved before " + name(b.side, b.slot);
    const auto& acts = rec_.actions;
    const auto& act_a = acts[idx(a.side)];
    const auto& act_b = acts[idx(b.side)];
    int pa = 0, pb = 0;
    if (act_a && act_a->is_move()) pa = after_.dex->move(act_a->move).priority;
    if (act_b && act_b->is_move()) pb = after_.dex->move(act_b->move).priority;
    if (pa != pb) {
      text += " because " + act_a->move + " has higher priority.";
    } else {
      text += ", so " + (a.side == me_ ? std::string("your Pokémon") : std::string("the opposing Pokémon")) +
              " is probably faster.";
    }
    add(FeedbackKind::ExecutionOrder, text);
  }

  static std::string join_and(const std::vector<std::string>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i > 0) out += (i + 1 == xs.size()) ? " and " : ", ";
      out += xs[i];
    }
    return out;
  }

  void effects() {
    const auto& ev = rec_.events;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const Event& e = ev[i];
      switch (e.kind) {
        case EventKind::Stage: {
          // Consecutive stage events on one Pokémon from one source read as a single effect.
          std::map<int, std::vector<std::string>> by_amount;
          std::vector<int> order;
          std::size_t j = i;
          for (; j < ev.size() && ev[j].kind == EventKind::Stage && ev[j].side == e.side && ev[j].slot == e.slot &&
                 ev[j].cause == e.cause;
               ++j) {
            if (!by_amount.count(ev[j].amount)) order.push_back(ev[j].amount);
            by_amount[ev[j].amount].push_back(std::string(stat_long_name(ev[j].stat)));
          }
          std::vector<std::string> parts;
          for (int amount : order) {
            const std::string stats = join_and(by_amount[amount]);
            if (amount > 0) parts.push_back(stats + " rose by " + stages_word(amount));
            else if (amount < 0) parts.push_back(stats + " fell by " + stages_word(amount));
            else parts.push_back(stats + " could not change any further");
          }
          std::string src = e.cause == "ability" ? " (ability)" : (e.cause.empty() ? "" : " (" + e.cause + ")");
          add(FeedbackKind::MoveEffect, Poss(e.side, e.slot) + " " + join_and(parts) + src + ".");
          i = j - 1;
          break;
        }
        case EventKind::Fail:
          if (e.cause == "ability" && e.move.empty()) {
            add(FeedbackKind::MoveEffect, Poss(e.side, e.slot) + " ability prevented its " +
                                              std::string(stat_long_name(e.stat)) + " from being lowered.");
          }
          break;
        case EventKind::StageReset:
          add(FeedbackKind::MoveEffect, "All stat changes of " + name(e.side, e.slot) + " were reset (" + e.move + ").");
          break;
        case EventKind::Heal: {
          const int max_hp = after_.side(e.side).team[static_cast<std::size_t>(e.slot)].max_hp;
          add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " recovered " + std::to_string(e.amount * 100 / max_hp) +
                                            "% of its HP (" + (e.cause == "ability" ? "ability" : e.cause) + ").");
          break;
        }
        case EventKind::Status:
          add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " was " + status_phrase(e.status) +
                                            (e.move.empty() ? "" : " by " + e.move) + ".");
          break;
        case EventKind::Cure:
          if (e.cause == "woke") add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " woke up.");
          else if (e.cause == "thaw") add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " thawed out.");
          else add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " was cured of its status condition.");
          break;
        case EventKind::Cant: {
          const std::string why = e.cause == "sleep" ? "it is asleep" : e.cause == "freeze" ? "it is frozen" : "it is fully paralyzed";
          add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " could not move because " + why + ".");
          break;
        }
        case EventKind::VolatileStart:
          add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " used Magnet Rise and is immune to ground-type moves for " +
                                            std::to_string(e.value) + " turns.");
          break;
        case EventKind::VolatileEnd:
          add(FeedbackKind::MoveEffect, Poss(e.side, e.slot) + " Magnet Rise wore off.");
          break;
        case EventKind::ProtectStart:
          add(FeedbackKind::MoveEffect, Name(e.side, e.slot) + " protected itself.");
          break;
        case EventKind::HazardSet:
          if (e.hazard == Hazard::StealthRock) {
            add(FeedbackKind::MoveEffect, "Stealth Rock was set on " + owner(e.side) + " side.");
          } else {
            add(FeedbackKind::MoveEffect, "Spikes were set on " + owner(e.side) + " side (" + std::to_string(e.value) +
                                              (e.value == 1 ? " layer)." : " layers)."));
          }
          break;
        case EventKind::HazardClear:
          add(FeedbackKind::MoveEffect, "Entry hazards on " + owner(e.side) + " side were cleared.");
          break;
        case EventKind::WeatherStart:
          add(FeedbackKind::MoveEffect, "The weather became " + std::string(weather_name(e.weather)) + ".");
          break;
        case EventKind::WeatherEnd:
          add(FeedbackKind::MoveEffect, "The " + std::string(weather_name(e.weather)) + " ended.");
          break;
        default:
          break;
      }
    }
  }

  std::vector<FeedbackItem> take() { return std::move(out_); }

 private:
  const TurnRecord& rec_;
  const BattleState& after_;
  Side me_;
  std::vector<FeedbackItem> out_;
};

}  // namespace

std::vector<FeedbackItem> derive_feedback(const TurnRecord& record, const BattleState& after, Side perspective) {
  Narrator n(record, after, perspective);
  n.hp_changes();
  n.move_outcomes();
  n.execution_order();
  n.effects();
  return n.take();
}

}  // namespace arena
