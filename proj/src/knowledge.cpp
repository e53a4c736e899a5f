#include "arena/knowledge.hpp"

#include <algorithm>

namespace arena {

std::string_view kag_mode_name(KagMode m) {
  switch (m) {
    case KagMode::None: return "none";
    case KagMode::Type: return "type";
    case KagMode::Effect: return "effect";
    case KagMode::Both: return "both";
  }
  return "none";
}

std::optional<KagMode> parse_kag_mode(std::string_view s) {
  for (auto m : {KagMode::None, KagMode::Type, KagMode::Effect, KagMode::Both}) {
    if (kag_mode_name(m) == s) return m;
  }
  return std::nullopt;
}

std::string Annotation::render() const {
  if (kind == AnnotationKind::TypeRelation) return text;
  return subject + ": " + text;
}

std::vector<Type> strong_against(const Pokedex& dex, const std::vector<Type>& types) {
  std::vector<Type> out;
  for (Type target : all_types()) {
    const Type single[] = {target};
    for (Type mine : types) {
      if (dex.effectiveness(mine, single).quarters() >= 8) {
        out.push_back(target);
        break;
      }
    }
  }
  return out;
}

std::vector<Type> weak_to(const Pokedex& dex, const std::vector<Type>& types) {
  std::vector<Type> out;
  for (Type attack : all_types()) {
    if (dex.effectiveness(attack, types).quarters() >= 8) out.push_back(attack);
  }
  return out;
}

namespace {

std::string type_list(const std::vector<Type>& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i > 0) out += (i + 1 == ts.size()) ? " and " : ", ";
    out += std::string(type_name(ts[i])) + "-type";
  }
  return out;
}

Annotation relation(const Pokedex& dex, const MonView& m) {
  Annotation a;
  a.kind = AnnotationKind::TypeRelation;
  a.subject = m.species;
  a.has_relation = true;
  a.strong_against = strong_against(dex, m.types);
  a.weak_to = weak_to(dex, m.types);
  a.text = type_relation_text(m.species, a.strong_against, a.weak_to);
  return a;
}

Annotation effect(const Pokedex& dex, AnnotationKind kind, const std::string& name) {
  return {kind, name, dex.lookup_effect(name), false, {}, {}};
}

}  // namespace

std::string type_relation_text(const std::string& name, const std::vector<Type>& strong,
                               const std::vector<Type>& weak) {
  std::string s = name;
  s += strong.empty() ? " has no notable advantage" : " is strong against " + type_list(strong) + " Pokémon";
  s += weak.empty() ? " and no notable weakness." : " yet weak to the " + type_list(weak) + " moves.";
  return s;
}

std::vector<Annotation> annotate_types(const BattleView& view, const Pokedex& dex) {
  std::vector<Annotation> out;
  const MonView* foe = view.opponent.active();
  const bool any_revealed = std::any_of(view.opponent.team.begin(), view.opponent.team.end(),
                                        [](const MonView& m) { return m.revealed; });
  if (!any_revealed) return out;
  if (foe && foe->revealed && !foe->fainted) out.push_back(relation(dex, *foe));
  for (const auto& m : view.own.team) {
    if (!m.fainted) out.push_back(relation(dex, m));
  }
  for (const auto& m : view.opponent.team) {
    if (!m.revealed || m.active || m.fainted) continue;
    Annotation a;
    a.kind = AnnotationKind::TypeRelation;
    a.subject = m.species;
    std::string types;
    for (std::size_t i = 0; i < m.types.size(); ++i) types += (i ? "/" : "") + std::string(type_name(m.types[i]));
    a.text = "The opposing " + m.species + " (benched) has types " + types + ".";
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> annotate_effects(const BattleView& view, const Pokedex& dex) {
  std::vector<Annotation> out;
  for (const MonView* m : {view.own.active(), view.opponent.active()}) {
    if (!m || !m->revealed || m->fainted) continue;
    if (dex.find_ability(m->ability)) out.push_back(effect(dex, AnnotationKind::AbilityEffect, m->ability));
    for (const auto& mv : m->moves) {
      if (dex.find_move(mv)) out.push_back(effect(dex, AnnotationKind::MoveEffect, mv));
    }
  }
  return out;
}

std::vector<Annotation> annotate(const BattleView& view, const Pokedex& dex, KagMode mode) {
  std::vector<Annotation> out;
  if (mode == KagMode::Type || mode == KagMode::Both) out = annotate_types(view, dex);
  if (mode == KagMode::Effect || mode == KagMode::Both) {
    auto e = annotate_effects(view, dex);
    out.insert(out.end(), e.begin(), e.end());
  }
  return out;
}

}  // namespace arena
