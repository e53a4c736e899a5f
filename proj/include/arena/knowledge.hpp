#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arena/textstate.hpp"

namespace arena {

enum class KagMode : std::uint8_t { None, Type, Effect, Both };
std::string_view kag_mode_name(KagMode m);
std::optional<KagMode> parse_kag_mode(std::string_view s);

enum class AnnotationKind : std::uint8_t { TypeRelation, MoveEffect, AbilityEffect };

struct Annotation {
  AnnotationKind kind = AnnotationKind::TypeRelation;
  std::string subject;  // Pokémon, move or ability name
  std::string text;
  // TypeRelation only. A type listing for a benched opponent has neither clause.
  bool has_relation = false;
  std::vector<Type> strong_against;
  std::vector<Type> weak_to;

  // Line used in the prompt's knowledge block.
  std::string render() const;
};

// Types T that some type of the Pokémon hits for at least 2x.
std::vector<Type> strong_against(const Pokedex& dex, const std::vector<Type>& types);
// Attack types dealing at least 2x to the Pokémon.
std::vector<Type> weak_to(const Pokedex& dex, const std::vector<Type>& types);

std::string type_relation_text(const std::string& name, const std::vector<Type>& strong,
                               const std::vector<Type>& weak);

// Opponent's active Pokémon and every unfainted Pokémon of ours; benched revealed opponents get a
// one-line type listing. Empty when no opposing Pokémon is revealed.
std::vector<Annotation> annotate_types(const BattleView& view, const Pokedex& dex);

// Ability and move effect texts for both on-field Pokémon (opponent: revealed moves only).
std::vector<Annotation> annotate_effects(const BattleView& view, const Pokedex& dex);

std::vector<Annotation> annotate(const BattleView& view, const Pokedex& dex, KagMode mode);

}  // namespace arena
