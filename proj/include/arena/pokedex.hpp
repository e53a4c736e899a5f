#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace arena {

enum class Type : std::uint8_t {
  Normal,
  Fire,
  Water,
  Electric,
  Grass,
  Ice,
  Fighting,
  Poison,
  Ground,
  Flying,
  Psychic,
  Bug,
  Rock,
  Ghost,
  Dragon,
  Dark,
  Steel,
  Fairy,
};

inline constexpr std::size_t kTypeCount = 18;

std::string_view type_name(Type t);
std::optional<Type> parse_type(std::string_view name);
std::array<Type, kTypeCount> all_types();

// The four effectiveness classes used by feedback and the hallucination test.
enum class EffectClass : std::uint8_t { SuperEffective, Standard, Ineffective, NoEffect };

std::string_view effect_class_name(EffectClass c);
// 'A'..'D'
char effect_class_letter(EffectClass c);

// Exact damage multiplier in quarter units: 0, 0.25, 0.5, 1, 2, 4 map to 0, 1, 2, 4, 8, 16.
class Effectiveness {
 public:
  constexpr Effectiveness() = default;
  static constexpr Effectiveness from_quarters(int q) { return Effectiveness(q); }
  static constexpr Effectiveness neutral() { return Effectiveness(4); }
  static constexpr Effectiveness immune() { return Effectiveness(0); }
  static std::optional<Effectiveness> from_value(double v);

  constexpr int quarters() const { return q_; }
  constexpr double value() const { return q_ / 4.0; }
  constexpr bool is_immune() const { return q_ == 0; }

  EffectClass effect_class() const;

  constexpr Effectiveness operator*(Effectiveness o) const { return Effectiveness(q_ * o.q_ / 4); }
  constexpr auto operator<=>(const Effectiveness&) const = default;

 private:
  constexpr explicit Effectiveness(int q) : q_(q) {}
  int q_ = 4;
};

struct ClassCounts {
  int super_effective = 0;
  int standard = 0;
  int ineffective = 0;
  int no_effect = 0;
  bool operator==(const ClassCounts&) const = default;
};

class TypeChart {
 public:
  TypeChart();  // all 1x

  Effectiveness at(Type attack, Type defend) const {
    return cells_[static_cast<std::size_t>(attack)][static_cast<std::size_t>(defend)];
  }
  void set(Type attack, Type defend, Effectiveness e) {
    cells_[static_cast<std::size_t>(attack)][static_cast<std::size_t>(defend)] = e;
  }

  bool operator==(const TypeChart&) const = default;

 private:
  std::array<std::array<Effectiveness, kTypeCount>, kTypeCount> cells_;
};

ClassCounts validate_chart(const TypeChart& chart);

enum class Stat : std::uint8_t { Atk, Def, Spe };
std::string_view stat_name(Stat s);       // "atk"
std::string_view stat_long_name(Stat s);  // "attack"
std::optional<Stat> parse_stat(std::string_view s);

enum class StatusKind : std::uint8_t { None, Poison, Toxic, Burn, Paralysis, Sleep, Freeze };
std::string_view status_name(StatusKind s);   // "poison", "toxic", ...
std::string_view status_short(StatusKind s);  // protocol codes: psn, tox, brn, par, slp, frz
std::optional<StatusKind> parse_status(std::string_view s);

enum class Weather : std::uint8_t { None, Rain, Sun, Sandstorm };
std::string_view weather_name(Weather w);
std::optional<Weather> parse_weather(std::string_view s);

enum class Hazard : std::uint8_t { StealthRock, Spikes };
std::string_view hazard_name(Hazard h);
std::optional<Hazard> parse_hazard(std::string_view s);

struct Fraction {
  int num = 0;
  int den = 1;
  bool operator==(const Fraction&) const = default;
};

// ---- move effects ----
struct StageEffect {
  bool self = true;
  Stat stat = Stat::Atk;
  int delta = 0;
  int chance = 100;
  bool operator==(const StageEffect&) const = default;
};
struct StatusEffect {
  StatusKind status = StatusKind::None;
  int chance = 100;
  bool operator==(const StatusEffect&) const = default;
};
struct HealEffect {
  Fraction fraction;
  bool operator==(const HealEffect&) const = default;
};
struct DrainEffect {
  Fraction fraction;
  bool operator==(const DrainEffect&) const = default;
};
struct ProtectEffect {
  bool operator==(const ProtectEffect&) const = default;
};
struct HazardEffect {
  Hazard hazard = Hazard::StealthRock;
  bool operator==(const HazardEffect&) const = default;
};
// Only magnet_rise is modelled.
struct VolatileEffect {
  std::string volatile_name;
  int turns = 0;
  bool operator==(const VolatileEffect&) const = default;
};
struct HazeEffect {
  bool operator==(const HazeEffect&) const = default;
};
struct WeatherEffect {
  Weather weather = Weather::None;
  bool operator==(const WeatherEffect&) const = default;
};
struct ClearHazardsEffect {
  bool operator==(const ClearHazardsEffect&) const = default;
};

using MoveEffect = std::variant<StageEffect, StatusEffect, HealEffect, DrainEffect, ProtectEffect,
                                HazardEffect, VolatileEffect, HazeEffect, WeatherEffect,
                                ClearHazardsEffect>;

// ---- ability hooks ----
struct ImmuneTypeHook {
  Type type = Type::Normal;
  Fraction heal{0, 1};
  bool operator==(const ImmuneTypeHook&) const = default;
};
struct PinchBoostHook {
  Type type = Type::Normal;
  bool operator==(const PinchBoostHook&) const = default;
};
struct EntryStageHook {
  Stat stat = Stat::Atk;
  int delta = 0;
  bool operator==(const EntryStageHook&) const = default;
};
struct EntryWeatherHook {
  Weather weather = Weather::None;
  bool operator==(const EntryWeatherHook&) const = default;
};
struct StageDropGuardHook {
  bool operator==(const StageDropGuardHook&) const = default;
};
struct StatusImmuneHook {
  StatusKind status = StatusKind::None;
  bool operator==(const StatusImmuneHook&) const = default;
};
struct ResidualGuardHook {
  bool operator==(const ResidualGuardHook&) const = default;
};
struct ExitHealHook {
  Fraction fraction;
  bool operator==(const ExitHealHook&) const = default;
};
struct ExitCureHook {
  bool operator==(const ExitCureHook&) const = default;
};

using AbilityHook = std::variant<ImmuneTypeHook, PinchBoostHook, EntryStageHook, EntryWeatherHook,
                                 StageDropGuardHook, StatusImmuneHook, ResidualGuardHook,
                                 ExitHealHook, ExitCureHook>;

enum class MoveCategory : std::uint8_t { Attack, Status };

struct MoveDef {
  std::string name;
  Type type = Type::Normal;
  MoveCategory category = MoveCategory::Status;
  int power = 0;
  double accuracy = 1.0;
  int priority = 0;
  std::string effect_text;
  std::vector<MoveEffect> effects;

  bool is_attack() const { return category == MoveCategory::Attack; }
  int accuracy_percent() const;
  // True when the move acts on the opposing Pokémon (attacks, foe stage drops, status infliction).
  bool targets_foe() const;
  bool operator==(const MoveDef&) const = default;
};

struct AbilityDef {
  std::string name;
  std::string effect_text;
  std::vector<AbilityHook> hooks;
  bool operator==(const AbilityDef&) const = default;
};

struct SpeciesDef {
  std::string name;
  std::vector<Type> types;
  int base_hp = 1;
  int base_atk = 1;
  int base_def = 1;
  int base_spe = 1;
  std::string ability;
  std::vector<std::string> move_pool;
  bool operator==(const SpeciesDef&) const = default;
};

// Lowercase alphanumerics only ("Will-O-Wisp" -> "willowisp"), the id convention of the
// battle-server wire protocol.
std::string to_id(std::string_view name);

// Immutable store of static game data.
class Pokedex {
 public:
  // Validates cross references and invariants; throws DataError.
  static Pokedex build(TypeChart chart, std::vector<SpeciesDef> species, std::vector<MoveDef> moves,
                       std::vector<AbilityDef> abilities);

  const TypeChart& chart() const { return chart_; }
  const std::vector<SpeciesDef>& all_species() const { return species_; }
  const std::vector<MoveDef>& all_moves() const { return moves_; }
  const std::vector<AbilityDef>& all_abilities() const { return abilities_; }

  // Exact name or id match. find_* return nullptr when absent; the others throw UnknownNameError.
  const SpeciesDef* find_species(std::string_view name) const;
  const MoveDef* find_move(std::string_view name) const;
  const AbilityDef* find_ability(std::string_view name) const;
  const SpeciesDef& species(std::string_view name) const;
  const MoveDef& move(std::string_view name) const;
  const AbilityDef& ability(std::string_view name) const;

  // Position of the move in the dex file; the tie-break order for baselines.
  std::size_t move_order(std::string_view name) const;

  Effectiveness effectiveness(Type attack, std::span<const Type> defend) const;
  // Name-based form; throws UnknownNameError for unknown type names.
  Effectiveness effectiveness(std::string_view attack, std::span<const std::string> defend) const;

  // Stored prose description of a move or ability, verbatim.
  const std::string& lookup_effect(std::string_view name) const;

  const std::vector<std::string>& warnings() const { return warnings_; }

  bool operator==(const Pokedex& o) const {
    return chart_ == o.chart_ && species_ == o.species_ && moves_ == o.moves_ &&
           abilities_ == o.abilities_;
  }

 private:
  friend Pokedex load_pokedex(const std::filesystem::path& dir);

  TypeChart chart_;
  std::vector<SpeciesDef> species_;
  std::vector<MoveDef> moves_;
  std::vector<AbilityDef> abilities_;
  std::map<std::string, std::size_t, std::less<>> species_index_;
  std::map<std::string, std::size_t, std::less<>> move_index_;
  std::map<std::string, std::size_t, std::less<>> ability_index_;
  std::vector<std::string> warnings_;
};

// Loads types.json, species.jsonl, moves.jsonl, abilities.jsonl from `dir`.
Pokedex load_pokedex(const std::filesystem::path& dir);
// Writes the same four files; load(save(dex)) == dex.
void save_pokedex(const Pokedex& dex, const std::filesystem::path& dir);

TypeChart load_type_chart(const std::filesystem::path& file);

}  // namespace arena
