#include "arena/pokedex.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arena/error.hpp"

namespace arena {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kTypeCount> kTypeNames = {
    "normal", "fire",    "water", "electric", "grass", "ice",   "fighting", "poison", "ground",
    "flying", "psychic", "bug",   "rock",     "ghost", "dragon", "dark",    "steel",  "fairy"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view type_name(Type t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<Type> parse_type(std::string_view name) {
  const std::string l = lower(name);
  for (std::size_t i = 0; i < kTypeCount; ++i) {
    if (kTypeNames[i] == l) return static_cast<Type>(i);
  }
  return std::nullopt;
}

std::array<Type, kTypeCount> all_types() {
  std::array<Type, kTypeCount> out{};
  for (std::size_t i = 0; i < kTypeCount; ++i) out[i] = static_cast<Type>(i);
  return out;
}

std::string_view effect_class_name(EffectClass c) {
  switch (c) {
    case EffectClass::SuperEffective: return "super-effective";
    case EffectClass::Standard: return "standard";
    case EffectClass::Ineffective: return "ineffective";
    case EffectClass::NoEffect: return "no effect";
  }
  return "?";
}

char effect_class_letter(EffectClass c) { return static_cast<char>('A' + static_cast<int>(c)); }

std::optional<Effectiveness> Effectiveness::from_value(double v) {
  for (int q : {0, 1, 2, 4, 8, 16}) {
    if (std::abs(v - q / 4.0) < 1e-9) return Effectiveness(q);
  }
  return std::nullopt;
}

EffectClass Effectiveness::effect_class() const {
  if (q_ >= 8) return EffectClass::SuperEffective;
  if (q_ == 4) return EffectClass::Standard;
  if (q_ > 0) return EffectClass::Ineffective;
  return EffectClass::NoEffect;
}

TypeChart::TypeChart() {
  for (auto& row : cells_) row.fill(Effectiveness::neutral());
}

ClassCounts validate_chart(const TypeChart& chart) {
  ClassCounts c;
  for (Type a : all_types()) {
    for (Type d : all_types()) {
      switch (chart.at(a, d).effect_class()) {
        case EffectClass::SuperEffective: ++c.super_effective; break;
        case EffectClass::Standard: ++c.standard; break;
        case EffectClass::Ineffective: ++c.ineffective; break;
        case EffectClass::NoEffect: ++c.no_effect; break;
      }
    }
  }
  return c;
}

std::string_view stat_name(Stat s) {
  switch (s) {
    case Stat::Atk: return "atk";
    case Stat::Def: return "def";
    case Stat::Spe: return "spe";
  }
  return "?";
}

std::string_view stat_long_name(Stat s) {
  switch (s) {
    case Stat::Atk: return "attack";
    case Stat::Def: return "defense";
    case Stat::Spe: return "speed";
  }
  return "?";
}

std::optional<Stat> parse_stat(std::string_view s) {
  const std::string l = lower(s);
  if (l == "atk" || l == "attack" || l == "spa") return Stat::Atk;
  if (l == "def" || l == "defense" || l == "spd") return Stat::Def;
  if (l == "spe" || l == "speed") return Stat::Spe;
  return std::nullopt;
}

std::string_view status_name(StatusKind s) {
  switch (s) {
    case StatusKind::None: return "none";
    case StatusKind::Poison: return "poison";
    case StatusKind::Toxic: return "toxic";
    case StatusKind::Burn: return "burn";
    case StatusKind::Paralysis: return "paralysis";
    case StatusKind::Sleep: return "sleep";
    case StatusKind::Freeze: return "freeze";
  }
  return "?";
}

std::string_view status_short(StatusKind s) {
  switch (s) {
    case StatusKind::None: return "";
    case StatusKind::Poison: return "psn";
    case StatusKind::Toxic: return "tox";
    case StatusKind::Burn: return "brn";
    case StatusKind::Paralysis: return "par";
    case StatusKind::Sleep: return "slp";
    case StatusKind::Freeze: return "frz";
  }
  return "";
}

std::optional<StatusKind> parse_status(std::string_view s) {
  const std::string l = lower(s);
  for (auto k : {StatusKind::None, StatusKind::Poison, StatusKind::Toxic, StatusKind::Burn,
                 StatusKind::Paralysis, StatusKind::Sleep, StatusKind::Freeze}) {
    if (l == status_name(k) || (k != StatusKind::None && l == status_short(k))) return k;
  }
  return std::nullopt;
}

std::string_view weather_name(Weather w) {
  switch (w) {
    case Weather::None: return "none";
    case Weather::Rain: return "rain";
    case Weather::Sun: return "sun";
    case Weather::Sandstorm: return "sandstorm";
  }
  return "?";
}

std::optional<Weather> parse_weather(std::string_view s) {
  const std::string l = lower(s);
  if (l == "none" || l.empty()) return Weather::None;
  if (l == "rain" || l == "raindance") return Weather::Rain;
  if (l == "sun" || l == "sunnyday") return Weather::Sun;
  if (l == "sandstorm") return Weather::Sandstorm;
  return std::nullopt;
}

std::string_view hazard_name(Hazard h) {
  return h == Hazard::StealthRock ? "stealth_rock" : "spikes";
}

std::optional<Hazard> parse_hazard(std::string_view s) {
  if (s == "stealth_rock") return Hazard::StealthRock;
  if (s == "spikes") return Hazard::Spikes;
  return std::nullopt;
}

int MoveDef::accuracy_percent() const {
  return static_cast<int>(std::lround(accuracy * 100.0));
}

bool MoveDef::targets_foe() const {
  if (is_attack()) return true;
  for (const auto& e : effects) {
    if (const auto* st = std::get_if<StageEffect>(&e); st && !st->self) return true;
    if (std::holds_alternative<StatusEffect>(e)) return true;
  }
  return false;
}

std::string to_id(std::string_view name) {
  std::string out;
  for (unsigned char c : name) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pokedex

namespace {

template <typename T>
const T* find_in(const std::vector<T>& items,
                 const std::map<std::string, std::size_t, std::less<>>& index,
                 std::string_view name) {
  auto it = index.find(to_id(name));
  if (it == index.end()) return nullptr;
  return &items[it->second];
}

template <typename T>
std::map<std::string, std::size_t, std::less<>> build_index(const std::vector<T>& items,
                                                            std::string_view kind) {
  std::map<std::string, std::size_t, std::less<>> idx;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string id = to_id(items[i].name);
    if (id.empty()) throw DataError(std::string(kind), "record " + std::to_string(i) + " has an empty name");
    if (!idx.emplace(id, i).second) {
      throw DataError(std::string(kind), "duplicate name '" + items[i].name + "'");
    }
  }
  return idx;
}

}  // namespace

Pokedex Pokedex::build(TypeChart chart, std::vector<SpeciesDef> species, std::vector<MoveDef> moves,
                       std::vector<AbilityDef> abilities) {
  Pokedex dex;
  dex.chart_ = std::move(chart);
  dex.species_ = std::move(species);
  dex.moves_ = std::move(moves);
  dex.abilities_ = std::move(abilities);
  dex.species_index_ = build_index(dex.species_, "species");
  dex.move_index_ = build_index(dex.moves_, "moves");
  dex.ability_index_ = build_index(dex.abilities_, "abilities");

  for (const auto& m : dex.moves_) {
    if (m.is_attack() && m.power <= 0) throw DataError("moves", m.name + ": attack move needs power > 0");
    if (!m.is_attack() && m.power != 0) throw DataError("moves", m.name + ": status move needs power 0");
    if (!(m.accuracy > 0.0 && m.accuracy <= 1.0)) throw DataError("moves", m.name + ": accuracy must be in (0,1]");
  }
  for (const auto& s : dex.species_) {
    if (s.types.empty() || s.types.size() > 2) throw DataError("species", s.name + ": needs 1-2 types");
    if (s.types.size() == 2 && s.types[0] == s.types[1]) throw DataError("species", s.name + ": types must be distinct");
    if (s.base_hp <= 0 || s.base_atk <= 0 || s.base_def <= 0 || s.base_spe <= 0) {
      throw DataError("species", s.name + ": base stats must be positive");
    }
    if (!dex.find_ability(s.ability)) {
      throw DataError("species", s.name + ": dangling reference to ability '" + s.ability + "'");
    }
    std::set<std::string> seen;
    for (const auto& mv : s.move_pool) {
      if (!dex.find_move(mv)) throw DataError("species", s.name + ": dangling reference to move '" + mv + "'");
      if (!seen.insert(to_id(mv)).second) throw DataError("species", s.name + ": duplicate move '" + mv + "'");
    }
    if (seen.size() < 4) throw DataError("species", s.name + ": move pool needs at least 4 moves");
  }
  return dex;
}

const SpeciesDef* Pokedex::find_species(std::string_view name) const {
  return find_in(species_, species_index_, name);
}
const MoveDef* Pokedex::find_move(std::string_view name) const {
  return find_in(moves_, move_index_, name);
}
const AbilityDef* Pokedex::find_ability(std::string_view name) const {
  return find_in(abilities_, ability_index_, name);
}

const SpeciesDef& Pokedex::species(std::string_view name) const {
  if (const auto* s = find_species(name)) return *s;
  throw UnknownNameError(std::string(name));
}
const MoveDef& Pokedex::move(std::string_view name) const {
  if (const auto* m = find_move(name)) return *m;
  throw UnknownNameError(std::string(name));
}
const AbilityDef& Pokedex::ability(std::string_view name) const {
  if (const auto* a = find_ability(name)) return *a;
  throw UnknownNameError(std::string(name));
}

std::size_t Pokedex::move_order(std::string_view name) const {
  auto it = move_index_.find(to_id(name));
  if (it == move_index_.end()) throw UnknownNameError(std::string(name));
  return it->second;
}

Effectiveness Pokedex::effectiveness(Type attack, std::span<const Type> defend) const {
  Effectiveness e = Effectiveness::neutral();
  for (Type d : defend) e = e * chart_.at(attack, d);
  return e;
}

Effectiveness Pokedex::effectiveness(std::string_view attack,
                                     std::span<const std::string> defend) const {
  auto a = parse_type(attack);
  if (!a) throw UnknownNameError(std::string(attack));
  std::vector<Type> ds;
  for (const auto& d : defend) {
    auto t = parse_type(d);
    if (!t) throw UnknownNameError(d);
    ds.push_back(*t);
  }
  return effectiveness(*a, ds);
}

const std::string& Pokedex::lookup_effect(std::string_view name) const {
  if (const auto* m = find_move(name)) return m->effect_text;
  if (const auto* a = find_ability(name)) return a->effect_text;
  throw UnknownNameError(std::string(name));
}

// ---------------------------------------------------------------------------
// Loading

namespace {

struct RecordContext {
  std::string file;
  int line = 0;
  std::vector<std::string>* warnings = nullptr;

  std::string where(std::string_view field = {}) const {
    std::string s = file + ":" + std::to_string(line);
    if (!field.empty()) s += ":" + std::string(field);
    return s;
  }
  [[noreturn]] void fail(std::string_view field, const std::string& msg) const {
    throw DataError(where(field), msg);
  }
};

const json& require(const json& rec, const char* field, const RecordContext& ctx) {
  auto it = rec.find(field);
  if (it == rec.end()) ctx.fail(field, "missing field");
  return *it;
}

std::string get_string(const json& rec, const char* field, const RecordContext& ctx) {
  const json& v = require(rec, field, ctx);
  if (!v.is_string()) ctx.fail(field, "expected string");
  return v.get<std::string>();
}

int get_int(const json& rec, const char* field, const RecordContext& ctx) {
  const json& v = require(rec, field, ctx);
  if (!v.is_number_integer()) ctx.fail(field, "expected integer");
  return v.get<int>();
}

Type get_type(const json& v, const char* field, const RecordContext& ctx) {
  if (!v.is_string()) ctx.fail(field, "expected type name");
  auto t = parse_type(v.get<std::string>());
  if (!t) ctx.fail(field, "dangling reference to unknown type '" + v.get<std::string>() + "'");
  return *t;
}

Fraction get_fraction(const json& v, const char* field, const RecordContext& ctx) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer() ||
      v[1].get<int>() <= 0) {
    ctx.fail(field, "expected [numerator, denominator]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

void warn_unknown(const json& rec, std::initializer_list<std::string_view> known,
                  const RecordContext& ctx) {
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end() && ctx.warnings) {
      ctx.warnings->push_back(ctx.where(it.key()) + ": ignoring unknown field");
    }
  }
}

MoveEffect parse_move_effect(const json& e, const RecordContext& ctx) {
  if (!e.is_object()) ctx.fail("effects", "effect must be an object");
  const std::string kind = get_string(e, "kind", ctx);
  if (kind == "stage") {
    StageEffect s;
    const std::string target = get_string(e, "target", ctx);
    if (target != "self" && target != "foe") ctx.fail("effects.target", "expected self|foe");
    s.self = target == "self";
    auto st = parse_stat(get_string(e, "stat", ctx));
    if (!st) ctx.fail("effects.stat", "unknown stat");
    s.stat = *st;
    s.delta = get_int(e, "delta", ctx);
    s.chance = e.contains("chance") ? get_int(e, "chance", ctx) : 100;
    return s;
  }
  if (kind == "status") {
    StatusEffect s;
    auto st = parse_status(get_string(e, "status", ctx));
    if (!st || *st == StatusKind::None) ctx.fail("effects.status", "unknown status");
    s.status = *st;
    s.chance = e.contains("chance") ? get_int(e, "chance", ctx) : 100;
    return s;
  }
  if (kind == "heal") return HealEffect{get_fraction(require(e, "fraction", ctx), "effects.fraction", ctx)};
  if (kind == "drain") return DrainEffect{get_fraction(require(e, "fraction", ctx), "effects.fraction", ctx)};
  if (kind == "protect") return ProtectEffect{};
  if (kind == "haze") return HazeEffect{};
  if (kind == "clear_hazards") return ClearHazardsEffect{};
  if (kind == "hazard") {
    auto h = parse_hazard(get_string(e, "hazard", ctx));
    if (!h) ctx.fail("effects.hazard", "unknown hazard");
    return HazardEffect{*h};
  }
  if (kind == "weather") {
    auto w = parse_weather(get_string(e, "weather", ctx));
    if (!w || *w == Weather::None) ctx.fail("effects.weather", "unknown weather");
    return WeatherEffect{*w};
  }
  if (kind == "volatile") {
    VolatileEffect v{get_string(e, "volatile", ctx), get_int(e, "turns", ctx)};
    if (v.volatile_name != "magnet_rise") ctx.fail("effects.volatile", "unsupported volatile '" + v.volatile_name + "'");
    return v;
  }
  ctx.fail("effects.kind", "unknown effect kind '" + kind + "'");
}

AbilityHook parse_hook(const json& h, const RecordContext& ctx) {
  if (!h.is_object()) ctx.fail("hooks", "hook must be an object");
  const std::string kind = get_string(h, "kind", ctx);
  if (kind == "immune_type") {
    ImmuneTypeHook out{get_type(require(h, "type", ctx), "hooks.type", ctx), {0, 1}};
    if (h.contains("heal")) out.heal = get_fraction(h["heal"], "hooks.heal", ctx);
    return out;
  }
  if (kind == "pinch_boost") return PinchBoostHook{get_type(require(h, "type", ctx), "hooks.type", ctx)};
  if (kind == "entry_stage") {
    auto st = parse_stat(get_string(h, "stat", ctx));
    if (!st) ctx.fail("hooks.stat", "unknown stat");
    return EntryStageHook{*st, get_int(h, "delta", ctx)};
  }
  if (kind == "entry_weather") {
    auto w = parse_weather(get_string(h, "weather", ctx));
    if (!w || *w == Weather::None) ctx.fail("hooks.weather", "unknown weather");
    return EntryWeatherHook{*w};
  }
  if (kind == "stage_drop_guard") return StageDropGuardHook{};
  if (kind == "status_immune") {
    auto st = parse_status(get_string(h, "status", ctx));
    if (!st || *st == StatusKind::None) ctx.fail("hooks.status", "unknown status");
    return StatusImmuneHook{*st};
  }
  if (kind == "residual_guard") return ResidualGuardHook{};
  if (kind == "exit_heal") return ExitHealHook{get_fraction(require(h, "fraction", ctx), "hooks.fraction", ctx)};
  if (kind == "exit_cure") return ExitCureHook{};
  ctx.fail("hooks.kind", "unknown hook kind '" + kind + "'");
}

// Reads a JSON-lines file. The first non-blank line may be a header object with a "schema"
// field; every other non-blank line is one record.
template <typename F>
void for_each_record(const std::filesystem::path& file, std::string_view schema,
                     std::vector<std::string>& warnings, F&& fn) {
  std::ifstream in(file);
  if (!in) throw DataError(file.filename().string(), "cannot open file");
  std::string line;
  RecordContext ctx{file.filename().string(), 0, &warnings};
  bool first = true;
  while (std::getline(in, line)) {
    ++ctx.line;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(ctx.where(), std::string("malformed record: ") + e.what());
    }
    if (!rec.is_object()) ctx.fail({}, "record must be an object");
    if (first && rec.contains("schema")) {
      first = false;
      if (!rec["schema"].is_string() || rec["schema"].get<std::string>() != schema) {
        ctx.fail("schema", "expected schema '" + std::string(schema) + "'");
      }
      continue;
    }
    first = false;
    fn(rec, ctx);
  }
}

}  // namespace

TypeChart load_type_chart(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError(file.filename().string(), "missing type chart");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(file.filename().string(), std::string("malformed type chart: ") + e.what());
  }
  RecordContext ctx{file.filename().string(), 1, nullptr};
  const json& types = require(doc, "types", ctx);
  const json& chart = require(doc, "chart", ctx);
  if (!types.is_array() || types.size() != kTypeCount) {
    ctx.fail("types", "chart dimension must be 18x18 (got " + std::to_string(types.size()) + " types)");
  }
  if (!chart.is_object() || chart.size() != kTypeCount) {
    ctx.fail("chart", "chart dimension must be 18x18 (got " + std::to_string(chart.size()) + " rows)");
  }
  TypeChart out;
  for (const auto& [atk_name, row] : chart.items()) {
    auto atk = parse_type(atk_name);
    if (!atk) ctx.fail("chart", "unknown attack type '" + atk_name + "'");
    if (!row.is_object() || row.size() != kTypeCount) {
      ctx.fail("chart." + atk_name, "chart dimension must be 18x18");
    }
    for (const auto& [def_name, v] : row.items()) {
      auto def = parse_type(def_name);
      if (!def) ctx.fail("chart." + atk_name, "unknown defend type '" + def_name + "'");
      if (!v.is_number()) ctx.fail("chart." + atk_name + "." + def_name, "expected number");
      auto e = Effectiveness::from_value(v.get<double>());
      if (!e || !(e->quarters() == 0 || e->quarters() == 2 || e->quarters() == 4 || e->quarters() == 8)) {
        ctx.fail("chart." + atk_name + "." + def_name, "entry must be one of 0, 0.5, 1, 2");
      }
      out.set(*atk, *def, *e);
    }
  }
  return out;
}

Pokedex load_pokedex(const std::filesystem::path& dir) {
  const auto types_file = dir / "types.json";
  if (!std::filesystem::exists(types_file)) throw DataError(dir.string(), "missing type chart");
  TypeChart chart = load_type_chart(types_file);
  std::vector<std::string> warnings;

  std::vector<AbilityDef> abilities;
  for_each_record(dir / "abilities.jsonl", "arena.abilities/1", warnings,
                  [&](const json& rec, const RecordContext& ctx) {
                    warn_unknown(rec, {"name", "effect_text", "hooks"}, ctx);
                    AbilityDef a{get_string(rec, "name", ctx), get_string(rec, "effect_text", ctx), {}};
                    if (rec.contains("hooks")) {
                      if (!rec["hooks"].is_array()) ctx.fail("hooks", "expected array");
                      for (const auto& h : rec["hooks"]) a.hooks.push_back(parse_hook(h, ctx));
                    }
                    abilities.push_back(std::move(a));
                  });

  std::vector<MoveDef> moves;
  for_each_record(dir / "moves.jsonl", "arena.moves/1", warnings,
                  [&](const json& rec, const RecordContext& ctx) {
                    warn_unknown(rec, {"name", "type", "category", "power", "accuracy", "priority",
                                       "effect_text", "effects"},
                                 ctx);
                    MoveDef m;
                    m.name = get_string(rec, "name", ctx);
                    m.type = get_type(require(rec, "type", ctx), "type", ctx);
                    const std::string cat = get_string(rec, "category", ctx);
                    if (cat == "attack") m.category = MoveCategory::Attack;
                    else if (cat == "status") m.category = MoveCategory::Status;
                    else ctx.fail("category", "expected attack|status");
                    m.power = get_int(rec, "power", ctx);
                    const json& acc = require(rec, "accuracy", ctx);
                    if (!acc.is_number()) ctx.fail("accuracy", "expected number");
                    m.accuracy = acc.get<double>();
                    if (!(m.accuracy > 0.0 && m.accuracy <= 1.0)) ctx.fail("accuracy", "must be in (0,1]");
                    m.priority = rec.contains("priority") ? get_int(rec, "priority", ctx) : 0;
                    m.effect_text = get_string(rec, "effect_text", ctx);
                    if (rec.contains("effects")) {
                      if (!rec["effects"].is_array()) ctx.fail("effects", "expected array");
                      for (const auto& e : rec["effects"]) m.effects.push_back(parse_move_effect(e, ctx));
                    }
                    if (m.is_attack() != (m.power > 0)) ctx.fail("power", "attack moves need power > 0, status moves power 0");
                    moves.push_back(std::move(m));
                  });

  std::vector<SpeciesDef> species;
  for_each_record(dir / "species.jsonl", "arena.species/1", warnings,
                  [&](const json& rec, const RecordContext& ctx) {
                    warn_unknown(rec, {"name", "types", "base_hp", "base_atk", "base_def", "base_spe",
                                       "ability", "move_pool"},
                                 ctx);
                    SpeciesDef s;
                    s.name = get_string(rec, "name", ctx);
                    const json& ts = require(rec, "types", ctx);
                    if (!ts.is_array() || ts.empty() || ts.size() > 2) ctx.fail("types", "expected 1-2 types");
                    for (const auto& t : ts) s.types.push_back(get_type(t, "types", ctx));
                    s.base_hp = get_int(rec, "base_hp", ctx);
                    s.base_atk = get_int(rec, "base_atk", ctx);
                    s.base_def = get_int(rec, "base_def", ctx);
                    s.base_spe = get_int(rec, "base_spe", ctx);
                    s.ability = get_string(rec, "ability", ctx);
                    const json& pool = require(rec, "move_pool", ctx);
                    if (!pool.is_array()) ctx.fail("move_pool", "expected array");
                    for (const auto& m : pool) {
                      if (!m.is_string()) ctx.fail("move_pool", "expected move names");
                      s.move_pool.push_back(m.get<std::string>());
                    }
                    species.push_back(std::move(s));
                  });

  Pokedex dex = Pokedex::build(std::move(chart), std::move(species), std::move(moves), std::move(abilities));
  dex.warnings_ = std::move(warnings);
  return dex;
}

// ---------------------------------------------------------------------------
// Saving

namespace {

json fraction_json(Fraction f) { return json::array({f.num, f.den}); }

json effect_json(const MoveEffect& e) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, StageEffect>) {
          return {{"kind", "stage"}, {"target", v.self ? "self" : "foe"}, {"stat", stat_name(v.stat)},
                  {"delta", v.delta}, {"chance", v.chance}};
        } else if constexpr (std::is_same_v<T, StatusEffect>) {
          return {{"kind", "status"}, {"status", status_name(v.status)}, {"chance", v.chance}};
        } else if constexpr (std::is_same_v<T, HealEffect>) {
          return {{"kind", "heal"}, {"fraction", fraction_json(v.fraction)}};
        } else if constexpr (std::is_same_v<T, DrainEffect>) {
          return {{"kind", "drain"}, {"fraction", fraction_json(v.fraction)}};
        } else if constexpr (std::is_same_v<T, ProtectEffect>) {
          return {{"kind", "protect"}};
        } else if constexpr (std::is_same_v<T, HazardEffect>) {
          return {{"kind", "hazard"}, {"hazard", hazard_name(v.hazard)}};
        } else if constexpr (std::is_same_v<T, VolatileEffect>) {
          return {{"kind", "volatile"}, {"volatile", v.volatile_name}, {"turns", v.turns}};
        } else if constexpr (std::is_same_v<T, HazeEffect>) {
          return {{"kind", "haze"}};
        } else if constexpr (std::is_same_v<T, WeatherEffect>) {
          return {{"kind", "weather"}, {"weather", weather_name(v.weather)}};
        } else {
          return {{"kind", "clear_hazards"}};
        }
      },
      e);
}

json hook_json(const AbilityHook& h) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ImmuneTypeHook>) {
          return {{"kind", "immune_type"}, {"type", type_name(v.type)}, {"heal", fraction_json(v.heal)}};
        } else if constexpr (std::is_same_v<T, PinchBoostHook>) {
          return {{"kind", "pinch_boost"}, {"type", type_name(v.type)}};
        } else if constexpr (std::is_same_v<T, EntryStageHook>) {
          return {{"kind", "entry_stage"}, {"stat", stat_name(v.stat)}, {"delta", v.delta}};
        } else if constexpr (std::is_same_v<T, EntryWeatherHook>) {
          return {{"kind", "entry_weather"}, {"weather", weather_name(v.weather)}};
        } else if constexpr (std::is_same_v<T, StageDropGuardHook>) {
          return {{"kind", "stage_drop_guard"}};
        } else if constexpr (std::is_same_v<T, StatusImmuneHook>) {
          return {{"kind", "status_immune"}, {"status", status_name(v.status)}};
        } else if constexpr (std::is_same_v<T, ResidualGuardHook>) {
          return {{"kind", "residual_guard"}};
        } else if constexpr (std::is_same_v<T, ExitHealHook>) {
          return {{"kind", "exit_heal"}, {"fraction", fraction_json(v.fraction)}};
        } else {
          return {{"kind", "exit_cure"}};
        }
      },
      h);
}

}  // namespace

void save_pokedex(const Pokedex& dex, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "types.json");
    json types = json::array();
    json chart = json::object();
    for (Type a : all_types()) {
      types.push_back(type_name(a));
      json row = json::object();
      for (Type d : all_types()) row[std::string(type_name(d))] = dex.chart().at(a, d).value();
      chart[std::string(type_name(a))] = row;
    }
    out << json{{"schema", "arena.types/1"}, {"types", types}, {"chart", chart}}.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "abilities.jsonl");
    out << json{{"schema", "arena.abilities/1"}}.dump() << "\n";
    for (const auto& a : dex.all_abilities()) {
      json hooks = json::array();
      for (const auto& h : a.hooks) hooks.push_back(hook_json(h));
      out << json{{"name", a.name}, {"effect_text", a.effect_text}, {"hooks", hooks}}.dump() << "\n";
    }
  }
  {
    std::ofstream out(dir / "moves.jsonl");
    out << json{{"schema", "arena.moves/1"}}.dump() << "\n";
    for (const auto& m : dex.all_moves()) {
      json effects = json::array();
      for (const auto& e : m.effects) effects.push_back(effect_json(e));
      out << json{{"name", m.name},
                  {"type", type_name(m.type)},
                  {"category", m.is_attack() ? "attack" : "status"},
                  {"power", m.power},
                  {"accuracy", m.accuracy},
                  {"priority", m.priority},
                  {"effects", effects},
                  {"effect_text", m.effect_text}}
                 .dump()
          << "\n";
    }
  }
  {
    std::ofstream out(dir / "species.jsonl");
    out << json{{"schema", "arena.species/1"}}.dump() << "\n";
    for (const auto& s : dex.all_species()) {
      json types = json::array();
      for (Type t : s.types) types.push_back(type_name(t));
      out << json{{"name", s.name},       {"types", types},         {"base_hp", s.base_hp},
                  {"base_atk", s.base_atk}, {"base_def", s.base_def}, {"base_spe", s.base_spe},
                  {"ability", s.ability},   {"move_pool", s.move_pool}}
                 .dump()
          << "\n";
    }
  }
}

}  // namespace arena
