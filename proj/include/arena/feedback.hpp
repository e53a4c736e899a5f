#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "arena/battle.hpp"

namespace arena {

enum class FeedbackKind : std::uint8_t { HpChange, Effectiveness, ExecutionOrder, MoveEffect };
std::string_view feedback_kind_name(FeedbackKind k);

struct FeedbackItem {
  FeedbackKind kind = FeedbackKind::HpChange;
  int turn = 0;
  std::string text;
  bool operator==(const FeedbackItem&) const = default;
};

// Feedback for one Turn record from `perspective`'s point of view. `after` is the state right
// after the record; names are read from it (slots never change species).
std::vector<FeedbackItem> derive_feedback(const TurnRecord& record, const BattleState& after,
                                          Side perspective);

}  // namespace arena
