#include "postreason/enums.hpp"

#include "postreason/error.hpp"

namespace postreason {

std::string_view to_string(AnswerKind kind) {
  switch (kind) {
    case AnswerKind::Integer: return "integer";
    case AnswerKind::Numeric: return "numeric";
    case AnswerKind::Letter: return "letter";
    case AnswerKind::Freeform: return "freeform";
  }
  return "?";
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Eval: return "eval";
    case Split::Fewshot: return "fewshot";
    case Split::Train: return "train";
  }
  return "?";
}

std::string_view to_string(StrategyKind strategy) {
  switch (strategy) {
    case StrategyKind::Direct: return "direct";
    case StrategyKind::PostReason: return "post_reason";
    case StrategyKind::ThinkingDirect: return "thinking_direct";
    case StrategyKind::ThinkingPost: return "thinking_post";
    case StrategyKind::PostSummary: return "post_summary";
    case StrategyKind::PostConfidence: return "post_confidence";
  }
  return "?";
}

AnswerKind parse_answer_kind(std::string_view s) {
  if (s == "integer") return AnswerKind::Integer;
  if (s == "numeric") return AnswerKind::Numeric;
  if (s == "letter") return AnswerKind::Letter;
  if (s == "freeform") return AnswerKind::Freeform;
  throw ValidationError("unknown answer kind '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  if (s == "eval") return Split::Eval;
  if (s == "fewshot") return Split::Fewshot;
  if (s == "train") return Split::Train;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

StrategyKind parse_strategy(std::string_view s) {
  for (auto k : kAllStrategies) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "'");
}

bool is_thinking(StrategyKind s) {
  return s == StrategyKind::ThinkingDirect || s == StrategyKind::ThinkingPost;
}

StrategyKind textual_base(StrategyKind s) {
  switch (s) {
    case StrategyKind::ThinkingDirect: return StrategyKind::Direct;
    case StrategyKind::ThinkingPost: return StrategyKind::PostReason;
    default: return s;
  }
}

}  // namespace postreason
