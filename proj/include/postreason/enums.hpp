#pragma once

#include <string>
#include <string_view>

namespace postreason {

enum class AnswerKind { Integer, Numeric, Letter, Freeform };
enum class Split { Eval, Fewshot, Train };

/// Prompting strategies. Thinking* reuse the textual templates of their plain
/// counterparts and differ only by enabling native reasoning on the request.
enum class StrategyKind {
  Direct,
  PostReason,
  ThinkingDirect,
  ThinkingPost,
  PostSummary,
  PostConfidence,
};

inline constexpr StrategyKind kAllStrategies[] = {
    StrategyKind::Direct,         StrategyKind::PostReason,  StrategyKind::ThinkingDirect,
    StrategyKind::ThinkingPost,   StrategyKind::PostSummary, StrategyKind::PostConfidence,
};

std::string_view to_string(AnswerKind kind);
std::string_view to_string(Split split);
std::string_view to_string(StrategyKind strategy);

AnswerKind parse_answer_kind(std::string_view s);
Split parse_split(std::string_view s);
StrategyKind parse_strategy(std::string_view s);

bool is_thinking(StrategyKind s);

/// The non-thinking strategy whose templates and output format `s` shares.
StrategyKind textual_base(StrategyKind s);

}  // namespace postreason
