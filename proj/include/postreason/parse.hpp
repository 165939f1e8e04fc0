#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "postreason/enums.hpp"

namespace postreason {

enum class ExtractionMethod { AnswerTag, BareValue, None };

std::string_view to_string(ExtractionMethod m);
ExtractionMethod parse_extraction_method(std::string_view s);

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const ByteSpan&) const = default;
};

/// Result of pulling a final answer out of a completion. `answer_span`
/// indexes `raw`, which is the thinking-stripped text.
struct Extraction {
  std::string raw;
  std::optional<std::string> answer;
  ExtractionMethod method = ExtractionMethod::None;
  std::optional<ByteSpan> answer_span;

  bool ok() const { return method != ExtractionMethod::None; }
};

/// Removes every <think>...</think> region (first closing tag ends a region)
/// and an unclosed <think> through end of text. Repeats until nothing changes.
std::string strip_thinking(std::string_view text);

/// strip_thinking plus, for every kept byte, its offset in the source text.
struct StrippedText {
  std::string text;
  std::vector<std::size_t> origin;

  /// Source offset just past stripped byte `end - 1`; 0 when `end` is 0.
  std::size_t source_end(std::size_t end) const;
};
StrippedText strip_thinking_mapped(std::string_view text);

struct ExtractOptions {
  /// Take the last valid "Answer:" tag instead of the first.
  bool last_occurrence = false;
};

/// Expects thinking-stripped text. An empty `valid_labels` admits A-Z.
Extraction extract_answer(std::string_view text, AnswerKind kind,
                          std::span<const std::string> valid_labels = {},
                          ExtractOptions options = {});

bool answers_match(std::string_view answer, std::string_view gold, AnswerKind kind);
bool score(const Extraction& extraction, std::string_view gold, AnswerKind kind);

/// Lowercase, collapse whitespace, strip surrounding quotes, parentheses and periods.
std::string normalize_freeform(std::string_view s);

struct Truncation {
  std::string prefix;
  std::size_t cut = 0;
};

/// Shortest prefix of `full_text` that still yields the same tagged answer:
/// through the answer value and an immediately following period. Falls back
/// to the whole text when no tag is found.
Truncation truncate_at_answer(std::string_view full_text, AnswerKind kind,
                              std::span<const std::string> valid_labels = {});

}  // namespace postreason
