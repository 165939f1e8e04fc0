#pragma once

#include <span>
#include <string>
#include <vector>

#include "postreason/corpus.hpp"
#include "postreason/distill.hpp"
#include "postreason/jsonl.hpp"
#include "postreason/prompts.hpp"

namespace postreason {

/// Role-neutral rendering of one training conversation. `user_wrapper` and
/// `answer_format` hold the {question} and {answer} placeholders.
struct ChatTemplateSpec {
  std::string system_text;
  std::string user_wrapper = "{question}";
  std::string separator = "\n\n";
  std::string assistant_prefix;
  std::string answer_format = "Answer: {answer}.";
  std::string explanation_prefix = " Explanation: ";

  /// System prompt and suffix of a template set's post-reason strategy.
  static ChatTemplateSpec from_templates(const PromptTemplateSet& set);
  static ChatTemplateSpec from_json(const json& j);
  ordered_json to_json() const;
};

struct Segment {
  std::string text;
  bool trainable = false;

  bool operator==(const Segment&) const = default;
};

struct SftMeta {
  std::string benchmark;
  std::string mode;
  std::string generator_model;

  bool operator==(const SftMeta&) const = default;
};

struct MaskedSftRecord {
  std::string id;
  std::vector<Segment> segments;
  SftMeta meta;

  std::string full_text() const;
  bool operator==(const MaskedSftRecord&) const = default;
};

/// Segments: [system + user] masked, [prefix + answer + explanation prefix]
/// masked, [trace] trainable. Throws ValidationError for an empty trace or one
/// that itself states "Answer: <gold>".
MaskedSftRecord build_record(const TaskInstance& instance, const std::string& gold,
                             const Trace& trace, const ChatTemplateSpec& spec);

/// Empty when the record is well formed for `gold`, else the first violation.
std::string record_violation(const MaskedSftRecord& record, const std::string& gold);

ordered_json to_json(const MaskedSftRecord& record);
MaskedSftRecord sft_record_from_json(const json& j);

std::size_t emit_corpus(std::span<const MaskedSftRecord> records, const std::string& out_path);

}  // namespace postreason
