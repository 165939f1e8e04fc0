#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postreason/corpus.hpp"
#include "postreason/enums.hpp"

namespace postreason {

/// System prompts and user-turn suffixes for one benchmark.
struct PromptTemplateSet {
  std::string benchmark;
  std::map<StrategyKind, std::string> system_prompts;
  std::map<StrategyKind, std::string> suffixes;

  bool covers(StrategyKind s) const {
    return system_prompts.contains(s) && suffixes.contains(s);
  }
  const std::string& system_for(StrategyKind s) const;
  const std::string& suffix_for(StrategyKind s) const;

  bool operator==(const PromptTemplateSet&) const = default;
};

/// Template sets keyed by template name. Benchmarks resolve to a set either by
/// exact name or through the AMC/HMMT family aliases (amc8 -> amc, ...).
class TemplateLibrary {
 public:
  static TemplateLibrary builtin();
  static TemplateLibrary load(const std::string& path);
  static TemplateLibrary from_json(const json& doc);

  ordered_json to_json() const;

  const PromptTemplateSet& for_benchmark(const std::string& benchmark) const;
  const std::map<std::string, PromptTemplateSet>& sets() const { return sets_; }

  void add(PromptTemplateSet set);

  bool operator==(const TemplateLibrary&) const = default;

 private:
  std::map<std::string, PromptTemplateSet> sets_;
};

/// Template-set name a benchmark id falls back to when no exact set exists.
std::string template_family(const std::string& benchmark);

enum class Role { User, Assistant };
std::string_view to_string(Role r);

struct Message {
  Role role = Role::User;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct PromptBundle {
  std::string system;
  std::vector<Message> messages;
  StrategyKind strategy = StrategyKind::Direct;
  std::string instance_id;
  /// Distinguishes auxiliary requests (distillation attempts, ...) that share
  /// an instance id. Empty for evaluation prompts.
  std::string tag;

  bool native_thinking() const { return is_thinking(strategy); }
  bool operator==(const PromptBundle&) const = default;
};

struct Shot {
  TaskInstance instance;
  std::string assistant_text;
};

/// Question text, plus one "Label. text" line per choice for letter kind.
std::string format_question(const TaskInstance& instance);

/// Builds the full message list: shots as alternating user/assistant turns
/// followed by the instance's user turn. Each user turn is the formatted
/// question, a newline, and the strategy suffix.
PromptBundle render(const TaskInstance& instance, StrategyKind strategy,
                    const PromptTemplateSet& templates, std::span<const Shot> shots);

/// Stored material a few-shot exemplar may need beyond its gold answer.
struct ExemplarNotes {
  std::optional<std::string> justification;
  std::optional<std::string> summary;
  std::optional<int> confidence_pct;
  std::optional<std::string> confidence_reason;
};

enum class PlaceholderPolicy { Forbid, Allow };

/// Assistant-turn text for one shot in the strategy's output format:
///   Direct          "Answer: 42."
///   PostReason      "Answer: C. Explanation: <justification>"
///   PostSummary     "Answer: C. Summary: <summary>"
///   PostConfidence  "Answer: 5. Confidence: 90%. Explanation: <reason>"
/// Missing notes raise ConfigError unless placeholders are allowed; freeform
/// instances never get placeholders.
std::string exemplar_output(const TaskInstance& instance, StrategyKind strategy,
                            const ExemplarNotes& notes = {},
                            PlaceholderPolicy policy = PlaceholderPolicy::Forbid);

/// Pre-written assistant turns, loaded from JSONL
/// {instance_id, strategy, assistant_text}.
class ExemplarStore {
 public:
  static ExemplarStore load(const std::string& path);

  void put(const std::string& instance_id, StrategyKind strategy, std::string text);
  /// Thinking strategies fall back to their textual base.
  std::optional<std::string> find(const std::string& instance_id, StrategyKind strategy) const;
  std::size_t size() const { return texts_.size(); }

 private:
  std::map<std::pair<std::string, StrategyKind>, std::string> texts_;
};

enum class ShotSelection { FirstById, SeededSample };
std::string_view to_string(ShotSelection s);
ShotSelection parse_shot_selection(std::string_view s);

/// Picks up to `k` shots from `pool`, never the instance itself. Assistant
/// text comes from `store`, else from exemplar_output with placeholders for
/// non-freeform kinds.
std::vector<Shot> select_shots(std::span<const TaskInstance> pool, const TaskInstance& instance,
                               StrategyKind strategy, const ExemplarStore& store, std::size_t k,
                               ShotSelection selection, std::uint64_t seed);

}  // namespace postreason
