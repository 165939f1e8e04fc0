#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postreason/client.hpp"
#include "postreason/corpus.hpp"
#include "postreason/jsonl.hpp"

namespace postreason {

enum class DistillModeKind { Expert, Rephrased, SelfDistill };
std::string_view to_string(DistillModeKind k);
DistillModeKind parse_distill_mode(std::string_view s);

struct DistillMode {
  DistillModeKind kind = DistillModeKind::SelfDistill;
  /// Required for Expert and Rephrased.
  std::optional<std::string> expert_model;

  void validate() const;
};

struct Trace {
  std::string instance_id;
  DistillModeKind mode = DistillModeKind::SelfDistill;
  std::string text;
  std::string generator_model;
  int attempt = 1;
};

enum class RejectReason { TooShort, AnswerLeak, Empty, GenerationError };
std::string_view to_string(RejectReason r);

struct Verdict {
  std::vector<RejectReason> reasons;

  bool accepted() const { return reasons.empty(); }
};

struct TraceFilter {
  std::size_t min_words = 20;
  /// The gold may not appear among the first `leak_window` words.
  std::size_t leak_window = 15;
};

/// Blank text is only `empty`. Otherwise collects too_short and answer_leak.
Verdict validate_trace(std::string_view text, std::string_view gold, const TraceFilter& filter = {});

/// Versioned prompt text for trace generation. Placeholders: {question},
/// {answer}, and {trace} in the rephrase prompt.
struct DistillPrompts {
  int version = 1;
  std::string system;
  std::string generate;
  std::string rephrase_system;
  std::string rephrase;

  static DistillPrompts builtin();
  static DistillPrompts load(const std::string& path);
  static DistillPrompts from_json(const json& doc);
  ordered_json to_json() const;

  bool operator==(const DistillPrompts&) const = default;
};

struct DistillContext {
  const ModelRegistryEntry* base = nullptr;
  /// Required for Expert and Rephrased.
  const ModelRegistryEntry* expert = nullptr;
  DistillPrompts prompts = DistillPrompts::builtin();
  TraceFilter filter;
  int max_attempts = 3;
};

struct TraceOutcome {
  std::optional<Trace> trace;
  /// One verdict per attempt made.
  std::vector<Verdict> attempts;
};

PromptBundle distill_bundle(const TaskInstance& instance, DistillModeKind mode, int attempt,
                            const DistillPrompts& prompts,
                            const std::optional<std::string>& reference_trace = std::nullopt);

/// Regenerates until a trace passes the filter or attempts run out; an
/// exhausted instance comes back without a trace.
TraceOutcome generate_trace(const TaskInstance& instance, const DistillMode& mode,
                            CompletionBackend& backend, const DistillContext& ctx);

struct DistillationStats {
  std::size_t input = 0;
  std::size_t accepted = 0;
  std::size_t dropped = 0;
  /// Rejections per reason, over every attempt.
  std::map<RejectReason, std::size_t> reasons;
  std::vector<std::string> dropped_ids;
};

ordered_json to_json(const DistillationStats& s);

ordered_json trace_record(const TaskInstance& instance, const Trace& trace);

/// Distills every instance with up to `max_in_flight` instances in progress and
/// writes accepted traces to `out_path` in input order.
DistillationStats run_distillation(std::span<const TaskInstance> instances, const DistillMode& mode,
                                   CompletionBackend& backend, const DistillContext& ctx,
                                   const std::string& out_path, std::size_t max_in_flight = 1);

}  // namespace postreason
