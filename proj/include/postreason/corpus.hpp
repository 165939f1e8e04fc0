#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "postreason/enums.hpp"
#include "postreason/jsonl.hpp"

namespace postreason {

struct Choice {
  std::string label;
  std::string text;

  bool operator==(const Choice&) const = default;
};

/// One benchmark item.
///
/// Invariants (checked by validate()):
///  - letter kind: choices non-empty and gold is one of the labels
///  - integer kind: gold parses as a base-10 integer
struct TaskInstance {
  std::string id;
  std::string benchmark;
  std::string question;
  std::vector<Choice> choices;
  std::string gold;
  AnswerKind kind = AnswerKind::Freeform;
  Split split = Split::Eval;

  std::vector<std::string> labels() const;
  bool operator==(const TaskInstance&) const = default;
};

/// Canonical form of a raw gold string. Takes the text after a "####" marker
/// when present and drops thousands separators for numeric kinds. Letters are
/// upper-cased.
std::string canonical_gold(std::string_view raw, AnswerKind kind);

/// Empty string when `instance` satisfies its invariants, otherwise a reason.
std::string invariant_violation(const TaskInstance& instance);
void validate(const TaskInstance& instance);

ordered_json to_json(const TaskInstance& instance);
TaskInstance instance_from_json(const json& record, const std::string& benchmark,
                                AnswerKind kind, Split split);

std::vector<TaskInstance> parse_benchmark(std::istream& in, const std::string& source_name,
                                          const std::string& benchmark, AnswerKind kind,
                                          Split split = Split::Eval);
std::vector<TaskInstance> load_benchmark(const std::string& path, const std::string& benchmark,
                                         AnswerKind kind, Split split = Split::Eval);
void write_instances(const std::string& path, std::span<const TaskInstance> instances);

/// Lowercase, strip ASCII punctuation, collapse whitespace.
std::string normalize_question(std::string_view question);

struct ContaminationResult {
  std::vector<TaskInstance> kept;
  std::vector<TaskInstance> removed;
};

ContaminationResult filter_contamination(std::span<const TaskInstance> train,
                                         std::span<const TaskInstance> eval_sets);

struct SourceSpec {
  std::string name;
  std::string path;
  std::string benchmark;
  AnswerKind kind = AnswerKind::Integer;
  Split split = Split::Train;
};

struct CompositionTarget {
  std::string source;
  std::size_t count = 0;
};

struct CorpusManifest {
  std::vector<SourceSpec> sources;
  std::vector<CompositionTarget> composition;
  std::uint64_t seed = 0;

  /// Paths in the manifest are resolved against `base_dir`.
  static CorpusManifest from_json(const json& doc, const std::string& base_dir = "");
  static CorpusManifest load(const std::string& path);
  void validate() const;
};

using InstancePools = std::map<std::string, std::vector<TaskInstance>>;

/// Samples exactly `target.count` instances without replacement from each
/// named pool. Deterministic in `seed`.
std::vector<TaskInstance> compose_training_mix(const CorpusManifest& manifest,
                                               const InstancePools& pools, std::uint64_t seed);

/// Draws uniformly from [0, bound) without modulo bias.
std::uint64_t bounded_draw(std::uint64_t (*next)(void*), void* state, std::uint64_t bound);

/// Seeded partial Fisher-Yates: the first `k` entries of a permutation of [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace postreason
