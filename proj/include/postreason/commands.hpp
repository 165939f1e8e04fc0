#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "postreason/client.hpp"
#include "postreason/corpus.hpp"
#include "postreason/distill.hpp"
#include "postreason/error.hpp"
#include "postreason/prompts.hpp"
#include "postreason/score.hpp"
#include "postreason/sftgen.hpp"

namespace postreason {

/// Collected configuration problems found before any request is sent.
class PreflightError : public ConfigError {
 public:
  explicit PreflightError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct BenchmarkSpec {
  std::string id;
  std::string path;
  AnswerKind kind = AnswerKind::Freeform;
  /// Optional pool of few-shot instances.
  std::string fewshot_path;
};

/// Evaluation run configuration. Relative paths resolve against the manifest's
/// directory.
struct RunManifest {
  std::string run_id;
  std::string registry_path;
  /// Inline registry document, used when no registry path is given.
  json registry_doc;
  std::vector<std::string> models;
  std::vector<BenchmarkSpec> benchmarks;
  std::vector<std::string> strategies;
  std::size_t shots = 3;
  ShotSelection shot_selection = ShotSelection::FirstById;
  std::string exemplars_path;
  std::string templates_path;
  std::size_t max_in_flight = 4;
  std::uint64_t seed = 0;
  bool early_stop = true;
  bool last_occurrence = false;
  std::string output_dir;
  std::string replay_path;
  std::string record_path;
  /// Hash of the manifest document, stamped on every record.
  std::string hash;

  static RunManifest from_json(const json& doc, const std::string& base_dir = "");
  static RunManifest load(const std::string& path);

  ModelRegistry registry() const;
  TemplateLibrary templates() const;
  std::string run_store_path() const;
};

/// Reads every record of a run store.
std::vector<EvalRecord> load_run_store(const std::string& path);

struct EvalOptions {
  std::optional<std::string> replay_path;
  std::optional<std::string> output_dir;
  std::optional<std::size_t> max_in_flight;
  bool resume = false;
  /// Overrides the backend chosen from the manifest (tests, embedding).
  CompletionBackend* backend = nullptr;
};

struct EvalSummary {
  std::string run_id;
  std::string store_path;
  std::size_t written = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
  std::uint64_t requests = 0;
  std::vector<CellResult> cells;
};

ordered_json to_json(const EvalSummary& s);

/// Renders every pending prompt up front (pre-flight), then completes, parses
/// and scores them, appending records to the run store as they finish.
EvalSummary cmd_eval(const RunManifest& manifest, const EvalOptions& options = {});

struct RescoreSummary {
  std::size_t records = 0;
  std::size_t mismatches = 0;
  std::vector<std::string> mismatched_keys;
};

ordered_json to_json(const RescoreSummary& s);

/// Re-extracts and re-scores stored raw text against the manifest's golds.
RescoreSummary cmd_rescore(const RunManifest& manifest,
                           const std::optional<std::string>& store_path = std::nullopt);

struct ReportRequest {
  /// Run stores (.jsonl) and reported-delta fixtures (.csv).
  std::vector<std::string> inputs;
  std::string out_dir;
  std::string registry_path;
  std::string claims_path;
};

ReportFiles cmd_report(const ReportRequest& request);

struct IngestSummary {
  std::vector<std::pair<std::string, std::size_t>> loaded;
  std::size_t removed = 0;
  std::size_t mix = 0;
  std::vector<std::string> written;
};

ordered_json to_json(const IngestSummary& s);

/// Accepts either a run manifest (validates and normalizes its benchmark
/// files) or a corpus manifest (contamination filter plus training mix).
IngestSummary cmd_ingest(const std::string& manifest_path, const std::string& out_dir);

/// Sources with split "eval" filter the training sources; the composed mix
/// follows the manifest's composition targets.
struct PreparedCorpus {
  std::vector<TaskInstance> mix;
  std::vector<TaskInstance> removed;
  std::vector<std::pair<std::string, std::size_t>> loaded;
};
PreparedCorpus prepare_corpus(const CorpusManifest& manifest);

struct DistillConfig {
  std::string registry_path;
  std::string base_model;
  DistillMode mode;
  /// Either a corpus manifest or an instance file with its benchmark and kind.
  std::string corpus_path;
  std::string instances_path;
  std::string benchmark;
  AnswerKind kind = AnswerKind::Integer;
  std::string prompts_path;
  int max_attempts = 3;
  std::size_t max_in_flight = 4;
  std::string replay_path;
  std::string record_path;
  std::string output;

  static DistillConfig load(const std::string& path);
  static DistillConfig from_json(const json& doc, const std::string& base_dir = "");
};

struct DistillSummary {
  DistillationStats stats;
  std::size_t contamination_removed = 0;
  std::uint64_t requests = 0;
  std::string output;
};

ordered_json to_json(const DistillSummary& s);

DistillSummary cmd_distill(const DistillConfig& config, const EvalOptions& options = {});

struct SftConfig {
  std::string traces_path;
  std::string templates_path;
  /// Benchmark whose post-reason prompt frames every record.
  std::string template_benchmark = "gsm8k";
  std::optional<ChatTemplateSpec> chat_template;
  std::string output;

  static SftConfig load(const std::string& path);
  static SftConfig from_json(const json& doc, const std::string& base_dir = "");
};

struct SftSummary {
  std::size_t written = 0;
  std::size_t rejected = 0;
  std::string output;
};

ordered_json to_json(const SftSummary& s);

SftSummary cmd_emit_sft(const SftConfig& config);

struct MetaSummary {
  std::size_t rows = 0;
  std::size_t mismatches = 0;
  double max_abs_diff = 0.0;
  ReportFiles files;
};

ordered_json to_json(const MetaSummary& s);

/// Recomputes every reported delta in a fixture, writes recompute_check.csv
/// next to the standard report, and counts rows off by more than 0.02.
MetaSummary cmd_meta(const ReportRequest& request);

/// Directory holding the shipped data files.
std::string default_data_dir();

}  // namespace postreason
