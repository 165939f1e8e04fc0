#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "postreason/client.hpp"
#include "postreason/enums.hpp"
#include "postreason/jsonl.hpp"
#include "postreason/parse.hpp"

namespace postreason {

/// One inference outcome as stored in a run file.
struct EvalRecord {
  std::string run_id;
  std::string manifest_hash;
  std::string timestamp;
  std::string model_id;
  std::string benchmark;
  StrategyKind strategy = StrategyKind::Direct;
  std::string instance_id;
  std::string raw_text;
  bool truncated_early = false;
  std::optional<std::string> extracted;
  ExtractionMethod method = ExtractionMethod::None;
  bool correct = false;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
  std::int64_t latency_ms = 0;
  FinishReason finish_reason = FinishReason::Stop;
  std::string error;

  /// model|benchmark|strategy|instance, the resume key.
  std::string key() const;
};

ordered_json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const json& j);

/// 100 * (post - direct) / direct. Throws UndefinedDeltaError when direct <= 0.
double relative_delta(double direct_pct, double post_pct);

double round_half_away(double value, int decimals = 2);
/// Two-decimal presentation form; never prints "-0.00".
std::string format_fixed2(double value);

struct CellResult {
  std::string model_id;
  std::string benchmark;
  StrategyKind strategy = StrategyKind::Direct;
  double accuracy_pct = 0.0;
  std::size_t n = 0;
  double parse_fail_pct = 0.0;
};

struct DeltaCell {
  /// Source grouping: a fixture table name, or "live" for run results.
  std::string table;
  std::string model_id;
  std::string benchmark;
  double direct_pct = 0.0;
  double post_pct = 0.0;
  /// Empty when direct_pct is 0.
  std::optional<double> delta_pct;
  std::optional<double> reported_delta_pct;
};

DeltaCell make_delta_cell(std::string table, std::string model_id, std::string benchmark,
                          double direct_pct, double post_pct);

enum class SizeBucket { Small, Mid, Large };
std::string_view to_string(SizeBucket b);
/// <= 10B small, (10, 70) mid, >= 70 large.
SizeBucket size_bucket(double param_count_b);

/// Mean delta per size bucket; buckets without cells are absent. Cells with an
/// undefined delta are skipped. Throws ConfigError for a model without a size.
std::map<SizeBucket, double> stratified_mean(std::span<const DeltaCell> deltas,
                                             const std::map<std::string, double>& param_counts);

enum class TiePolicy { Strict, TiesCount };
std::string_view to_string(TiePolicy p);

struct WinRate {
  /// Under TiesCount, wins already include the ties.
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;
  std::size_t total = 0;
  double rate_pct = 0.0;
};

/// Undefined deltas are excluded. Throws ValidationError when nothing remains.
WinRate win_rate(std::span<const DeltaCell> deltas, TiePolicy policy);

/// Throws ValidationError when no defined delta falls in `group`.
double benchmark_group_mean(std::span<const DeltaCell> deltas,
                            std::span<const std::string> group);

/// Reads a table,model_id,benchmark,direct_pct,post_pct,reported_delta_pct CSV.
std::vector<DeltaCell> load_reported_deltas(const std::string& path);

/// Accuracy and parse-failure rate per (model, benchmark, strategy), sorted by key.
std::vector<CellResult> aggregate(std::span<const EvalRecord> records);

/// Pairs each post-style strategy with its baseline for the same model and
/// benchmark: post_reason and the ablations against direct ("live",
/// "live_summary", "live_confidence"), thinking_post against thinking_direct
/// ("live_thinking").
std::vector<DeltaCell> pair_deltas(std::span<const CellResult> cells);

struct ReportOptions {
  std::map<std::string, double> param_counts;
  /// Parsed stated-claims document; footnotes are emitted when present.
  std::optional<json> stated_claims;
};

ordered_json summarize(std::span<const CellResult> cells, std::span<const DeltaCell> deltas,
                       const ReportOptions& options);

struct ReportFiles {
  std::vector<std::string> paths;
};

/// Writes accuracy.csv, delta_<benchmark>.csv, meta_analysis.csv and
/// summary.json under `out_dir`. Output is byte-stable for identical input.
ReportFiles emit_report(std::span<const CellResult> cells, std::span<const DeltaCell> deltas,
                        const std::string& out_dir, const ReportOptions& options = {});

}  // namespace postreason
