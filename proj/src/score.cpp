#include "postreason/score.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

namespace fs = std::filesystem;

std::string EvalRecord::key() const {
  return model_id + "|" + benchmark + "|" + std::string(to_string(strategy)) + "|" + instance_id;
}

namespace {

template <class T>
ordered_json opt_json(const std::optional<T>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::optional<std::int64_t> opt_int(const json& j, const char* key) {
  if (j.contains(key) && j[key].is_number_integer()) return j[key].get<std::int64_t>();
  return std::nullopt;
}

}  // namespace

ordered_json to_json(const EvalRecord& r) {
  ordered_json j;
  j["run_id"] = r.run_id;
  j["manifest_hash"] = r.manifest_hash;
  j["timestamp"] = r.timestamp;
  j["model_id"] = r.model_id;
  j["benchmark"] = r.benchmark;
  j["strategy"] = to_string(r.strategy);
  j["instance_id"] = r.instance_id;
  j["raw_text"] = r.raw_text;
  j["truncated_early"] = r.truncated_early;
  j["extracted"] = opt_json(r.extracted);
  j["method"] = to_string(r.method);
  j["correct"] = r.correct;
  j["prompt_tokens"] = opt_json(r.prompt_tokens);
  j["completion_tokens"] = opt_json(r.completion_tokens);
  j["latency_ms"] = r.latency_ms;
  j["finish_reason"] = to_string(r.finish_reason);
  j["error"] = r.error;
  return j;
}

EvalRecord eval_record_from_json(const json& j) {
  EvalRecord r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.manifest_hash = j.value("manifest_hash", std::string{});
    r.timestamp = j.value("timestamp", std::string{});
    r.model_id = j.at("model_id").get<std::string>();
    r.benchmark = j.at("benchmark").get<std::string>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.instance_id = j.at("instance_id").get<std::string>();
    r.raw_text = j.at("raw_text").get<std::string>();
    r.truncated_early = j.value("truncated_early", false);
    if (j.contains("extracted") && j["extracted"].is_string()) {
      r.extracted = j["extracted"].get<std::string>();
    }
    r.method = parse_extraction_method(j.value("method", std::string("none")));
    r.correct = j.at("correct").get<bool>();
    r.prompt_tokens = opt_int(j, "prompt_tokens");
    r.completion_tokens = opt_int(j, "completion_tokens");
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.finish_reason = parse_finish_reason(j.value("finish_reason", std::string("stop")));
    r.error = j.value("error", std::string{});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("eval record: ") + e.what());
  }
  return r;
}

double relative_delta(double direct_pct, double post_pct) {
  if (!(direct_pct > 0.0)) {
    throw UndefinedDeltaError(fmt::format("relative delta undefined for direct accuracy {}",
                                          direct_pct));
  }
  return 100.0 * (post_pct - direct_pct) / direct_pct;
}

double round_half_away(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

std::string format_fixed2(double value) {
  double r = round_half_away(value, 2);
  if (r == 0.0) r = 0.0;  // folds -0.0
  return fmt::format("{:.2f}", r);
}

DeltaCell make_delta_cell(std::string table, std::string model_id, std::string benchmark,
                          double direct_pct, double post_pct) {
  DeltaCell d;
  d.table = std::move(table);
  d.model_id = std::move(model_id);
  d.benchmark = std::move(benchmark);
  d.direct_pct = direct_pct;
  d.post_pct = post_pct;
  if (direct_pct > 0.0) d.delta_pct = relative_delta(direct_pct, post_pct);
  return d;
}

std::string_view to_string(SizeBucket b) {
  switch (b) {
    case SizeBucket::Small: return "small";
    case SizeBucket::Mid: return "mid";
    case SizeBucket::Large: return "large";
  }
  return "?";
}

SizeBucket size_bucket(double param_count_b) {
  if (param_count_b <= 10.0) return SizeBucket::Small;
  if (param_count_b < 70.0) return SizeBucket::Mid;
  return SizeBucket::Large;
}

std::map<SizeBucket, double> stratified_mean(std::span<const DeltaCell> deltas,
                                             const std::map<std::string, double>& param_counts) {
  std::map<SizeBucket, std::pair<double, std::size_t>> acc;
  for (const auto& d : deltas) {
    auto it = param_counts.find(d.model_id);
    if (it == param_counts.end()) {
      throw ConfigError("no parameter count for model '" + d.model_id + "'");
    }
    if (!d.delta_pct) continue;
    auto& [sum, n] = acc[size_bucket(it->second)];
    sum += *d.delta_pct;
    ++n;
  }
  std::map<SizeBucket, double> out;
  for (const auto& [bucket, v] : acc) out[bucket] = v.first / static_cast<double>(v.second);
  return out;
}

std::string_view to_string(TiePolicy p) {
  return p == TiePolicy::Strict ? "strict" : "ties_count";
}

WinRate win_rate(std::span<const DeltaCell> deltas, TiePolicy policy) {
  WinRate w;
  for (const auto& d : deltas) {
    if (!d.delta_pct) continue;
    ++w.total;
    if (*d.delta_pct > 0.0) {
      ++w.wins;
    } else if (*d.delta_pct == 0.0) {
      ++w.ties;
    } else {
      ++w.losses;
    }
  }
  if (w.total == 0) throw ValidationError("win rate over an empty selection");
  if (policy == TiePolicy::TiesCount) w.wins += w.ties;
  w.rate_pct = 100.0 * static_cast<double>(w.wins) / static_cast<double>(w.total);
  return w;
}

double benchmark_group_mean(std::span<const DeltaCell> deltas,
                            std::span<const std::string> group) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& d : deltas) {
    if (!d.delta_pct) continue;
    if (std::find(group.begin(), group.end(), d.benchmark) == group.end()) continue;
    sum += *d.delta_pct;
    ++n;
  }
  if (n == 0) throw ValidationError("benchmark group selects no cells");
  return sum / static_cast<double>(n);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  return "\"" + text::replace_all(std::string(s), "\"", "\"\"") + "\"";
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": not a number '" + s + "'");
  }
}

}  // namespace

std::vector<DeltaCell> load_reported_deltas(const std::string& path) {
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  std::vector<DeltaCell> out;
  const std::vector<std::string> header = {"table",    "model_id", "benchmark",
                                           "direct_pct", "post_pct", "reported_delta_pct"};
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    auto f = split_csv_line(line);
    const auto where = path + ":" + std::to_string(line_no);
    if (line_no == 1) {
      if (f != header) throw ValidationError(where + ": unexpected header");
      continue;
    }
    if (f.size() != header.size()) throw ValidationError(where + ": expected 6 fields");
    auto cell = make_delta_cell(f[0], f[1], f[2], parse_number(f[3], where),
                                parse_number(f[4], where));
    if (!f[5].empty() && f[5] != "N/A") cell.reported_delta_pct = parse_number(f[5], where);
    out.push_back(std::move(cell));
  }
  return out;
}

std::vector<CellResult> aggregate(std::span<const EvalRecord> records) {
  struct Acc {
    std::size_t n = 0, correct = 0, parse_fail = 0;
  };
  std::map<std::tuple<std::string, std::string, StrategyKind>, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[{r.model_id, r.benchmark, r.strategy}];
    ++a.n;
    if (r.correct) ++a.correct;
    if (r.method == ExtractionMethod::None) ++a.parse_fail;
  }
  std::vector<CellResult> out;
  out.reserve(acc.size());
  for (const auto& [k, a] : acc) {
    CellResult c;
    c.model_id = std::get<0>(k);
    c.benchmark = std::get<1>(k);
    c.strategy = std::get<2>(k);
    c.n = a.n;
    c.accuracy_pct = 100.0 * static_cast<double>(a.correct) / static_cast<double>(a.n);
    c.parse_fail_pct = 100.0 * static_cast<double>(a.parse_fail) / static_cast<double>(a.n);
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<DeltaCell> pair_deltas(std::span<const CellResult> cells) {
  struct Pairing {
    StrategyKind base;
    StrategyKind post;
    const char* table;
  };
  static constexpr Pairing kPairs[] = {
      {StrategyKind::Direct, StrategyKind::PostReason, "live"},
      {StrategyKind::ThinkingDirect, StrategyKind::ThinkingPost, "live_thinking"},
      {StrategyKind::Direct, StrategyKind::PostSummary, "live_summary"},
      {StrategyKind::Direct, StrategyKind::PostConfidence, "live_confidence"},
  };
  std::map<std::tuple<std::string, std::string, StrategyKind>, const CellResult*> index;
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& c : cells) {
    index[{c.model_id, c.benchmark, c.strategy}] = &c;
    keys.insert({c.model_id, c.benchmark});
  }
  std::vector<DeltaCell> out;
  for (const auto& p : kPairs) {
    for (const auto& [model, bench] : keys) {
      auto base = index.find({model, bench, p.base});
      auto post = index.find({model, bench, p.post});
      if (base == index.end() || post == index.end()) continue;
      out.push_back(make_delta_cell(p.table, model, bench, base->second->accuracy_pct,
                                    post->second->accuracy_pct));
    }
  }
  return out;
}

namespace {

const std::vector<std::string> kAmc = {"amc8", "amc10", "amc12"};
const std::vector<std::string> kHmmt = {"hmmt_feb", "hmmt_nov"};
const std::vector<std::string> kBenchOrder = {"amc8",  "amc10", "amc12",    "hmmt_feb", "hmmt_nov",
                                              "gsm8k", "gpqa",  "mmlu_pro", "bbh"};

bool starts_with(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

// Open-weight prompting cells: fixture tables "open_*" and live run pairs.
bool in_open_scope(const DeltaCell& d) { return starts_with(d.table, "open_") || d.table == "live"; }
// All prompting cells, open-weight plus API models.
bool in_prompting_scope(const DeltaCell& d) {
  return in_open_scope(d) || starts_with(d.table, "api_");
}

std::vector<DeltaCell> select(std::span<const DeltaCell> deltas, auto&& pred) {
  std::vector<DeltaCell> out;
  for (const auto& d : deltas) {
    if (pred(d)) out.push_back(d);
  }
  return out;
}

std::size_t count_defined(std::span<const DeltaCell> deltas) {
  return static_cast<std::size_t>(
      std::count_if(deltas.begin(), deltas.end(), [](const auto& d) { return d.delta_pct.has_value(); }));
}

ordered_json rounded(double v) { return round_half_away(v, 2); }

ordered_json win_json(std::span<const DeltaCell> deltas, TiePolicy policy) {
  if (count_defined(deltas) == 0) return nullptr;
  const auto w = win_rate(deltas, policy);
  ordered_json j;
  j["wins"] = w.wins;
  j["ties"] = w.ties;
  j["losses"] = w.losses;
  j["total"] = w.total;
  j["rate_pct"] = rounded(w.rate_pct);
  return j;
}

ordered_json both_win_json(std::span<const DeltaCell> deltas) {
  ordered_json j;
  j["strict"] = win_json(deltas, TiePolicy::Strict);
  j["ties_count"] = win_json(deltas, TiePolicy::TiesCount);
  return j;
}

std::optional<double> mean_or_none(std::span<const DeltaCell> deltas,
                                   std::span<const std::string> group) {
  for (const auto& d : deltas) {
    if (d.delta_pct && std::find(group.begin(), group.end(), d.benchmark) != group.end()) {
      return benchmark_group_mean(deltas, group);
    }
  }
  return std::nullopt;
}

ordered_json opt_rounded(const std::optional<double>& v) {
  return v ? rounded(*v) : ordered_json(nullptr);
}

std::vector<std::string> ordered_benchmarks(std::span<const DeltaCell> deltas) {
  std::set<std::string> seen;
  for (const auto& d : deltas) seen.insert(d.benchmark);
  std::vector<std::string> out;
  for (const auto& b : kBenchOrder) {
    if (seen.erase(b)) out.push_back(b);
  }
  out.insert(out.end(), seen.begin(), seen.end());
  return out;
}

std::optional<double> share_pct(std::span<const DeltaCell> deltas, TiePolicy policy) {
  if (count_defined(deltas) == 0) return std::nullopt;
  return win_rate(deltas, policy).rate_pct;
}

ordered_json stated_values(const json& claim) {
  const auto& s = claim.at("stated");
  ordered_json out = ordered_json::array();
  if (s.is_array()) {
    for (const auto& v : s) out.push_back(v.get<double>());
  } else {
    out.push_back(s.get<double>());
  }
  return out;
}

ordered_json footnotes(const json& claims, std::span<const DeltaCell> open,
                       std::span<const DeltaCell> prompting) {
  ordered_json notes = ordered_json::array();
  const std::vector<std::string> gsm8k = {"gsm8k"};
  for (const auto& claim : claims.at("claims")) {
    const auto id = claim.at("id").get<std::string>();
    ordered_json note;
    note["id"] = id;
    note["label"] = claim.value("label", id);
    note["stated"] = stated_values(claim);
    ordered_json recomputed;
    std::vector<std::optional<double>> candidates;
    if (id == "improved_share_pct" || id == "open_improved_share_pct") {
      const auto scope = id == "improved_share_pct" ? prompting : open;
      const auto strict = share_pct(scope, TiePolicy::Strict);
      const auto ties = share_pct(scope, TiePolicy::TiesCount);
      recomputed["cells"] = count_defined(scope);
      recomputed["strict_pct"] = opt_rounded(strict);
      recomputed["ties_count_pct"] = opt_rounded(ties);
      candidates = {strict, ties};
    } else if (id == "gsm8k_mean_pct") {
      const auto open_mean = mean_or_none(open, gsm8k);
      const auto all_mean = mean_or_none(prompting, gsm8k);
      recomputed["open_models"] = opt_rounded(open_mean);
      recomputed["all_models"] = opt_rounded(all_mean);
      candidates = {open_mean, all_mean};
    } else {
      throw ConfigError("unknown stated claim '" + id + "'");
    }
    note["recomputed"] = recomputed;
    // A stated value is reproduced when some reading agrees at the printed precision.
    ordered_json reproduced = ordered_json::array();
    for (const auto& s : note["stated"]) {
      const double stated = s.get<double>();
      bool ok = false;
      for (const auto& c : candidates) {
        if (c && std::fabs(round_half_away(*c, 2) - stated) <= 0.005 + 1e-9) ok = true;
      }
      reproduced.push_back(ok);
    }
    note["reproduced"] = reproduced;
    notes.push_back(std::move(note));
  }
  return notes;
}

}  // namespace

ordered_json summarize(std::span<const CellResult> cells, std::span<const DeltaCell> deltas,
                       const ReportOptions& options) {
  const auto open = select(deltas, in_open_scope);
  const auto prompting = select(deltas, in_prompting_scope);
  const auto defined = count_defined(deltas);

  ordered_json j;
  j["cells"] = cells.size();
  j["deltas"] = defined;
  j["undefined_deltas"] = deltas.size() - defined;

  j["amc_mean_pct"] = opt_rounded(mean_or_none(open, kAmc));
  ordered_json strata = nullptr;
  if (!options.param_counts.empty()) {
    const auto amc = select(open, [](const DeltaCell& d) {
      return std::find(kAmc.begin(), kAmc.end(), d.benchmark) != kAmc.end();
    });
    const auto means = stratified_mean(amc, options.param_counts);
    strata = ordered_json::object();
    for (auto b : {SizeBucket::Small, SizeBucket::Mid, SizeBucket::Large}) {
      auto it = means.find(b);
      strata[std::string(to_string(b))] =
          it == means.end() ? ordered_json(nullptr) : rounded(it->second);
    }
  }
  j["amc_strata_pct"] = strata;

  const auto bench_sel = [](std::span<const DeltaCell> src, const std::vector<std::string>& g) {
    return select(src, [&](const DeltaCell& d) {
      return std::find(g.begin(), g.end(), d.benchmark) != g.end();
    });
  };
  ordered_json wins;
  wins["open"] = both_win_json(open);
  wins["prompting"] = both_win_json(prompting);
  wins["open_gsm8k"] = both_win_json(bench_sel(open, {"gsm8k"}));
  wins["open_hmmt"] = both_win_json(bench_sel(open, kHmmt));
  wins["all"] = both_win_json(deltas);
  j["win_rates"] = wins;

  ordered_json means = ordered_json::object();
  for (const auto& b : ordered_benchmarks(prompting)) {
    const std::vector<std::string> g = {b};
    ordered_json m;
    m["open_models"] = opt_rounded(mean_or_none(open, g));
    m["all_models"] = opt_rounded(mean_or_none(prompting, g));
    means[b] = m;
  }
  j["benchmark_mean_pct"] = means;

  std::vector<std::string> table_order;
  for (const auto& d : deltas) {
    if (std::find(table_order.begin(), table_order.end(), d.table) == table_order.end()) {
      table_order.push_back(d.table);
    }
  }
  ordered_json tables = ordered_json::object();
  for (const auto& t : table_order) {
    const auto sel = select(deltas, [&](const DeltaCell& d) { return d.table == t; });
    ordered_json tj;
    tj["cells"] = sel.size();
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& d : sel) {
      if (d.delta_pct) {
        sum += *d.delta_pct;
        ++n;
      }
    }
    tj["mean_delta_pct"] = n ? rounded(sum / static_cast<double>(n)) : ordered_json(nullptr);
    tj["win_rates"] = both_win_json(sel);
    tables[t] = tj;
  }
  j["tables"] = tables;

  j["footnotes"] = options.stated_claims ? footnotes(*options.stated_claims, open, prompting)
                                         : ordered_json::array();
  return j;
}

namespace {

void write_text(const fs::path& path, const std::string& body, ReportFiles& files) {
  text::write_file(path.string(), body);
  files.paths.push_back(path.string());
}

std::string delta_field(const DeltaCell& d) {
  return d.delta_pct ? format_fixed2(*d.delta_pct) : "N/A";
}

}  // namespace

ReportFiles emit_report(std::span<const CellResult> cells, std::span<const DeltaCell> deltas,
                        const std::string& out_dir, const ReportOptions& options) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory " + out_dir + ": " + ec.message());
  const fs::path dir(out_dir);
  ReportFiles files;

  std::string acc = "model_id,benchmark,strategy,accuracy_pct,n,parse_fail_pct\n";
  for (const auto& c : cells) {
    acc += fmt::format("{},{},{},{},{},{}\n", csv_field(c.model_id), csv_field(c.benchmark),
                       to_string(c.strategy), format_fixed2(c.accuracy_pct), c.n,
                       format_fixed2(c.parse_fail_pct));
  }
  write_text(dir / "accuracy.csv", acc, files);

  for (const auto& b : ordered_benchmarks(deltas)) {
    std::string body = "table,model_id,direct_pct,post_pct,delta_pct\n";
    for (const auto& d : deltas) {
      if (d.benchmark != b) continue;
      body += fmt::format("{},{},{},{},{}\n", csv_field(d.table), csv_field(d.model_id),
                          format_fixed2(d.direct_pct), format_fixed2(d.post_pct), delta_field(d));
    }
    write_text(dir / ("delta_" + b + ".csv"), body, files);
  }

  std::string meta = "table,model_id,benchmark,delta_pct\n";
  for (const auto& d : deltas) {
    meta += fmt::format("{},{},{},{}\n", csv_field(d.table), csv_field(d.model_id),
                        csv_field(d.benchmark), delta_field(d));
  }
  write_text(dir / "meta_analysis.csv", meta, files);

  write_text(dir / "summary.json", summarize(cells, deltas, options).dump(2) + "\n", files);
  return files;
}

}  // namespace postreason
