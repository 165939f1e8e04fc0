#include "postreason/commands.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <set>
#include <unordered_set>

#include "postreason/parse.hpp"
#include "postreason/sftgen.hpp"
#include "postreason/text.hpp"

namespace postreason {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative() && !base_dir.empty()) path = fs::path(base_dir) / path;
  return path.lexically_normal().string();
}

std::string base_of(const std::string& path) { return fs::path(path).parent_path().string(); }

std::string utc_timestamp() {
  const auto now = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", now);
}

/// Counts completions asked of the wrapped backend.
class CountingBackend : public CompletionBackend {
 public:
  explicit CountingBackend(CompletionBackend& inner) : inner_(inner) {}

  RawCompletion complete(const PromptBundle& bundle, const GenerationProfile& profile,
                         const ModelRegistryEntry& entry) override {
    ++count_;
    return inner_.complete(bundle, profile, entry);
  }
  std::uint64_t count() const { return count_.load(); }

 private:
  CompletionBackend& inner_;
  std::atomic<std::uint64_t> count_{0};
};

/// Owns whichever backend a command needs: an injected one, a replay file or
/// HTTP, optionally wrapped in a recorder, and always counted.
struct BackendStack {
  std::unique_ptr<CompletionBackend> owned;
  std::unique_ptr<RecordingBackend> recorder;
  std::unique_ptr<CountingBackend> counter;

  BackendStack(CompletionBackend* injected, const std::string& replay_path,
               const std::string& record_path) {
    CompletionBackend* base = injected;
    if (base == nullptr) {
      if (!replay_path.empty()) {
        owned = std::make_unique<ReplayBackend>(replay_path);
      } else {
        owned = std::make_unique<HttpChatBackend>();
      }
      base = owned.get();
    }
    if (!record_path.empty()) {
      recorder = std::make_unique<RecordingBackend>(*base, record_path);
      base = recorder.get();
    }
    counter = std::make_unique<CountingBackend>(*base);
  }

  CompletionBackend& backend() { return *counter; }
  std::uint64_t requests() const { return counter->count(); }
};

}  // namespace

PreflightError::PreflightError(std::vector<std::string> problems)
    : ConfigError("pre-flight validation failed:\n  " + join(problems, "\n  ")),
      problems_(std::move(problems)) {}

std::string default_data_dir() {
  if (const char* env = std::getenv("POSTREASON_DATA_DIR"); env && *env) return env;
  return POSTREASON_DATA_DIR;
}

RunManifest RunManifest::from_json(const json& doc, const std::string& base_dir) {
  RunManifest m;
  try {
    m.run_id = doc.at("run_id").get<std::string>();
    const auto& reg = doc.at("registry");
    if (reg.is_string()) {
      m.registry_path = resolve(base_dir, reg.get<std::string>());
    } else {
      m.registry_doc = reg;
    }
    m.models = doc.at("models").get<std::vector<std::string>>();
    for (const auto& b : doc.at("benchmarks")) {
      BenchmarkSpec spec;
      spec.id = b.at("id").get<std::string>();
      spec.path = resolve(base_dir, b.at("path").get<std::string>());
      spec.kind = parse_answer_kind(b.at("kind").get<std::string>());
      spec.fewshot_path = resolve(base_dir, b.value("fewshot_path", std::string{}));
      m.benchmarks.push_back(std::move(spec));
    }
    m.strategies = doc.at("strategies").get<std::vector<std::string>>();
    m.shots = doc.value("shots", m.shots);
    m.shot_selection = parse_shot_selection(doc.value("shot_selection", std::string("first_by_id")));
    m.exemplars_path = resolve(base_dir, doc.value("exemplars", std::string{}));
    m.templates_path = resolve(base_dir, doc.value("templates", std::string{}));
    m.max_in_flight = doc.value("max_in_flight", m.max_in_flight);
    m.seed = doc.value("seed", m.seed);
    m.early_stop = doc.value("early_stop", m.early_stop);
    m.last_occurrence = doc.value("last_occurrence", m.last_occurrence);
    m.output_dir = resolve(base_dir, doc.value("output_dir", std::string("out")));
    m.replay_path = resolve(base_dir, doc.value("replay_path", std::string{}));
    m.record_path = resolve(base_dir, doc.value("record_path", std::string{}));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run manifest: ") + e.what());
  }
  if (m.run_id.empty() || m.run_id.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("run_id must be a non-empty file-name-safe string");
  }
  if (m.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  m.hash = text::fnv1a_hex(doc.dump());
  return m;
}

RunManifest RunManifest::load(const std::string& path) {
  return from_json(load_json_file(path), base_of(path));
}

ModelRegistry RunManifest::registry() const {
  if (!registry_path.empty()) return ModelRegistry::load(registry_path);
  return ModelRegistry::from_json(registry_doc);
}

TemplateLibrary RunManifest::templates() const {
  return templates_path.empty() ? TemplateLibrary::builtin() : TemplateLibrary::load(templates_path);
}

std::string RunManifest::run_store_path() const {
  return (fs::path(output_dir) / "runs" / (run_id + ".jsonl")).string();
}

std::vector<EvalRecord> load_run_store(const std::string& path) {
  std::vector<EvalRecord> out;
  for_each_jsonl(path, [&](const json& rec, std::size_t line) {
    try {
      out.push_back(eval_record_from_json(rec));
    } catch (const Error& e) {
      throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return out;
}

ordered_json to_json(const EvalSummary& s) {
  ordered_json j;
  j["run_id"] = s.run_id;
  j["store"] = s.store_path;
  j["written"] = s.written;
  j["skipped"] = s.skipped;
  j["errors"] = s.errors;
  j["requests"] = s.requests;
  ordered_json cells = ordered_json::array();
  for (const auto& c : s.cells) {
    ordered_json cj;
    cj["model_id"] = c.model_id;
    cj["benchmark"] = c.benchmark;
    cj["strategy"] = to_string(c.strategy);
    cj["accuracy_pct"] = round_half_away(c.accuracy_pct, 2);
    cj["n"] = c.n;
    cj["parse_fail_pct"] = round_half_away(c.parse_fail_pct, 2);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

namespace {

struct LoadedBenchmark {
  BenchmarkSpec spec;
  std::vector<TaskInstance> eval;
  std::vector<TaskInstance> fewshot;
};

/// One (model, benchmark, strategy) cell's pending work.
struct CellPlan {
  const ModelRegistryEntry* entry = nullptr;
  const LoadedBenchmark* bench = nullptr;
  StrategyKind strategy = StrategyKind::Direct;
  GenerationProfile profile;
  std::vector<PromptBundle> bundles;
  std::vector<const TaskInstance*> instances;
};

std::vector<LoadedBenchmark> load_benchmarks(const RunManifest& m, std::vector<std::string>& problems) {
  std::vector<LoadedBenchmark> out;
  std::set<std::string> ids;
  for (const auto& spec : m.benchmarks) {
    if (!ids.insert(spec.id).second) {
      problems.push_back("benchmark '" + spec.id + "' listed twice");
      continue;
    }
    LoadedBenchmark b;
    b.spec = spec;
    try {
      b.eval = load_benchmark(spec.path, spec.id, spec.kind, Split::Eval);
      if (!spec.fewshot_path.empty()) {
        b.fewshot = load_benchmark(spec.fewshot_path, spec.id, spec.kind, Split::Fewshot);
      }
    } catch (const Error& e) {
      problems.push_back(e.what());
      continue;
    }
    out.push_back(std::move(b));
  }
  return out;
}

Extraction extract_for(const std::string& raw, const TaskInstance& inst, bool last_occurrence) {
  const auto labels = inst.labels();
  return extract_answer(strip_thinking(raw), inst.kind, labels,
                        ExtractOptions{.last_occurrence = last_occurrence});
}

}  // namespace

EvalSummary cmd_eval(const RunManifest& manifest, const EvalOptions& options) {
  RunManifest m = manifest;
  if (options.replay_path) m.replay_path = *options.replay_path;
  if (options.output_dir) m.output_dir = *options.output_dir;
  if (options.max_in_flight) m.max_in_flight = *options.max_in_flight;
  if (m.max_in_flight < 1) throw PreflightError({"max_in_flight must be >= 1"});

  std::vector<std::string> problems;

  std::vector<StrategyKind> strategies;
  for (const auto& name : m.strategies) {
    try {
      strategies.push_back(parse_strategy(name));
    } catch (const ConfigError& e) {
      problems.push_back(e.what());
    }
  }
  if (strategies.empty() && problems.empty()) problems.push_back("no strategies listed");

  ModelRegistry registry;
  TemplateLibrary library;
  ExemplarStore exemplars;
  try {
    registry = m.registry();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    library = m.templates();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!m.exemplars_path.empty()) {
    try {
      exemplars = ExemplarStore::load(m.exemplars_path);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  std::vector<const ModelRegistryEntry*> models;
  for (const auto& id : m.models) {
    if (!registry.contains(id)) {
      problems.push_back("model '" + id + "' is not in the registry");
    } else {
      models.push_back(&registry.find(id));
    }
  }
  const auto benches = load_benchmarks(m, problems);

  const auto store_path = m.run_store_path();
  std::unordered_set<std::string> done;
  if (fs::exists(store_path)) {
    if (!options.resume) {
      problems.push_back("run '" + m.run_id + "' already exists at " + store_path +
                         "; pass --resume to continue it");
    } else {
      try {
        for (const auto& r : load_run_store(store_path)) done.insert(r.key());
      } catch (const Error& e) {
        problems.push_back(e.what());
      }
    }
  }

  std::vector<CellPlan> plans;
  std::size_t skipped = 0;
  if (problems.empty()) {
    for (const auto* entry : models) {
      for (const auto& bench : benches) {
        for (auto strategy : strategies) {
          CellPlan plan{entry, &bench, strategy, {}, {}, {}};
          try {
            plan.profile = profile_for(*entry, strategy);
            plan.profile.native_thinking = is_thinking(strategy);
            // A stop string inside a reasoning block would cut before the answer.
            if (m.early_stop && !is_thinking(strategy) && plan.profile.stop_sequences.empty()) {
              plan.profile.stop_sequences = default_stop_sequences(strategy);
            }
            plan.profile.validate(m.early_stop && !is_thinking(strategy));
            const auto& templates = library.for_benchmark(bench.spec.id);
            if (!templates.covers(strategy)) {
              throw ConfigError("templates for '" + bench.spec.id + "' lack strategy " +
                                std::string(to_string(strategy)));
            }
            for (const auto& inst : bench.eval) {
              EvalRecord probe;
              probe.model_id = entry->model_id;
              probe.benchmark = bench.spec.id;
              probe.strategy = strategy;
              probe.instance_id = inst.id;
              if (done.contains(probe.key())) {
                ++skipped;
                continue;
              }
              const auto shots = select_shots(bench.fewshot, inst, strategy, exemplars, m.shots,
                                              m.shot_selection, m.seed);
              plan.bundles.push_back(render(inst, strategy, templates, shots));
              plan.instances.push_back(&inst);
            }
          } catch (const Error& e) {
            problems.push_back(entry->model_id + " / " + bench.spec.id + " / " +
                               std::string(to_string(strategy)) + ": " + e.what());
            continue;
          }
          if (!plan.bundles.empty()) plans.push_back(std::move(plan));
        }
      }
    }
  }
  if (!problems.empty()) throw PreflightError(std::move(problems));

  fs::create_directories(fs::path(store_path).parent_path());
  {
    // Resolved settings beside the store, for auditing shot selection and seeds.
    ordered_json side;
    side["run_id"] = m.run_id;
    side["manifest_hash"] = m.hash;
    side["shots"] = m.shots;
    side["shot_selection"] = to_string(m.shot_selection);
    side["seed"] = m.seed;
    side["early_stop"] = m.early_stop;
    side["last_occurrence"] = m.last_occurrence;
    side["strategies"] = m.strategies;
    side["models"] = m.models;
    text::write_file((fs::path(m.output_dir) / "runs" / (m.run_id + ".settings.json")).string(),
                     side.dump(2) + "\n");
  }

  BackendStack stack(options.backend, m.replay_path, m.record_path);
  JsonlWriter store(store_path, JsonlWriter::Mode::Append);
  EvalSummary summary;
  summary.run_id = m.run_id;
  summary.store_path = store_path;
  summary.skipped = skipped;

  for (const auto& plan : plans) {
    run_batch(stack.backend(), plan.bundles, *plan.entry, plan.profile, m.max_in_flight,
              [&](std::size_t i, const RawCompletion& rc) {
                const TaskInstance& inst = *plan.instances[i];
                EvalRecord r;
                r.run_id = m.run_id;
                r.manifest_hash = m.hash;
                r.timestamp = utc_timestamp();
                r.model_id = plan.entry->model_id;
                r.benchmark = plan.bench->spec.id;
                r.strategy = plan.strategy;
                r.instance_id = inst.id;
                r.raw_text = rc.text;
                r.truncated_early = rc.truncated_early;
                r.prompt_tokens = rc.prompt_tokens;
                r.completion_tokens = rc.completion_tokens;
                r.latency_ms = rc.latency_ms;
                r.finish_reason = rc.finish_reason;
                r.error = rc.error;
                if (rc.finish_reason == FinishReason::Error) {
                  ++summary.errors;
                } else {
                  const auto ex = extract_for(rc.text, inst, m.last_occurrence);
                  r.extracted = ex.answer;
                  r.method = ex.method;
                  r.correct = score(ex, inst.gold, inst.kind);
                }
                store.write(to_json(r));
                ++summary.written;
              });
  }
  summary.requests = stack.requests();
  summary.cells = aggregate(load_run_store(store_path));
  return summary;
}

ordered_json to_json(const RescoreSummary& s) {
  ordered_json j;
  j["records"] = s.records;
  j["mismatches"] = s.mismatches;
  j["mismatched_keys"] = s.mismatched_keys;
  return j;
}

RescoreSummary cmd_rescore(const RunManifest& manifest, const std::optional<std::string>& store_path) {
  std::vector<std::string> problems;
  const auto benches = load_benchmarks(manifest, problems);
  if (!problems.empty()) throw PreflightError(std::move(problems));
  std::map<std::pair<std::string, std::string>, const TaskInstance*> index;
  for (const auto& b : benches) {
    for (const auto& inst : b.eval) index[{b.spec.id, inst.id}] = &inst;
  }

  RescoreSummary s;
  for (const auto& r : load_run_store(store_path.value_or(manifest.run_store_path()))) {
    ++s.records;
    auto it = index.find({r.benchmark, r.instance_id});
    if (it == index.end()) {
      throw ValidationError("record " + r.key() + " has no instance in the manifest's benchmarks");
    }
    bool correct = false;
    std::optional<std::string> extracted;
    if (r.finish_reason != FinishReason::Error) {
      const auto ex = extract_for(r.raw_text, *it->second, manifest.last_occurrence);
      extracted = ex.answer;
      correct = score(ex, it->second->gold, it->second->kind);
    }
    if (correct != r.correct || extracted != r.extracted) {
      ++s.mismatches;
      s.mismatched_keys.push_back(r.key());
    }
  }
  return s;
}

namespace {

bool has_extension(const std::string& path, std::string_view ext) {
  return fs::path(path).extension() == ext;
}

ReportOptions report_options(const ReportRequest& request) {
  ReportOptions opts;
  const auto registry = request.registry_path.empty()
                            ? (fs::path(default_data_dir()) / "registry.json").string()
                            : request.registry_path;
  if (fs::exists(registry)) opts.param_counts = ModelRegistry::load(registry).param_counts();
  if (!request.claims_path.empty()) opts.stated_claims = load_json_file(request.claims_path);
  return opts;
}

}  // namespace

ReportFiles cmd_report(const ReportRequest& request) {
  std::vector<EvalRecord> records;
  std::vector<DeltaCell> fixture_deltas;
  for (const auto& in : request.inputs) {
    if (has_extension(in, ".csv")) {
      auto d = load_reported_deltas(in);
      fixture_deltas.insert(fixture_deltas.end(), d.begin(), d.end());
    } else if (has_extension(in, ".jsonl")) {
      auto r = load_run_store(in);
      records.insert(records.end(), r.begin(), r.end());
    } else {
      throw ConfigError("report input '" + in + "' is neither .csv nor .jsonl");
    }
  }
  const auto cells = aggregate(records);
  auto deltas = fixture_deltas;
  const auto live = pair_deltas(cells);
  deltas.insert(deltas.end(), live.begin(), live.end());
  return emit_report(cells, deltas, request.out_dir, report_options(request));
}

ordered_json to_json(const IngestSummary& s) {
  ordered_json j;
  ordered_json loaded = ordered_json::object();
  for (const auto& [name, n] : s.loaded) loaded[name] = n;
  j["loaded"] = loaded;
  j["contamination_removed"] = s.removed;
  j["training_mix"] = s.mix;
  j["written"] = s.written;
  return j;
}

PreparedCorpus prepare_corpus(const CorpusManifest& manifest) {
  PreparedCorpus out;
  std::vector<TaskInstance> eval_sets;
  InstancePools pools;
  for (const auto& src : manifest.sources) {
    auto instances = load_benchmark(src.path, src.benchmark, src.kind, src.split);
    out.loaded.emplace_back(src.name, instances.size());
    if (src.split == Split::Eval) {
      eval_sets.insert(eval_sets.end(), instances.begin(), instances.end());
    } else {
      pools[src.name] = std::move(instances);
    }
  }
  for (auto& [name, pool] : pools) {
    auto filtered = filter_contamination(pool, eval_sets);
    out.removed.insert(out.removed.end(), filtered.removed.begin(), filtered.removed.end());
    pool = std::move(filtered.kept);
  }
  if (manifest.composition.empty()) {
    for (const auto& src : manifest.sources) {
      if (auto it = pools.find(src.name); it != pools.end()) {
        out.mix.insert(out.mix.end(), it->second.begin(), it->second.end());
      }
    }
  } else {
    out.mix = compose_training_mix(manifest, pools, manifest.seed);
  }
  return out;
}

IngestSummary cmd_ingest(const std::string& manifest_path, const std::string& out_dir) {
  const json doc = load_json_file(manifest_path);
  const auto base = base_of(manifest_path);
  IngestSummary s;
  fs::create_directories(out_dir);
  if (doc.contains("sources")) {
    const auto manifest = CorpusManifest::from_json(doc, base);
    const auto prepared = prepare_corpus(manifest);
    s.loaded = prepared.loaded;
    s.removed = prepared.removed.size();
    s.mix = prepared.mix.size();
    const auto mix_path = (fs::path(out_dir) / "train_mix.jsonl").string();
    const auto removed_path = (fs::path(out_dir) / "contamination_removed.jsonl").string();
    write_instances(mix_path, prepared.mix);
    write_instances(removed_path, prepared.removed);
    s.written = {mix_path, removed_path};
    return s;
  }
  const auto manifest = RunManifest::from_json(doc, base);
  std::vector<std::string> problems;
  const auto benches = load_benchmarks(manifest, problems);
  if (!problems.empty()) throw PreflightError(std::move(problems));
  for (const auto& b : benches) {
    s.loaded.emplace_back(b.spec.id, b.eval.size());
    const auto path = (fs::path(out_dir) / (b.spec.id + ".jsonl")).string();
    write_instances(path, b.eval);
    s.written.push_back(path);
  }
  return s;
}

DistillConfig DistillConfig::from_json(const json& doc, const std::string& base_dir) {
  DistillConfig c;
  try {
    c.registry_path = resolve(base_dir, doc.at("registry").get<std::string>());
    c.base_model = doc.at("base_model").get<std::string>();
    c.mode.kind = parse_distill_mode(doc.value("mode", std::string("self_distill")));
    if (doc.contains("expert_model")) c.mode.expert_model = doc["expert_model"].get<std::string>();
    c.corpus_path = resolve(base_dir, doc.value("corpus", std::string{}));
    c.instances_path = resolve(base_dir, doc.value("instances", std::string{}));
    c.benchmark = doc.value("benchmark", std::string{});
    c.kind = parse_answer_kind(doc.value("kind", std::string("integer")));
    c.prompts_path = resolve(base_dir, doc.value("prompts", std::string{}));
    c.max_attempts = doc.value("max_attempts", c.max_attempts);
    c.max_in_flight = doc.value("max_in_flight", c.max_in_flight);
    c.replay_path = resolve(base_dir, doc.value("replay_path", std::string{}));
    c.record_path = resolve(base_dir, doc.value("record_path", std::string{}));
    c.output = resolve(base_dir, doc.value("output", std::string("traces.jsonl")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("distill config: ") + e.what());
  }
  c.mode.validate();
  if (c.corpus_path.empty() == c.instances_path.empty()) {
    throw ConfigError("distill config needs exactly one of 'corpus' or 'instances'");
  }
  if (!c.instances_path.empty() && c.benchmark.empty()) {
    throw ConfigError("distill config with 'instances' needs 'benchmark'");
  }
  return c;
}

DistillConfig DistillConfig::load(const std::string& path) {
  return from_json(load_json_file(path), base_of(path));
}

ordered_json to_json(const DistillSummary& s) {
  ordered_json j = to_json(s.stats);
  j["contamination_removed"] = s.contamination_removed;
  j["requests"] = s.requests;
  j["output"] = s.output;
  return j;
}

DistillSummary cmd_distill(const DistillConfig& config, const EvalOptions& options) {
  std::vector<std::string> problems;
  ModelRegistry registry;
  DistillContext ctx;
  ctx.max_attempts = config.max_attempts;
  try {
    registry = ModelRegistry::load(config.registry_path);
    ctx.base = &registry.find(config.base_model);
    if (config.mode.expert_model) ctx.expert = &registry.find(*config.mode.expert_model);
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!config.prompts_path.empty()) {
    try {
      ctx.prompts = DistillPrompts::load(config.prompts_path);
    } catch (const Error& e) {
      problems.push_back(e.what());
    }
  }
  DistillSummary summary;
  std::vector<TaskInstance> instances;
  try {
    if (!config.corpus_path.empty()) {
      auto prepared = prepare_corpus(CorpusManifest::load(config.corpus_path));
      summary.contamination_removed = prepared.removed.size();
      instances = std::move(prepared.mix);
    } else {
      instances = load_benchmark(config.instances_path, config.benchmark, config.kind, Split::Train);
    }
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) throw PreflightError(std::move(problems));

  const auto replay = options.replay_path.value_or(config.replay_path);
  BackendStack stack(options.backend, replay, config.record_path);
  summary.output = options.output_dir
                       ? (fs::path(*options.output_dir) / fs::path(config.output).filename()).string()
                       : config.output;
  if (const auto dir = fs::path(summary.output).parent_path(); !dir.empty()) {
    fs::create_directories(dir);
  }
  summary.stats = run_distillation(instances, config.mode, stack.backend(), ctx, summary.output,
                                   options.max_in_flight.value_or(config.max_in_flight));
  summary.requests = stack.requests();
  return summary;
}

SftConfig SftConfig::from_json(const json& doc, const std::string& base_dir) {
  SftConfig c;
  try {
    c.traces_path = resolve(base_dir, doc.at("traces").get<std::string>());
    c.templates_path = resolve(base_dir, doc.value("templates", std::string{}));
    c.template_benchmark = doc.value("template_benchmark", c.template_benchmark);
    if (doc.contains("chat_template")) c.chat_template = ChatTemplateSpec::from_json(doc["chat_template"]);
    c.output = resolve(base_dir, doc.value("output", std::string("sft.jsonl")));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("emit-sft config: ") + e.what());
  }
  return c;
}

SftConfig SftConfig::load(const std::string& path) {
  return from_json(load_json_file(path), base_of(path));
}

ordered_json to_json(const SftSummary& s) {
  ordered_json j;
  j["written"] = s.written;
  j["rejected"] = s.rejected;
  j["output"] = s.output;
  return j;
}

SftSummary cmd_emit_sft(const SftConfig& config) {
  ChatTemplateSpec spec;
  if (config.chat_template) {
    spec = *config.chat_template;
  } else {
    const auto library = config.templates_path.empty() ? TemplateLibrary::builtin()
                                                       : TemplateLibrary::load(config.templates_path);
    spec = ChatTemplateSpec::from_templates(library.for_benchmark(config.template_benchmark));
  }
  std::vector<MaskedSftRecord> records;
  SftSummary s;
  for_each_jsonl(config.traces_path, [&](const json& rec, std::size_t line) {
    try {
      TaskInstance inst;
      inst.id = rec.at("instance_id").get<std::string>();
      inst.question = rec.at("question").get<std::string>();
      inst.gold = rec.at("gold").get<std::string>();
      inst.benchmark = rec.value("benchmark", std::string{});
      inst.kind = AnswerKind::Freeform;
      Trace trace;
      trace.instance_id = inst.id;
      trace.mode = parse_distill_mode(rec.at("mode").get<std::string>());
      trace.text = rec.at("trace").get<std::string>();
      trace.generator_model = rec.at("generator_model").get<std::string>();
      trace.attempt = rec.value("attempt", 1);
      if (!validate_trace(trace.text, inst.gold).accepted()) {
        ++s.rejected;
        return;
      }
      auto record = build_record(inst, inst.gold, trace, spec);
      if (!record_violation(record, inst.gold).empty()) {
        ++s.rejected;
        return;
      }
      records.push_back(std::move(record));
    } catch (const ValidationError&) {
      ++s.rejected;
    } catch (const json::exception& e) {
      throw ValidationError(config.traces_path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  if (const auto dir = fs::path(config.output).parent_path(); !dir.empty()) {
    fs::create_directories(dir);
  }
  s.written = emit_corpus(records, config.output);
  s.output = config.output;
  return s;
}

ordered_json to_json(const MetaSummary& s) {
  ordered_json j;
  j["rows"] = s.rows;
  j["mismatches"] = s.mismatches;
  j["max_abs_diff"] = s.max_abs_diff;
  j["files"] = s.files.paths;
  return j;
}

MetaSummary cmd_meta(const ReportRequest& request) {
  MetaSummary s;
  std::vector<DeltaCell> deltas;
  for (const auto& in : request.inputs) {
    auto d = load_reported_deltas(in);
    deltas.insert(deltas.end(), d.begin(), d.end());
  }
  std::string check = "table,model_id,benchmark,reported_delta_pct,recomputed_delta_pct,abs_diff,ok\n";
  for (const auto& d : deltas) {
    ++s.rows;
    if (!d.reported_delta_pct || !d.delta_pct) {
      const bool ok = !d.reported_delta_pct && !d.delta_pct;
      if (!ok) ++s.mismatches;
      check += fmt::format("{},{},{},N/A,N/A,,{}\n", d.table, d.model_id, d.benchmark, ok);
      continue;
    }
    const double diff = std::fabs(*d.delta_pct - *d.reported_delta_pct);
    s.max_abs_diff = std::max(s.max_abs_diff, diff);
    const bool ok = diff <= 0.02 + 1e-9;
    if (!ok) ++s.mismatches;
    check += fmt::format("{},{},{},{},{},{:.4f},{}\n", d.table, d.model_id, d.benchmark,
                         format_fixed2(*d.reported_delta_pct), format_fixed2(*d.delta_pct), diff, ok);
  }
  s.files = emit_report({}, deltas, request.out_dir, report_options(request));
  const auto check_path = (fs::path(request.out_dir) / "recompute_check.csv").string();
  text::write_file(check_path, check);
  s.files.paths.push_back(check_path);
  return s;
}

}  // namespace postreason
