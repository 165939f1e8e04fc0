#include "postreason/distill.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "postreason/error.hpp"
#include "postreason/parse.hpp"
#include "postreason/text.hpp"

namespace postreason {

std::string_view to_string(DistillModeKind k) {
  switch (k) {
    case DistillModeKind::Expert: return "expert";
    case DistillModeKind::Rephrased: return "rephrased";
    case DistillModeKind::SelfDistill: return "self_distill";
  }
  return "?";
}

DistillModeKind parse_distill_mode(std::string_view s) {
  if (s == "expert") return DistillModeKind::Expert;
  if (s == "rephrased") return DistillModeKind::Rephrased;
  if (s == "self_distill" || s == "self") return DistillModeKind::SelfDistill;
  throw ConfigError("unknown distillation mode '" + std::string(s) + "'");
}

void DistillMode::validate() const {
  if (kind != DistillModeKind::SelfDistill && (!expert_model || expert_model->empty())) {
    throw ConfigError(std::string(to_string(kind)) + " distillation needs an expert model");
  }
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::TooShort: return "too_short";
    case RejectReason::AnswerLeak: return "answer_leak";
    case RejectReason::Empty: return "empty";
    case RejectReason::GenerationError: return "generation_error";
  }
  return "?";
}

Verdict validate_trace(std::string_view text, std::string_view gold, const TraceFilter& filter) {
  Verdict v;
  if (text::trim(text).empty()) {
    v.reasons.push_back(RejectReason::Empty);
    return v;
  }
  const auto words = text::split_whitespace(text);
  if (words.size() < filter.min_words) v.reasons.push_back(RejectReason::TooShort);
  if (!gold.empty() && filter.leak_window > 0) {
    const std::size_t last = std::min(filter.leak_window, words.size()) - 1;
    const auto window_end =
        static_cast<std::size_t>(words[last].data() + words[last].size() - text.data());
    if (text::find_word_bounded(text.substr(0, window_end), gold) != std::string_view::npos) {
      v.reasons.push_back(RejectReason::AnswerLeak);
    }
  }
  return v;
}

DistillPrompts DistillPrompts::builtin() {
  DistillPrompts p;
  p.version = 1;
  p.system =
      "You are a mathematics expert who writes rigorous, step-by-step derivations.";
  p.generate =
      "Problem:\n{question}\n\nThe correct final answer is {answer}.\n"
      "Write a formal derivation that reaches this answer from the problem statement. "
      "Start from the given facts and work forward; do not mention the final value until "
      "the derivation arrives at it. Use at least 40 words. Reply with the derivation only.";
  p.rephrase_system =
      "You are a mathematics expert who restates solutions in your own words.";
  p.rephrase =
      "Problem:\n{question}\n\nThe correct final answer is {answer}.\n\n"
      "Reference derivation:\n{trace}\n\n"
      "Rewrite the reference derivation in your own vocabulary as a formal, step-by-step "
      "argument. Keep every step, do not mention the final value until the argument "
      "arrives at it, and reply with the rewritten derivation only.";
  return p;
}

DistillPrompts DistillPrompts::from_json(const json& doc) {
  DistillPrompts p;
  try {
    p.version = doc.at("version").get<int>();
    p.system = doc.at("system").get<std::string>();
    p.generate = doc.at("generate").get<std::string>();
    p.rephrase_system = doc.at("rephrase_system").get<std::string>();
    p.rephrase = doc.at("rephrase").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("distillation prompts: ") + e.what());
  }
  for (const auto* tmpl : {&p.generate, &p.rephrase}) {
    if (tmpl->find("{question}") == std::string::npos || tmpl->find("{answer}") == std::string::npos) {
      throw ConfigError("distillation prompt lacks {question} or {answer}");
    }
  }
  if (p.rephrase.find("{trace}") == std::string::npos) {
    throw ConfigError("rephrase prompt lacks {trace}");
  }
  return p;
}

DistillPrompts DistillPrompts::load(const std::string& path) {
  return from_json(load_json_file(path));
}

ordered_json DistillPrompts::to_json() const {
  ordered_json j;
  j["version"] = version;
  j["system"] = system;
  j["generate"] = generate;
  j["rephrase_system"] = rephrase_system;
  j["rephrase"] = rephrase;
  return j;
}

namespace {

std::string fill(std::string tmpl, const TaskInstance& instance, std::string_view trace) {
  // {trace} last, so text inside a generated trace is never re-expanded.
  tmpl = text::replace_all(std::move(tmpl), "{question}", format_question(instance));
  tmpl = text::replace_all(std::move(tmpl), "{answer}", instance.gold);
  return text::replace_all(std::move(tmpl), "{trace}", trace);
}

GenerationProfile distill_profile(const ModelRegistryEntry& entry) {
  GenerationProfile p = profile_for(entry, StrategyKind::PostReason);
  p.stop_sequences.clear();
  return p;
}

struct Attempt {
  std::string text;
  bool failed = false;
};

Attempt call(CompletionBackend& backend, const PromptBundle& bundle,
             const ModelRegistryEntry& entry) {
  try {
    auto rc = backend.complete(bundle, distill_profile(entry), entry);
    if (rc.finish_reason == FinishReason::Error) return {{}, true};
    return {std::string(text::trim(strip_thinking(rc.text))), false};
  } catch (const Error&) {
    return {{}, true};
  }
}

}  // namespace

PromptBundle distill_bundle(const TaskInstance& instance, DistillModeKind mode, int attempt,
                            const DistillPrompts& prompts,
                            const std::optional<std::string>& reference_trace) {
  PromptBundle b;
  b.strategy = StrategyKind::PostReason;
  b.instance_id = instance.id;
  const auto n = std::to_string(attempt);
  if (reference_trace) {
    b.system = prompts.rephrase_system;
    b.messages.push_back({Role::User, fill(prompts.rephrase, instance, *reference_trace)});
    b.tag = "distill:" + std::string(to_string(mode)) + ":" + n;
  } else {
    b.system = prompts.system;
    b.messages.push_back({Role::User, fill(prompts.generate, instance, "")});
    const auto stage = mode == DistillModeKind::Rephrased ? std::string("rephrased-source")
                                                          : std::string(to_string(mode));
    b.tag = "distill:" + stage + ":" + n;
  }
  return b;
}

TraceOutcome generate_trace(const TaskInstance& instance, const DistillMode& mode,
                            CompletionBackend& backend, const DistillContext& ctx) {
  mode.validate();
  if (ctx.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
  if (ctx.base == nullptr) throw ConfigError("distillation needs a base model");
  if (mode.kind != DistillModeKind::SelfDistill &&
      (ctx.expert == nullptr || ctx.expert->model_id != *mode.expert_model)) {
    throw ConfigError("expert model " + *mode.expert_model + " is not configured");
  }

  TraceOutcome out;
  for (int attempt = 1; attempt <= ctx.max_attempts; ++attempt) {
    Attempt a;
    const ModelRegistryEntry* generator = ctx.base;
    switch (mode.kind) {
      case DistillModeKind::SelfDistill:
        a = call(backend, distill_bundle(instance, mode.kind, attempt, ctx.prompts), *ctx.base);
        break;
      case DistillModeKind::Expert:
        generator = ctx.expert;
        a = call(backend, distill_bundle(instance, mode.kind, attempt, ctx.prompts), *ctx.expert);
        break;
      case DistillModeKind::Rephrased: {
        auto source =
            call(backend, distill_bundle(instance, mode.kind, attempt, ctx.prompts), *ctx.expert);
        if (source.failed || source.text.empty()) {
          a = source;
          a.failed = true;
          break;
        }
        a = call(backend,
                 distill_bundle(instance, mode.kind, attempt, ctx.prompts, source.text),
                 *ctx.base);
        break;
      }
    }
    Verdict v;
    if (a.failed) {
      v.reasons.push_back(RejectReason::GenerationError);
    } else {
      v = validate_trace(a.text, instance.gold, ctx.filter);
    }
    out.attempts.push_back(v);
    if (v.accepted()) {
      out.trace = Trace{instance.id, mode.kind, std::move(a.text), generator->model_id, attempt};
      break;
    }
  }
  return out;
}

ordered_json to_json(const DistillationStats& s) {
  ordered_json j;
  j["input"] = s.input;
  j["accepted"] = s.accepted;
  j["dropped"] = s.dropped;
  ordered_json reasons = ordered_json::object();
  for (auto r : {RejectReason::TooShort, RejectReason::AnswerLeak, RejectReason::Empty,
                 RejectReason::GenerationError}) {
    auto it = s.reasons.find(r);
    reasons[std::string(to_string(r))] = it == s.reasons.end() ? 0 : it->second;
  }
  j["rejections"] = reasons;
  j["dropped_ids"] = s.dropped_ids;
  return j;
}

ordered_json trace_record(const TaskInstance& instance, const Trace& trace) {
  ordered_json j;
  j["instance_id"] = trace.instance_id;
  j["mode"] = to_string(trace.mode);
  j["generator_model"] = trace.generator_model;
  j["attempt"] = trace.attempt;
  j["question"] = instance.question;
  j["gold"] = instance.gold;
  j["trace"] = trace.text;
  j["benchmark"] = instance.benchmark;
  return j;
}

DistillationStats run_distillation(std::span<const TaskInstance> instances, const DistillMode& mode,
                                   CompletionBackend& backend, const DistillContext& ctx,
                                   const std::string& out_path, std::size_t max_in_flight) {
  mode.validate();
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  JsonlWriter writer(out_path, JsonlWriter::Mode::Truncate);

  DistillationStats stats;
  stats.input = instances.size();

  std::vector<std::optional<TraceOutcome>> slots(instances.size());
  std::size_t next_to_write = 0;
  std::mutex mu;
  std::exception_ptr failure;

  // Commits finished outcomes strictly in input order. Caller holds `mu`.
  auto flush = [&] {
    while (next_to_write < slots.size() && slots[next_to_write]) {
      const auto& outcome = *slots[next_to_write];
      const auto& inst = instances[next_to_write];
      for (const auto& v : outcome.attempts) {
        for (auto r : v.reasons) ++stats.reasons[r];
      }
      if (outcome.trace && validate_trace(outcome.trace->text, inst.gold, ctx.filter).accepted()) {
        writer.write(trace_record(inst, *outcome.trace));
        ++stats.accepted;
      } else {
        ++stats.dropped;
        stats.dropped_ids.push_back(inst.id);
      }
      slots[next_to_write].reset();
      ++next_to_write;
    }
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < instances.size(); i = next.fetch_add(1)) {
      try {
        auto outcome = generate_trace(instances[i], mode, backend, ctx);
        std::lock_guard lock(mu);
        slots[i] = std::move(outcome);
        flush();
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = instances.size();
      }
    }
  };
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < std::min(max_in_flight, instances.size()); ++w) {
      workers.emplace_back(worker);
    }
  }
  if (failure) std::rethrow_exception(failure);
  return stats;
}

}  // namespace postreason
