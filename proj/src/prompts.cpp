#include "postreason/prompts.hpp"

#include <algorithm>

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

const std::string& PromptTemplateSet::system_for(StrategyKind s) const {
  auto it = system_prompts.find(s);
  if (it == system_prompts.end()) {
    throw ConfigError("templates for '" + benchmark + "' have no system prompt for " +
                      std::string(to_string(s)));
  }
  return it->second;
}

const std::string& PromptTemplateSet::suffix_for(StrategyKind s) const {
  auto it = suffixes.find(s);
  if (it == suffixes.end()) {
    throw ConfigError("templates for '" + benchmark + "' have no suffix for " +
                      std::string(to_string(s)));
  }
  return it->second;
}

std::string template_family(const std::string& benchmark) {
  if (benchmark.starts_with("amc")) return "amc";
  if (benchmark.starts_with("hmmt")) return "hmmt";
  return benchmark;
}

void TemplateLibrary::add(PromptTemplateSet set) {
  auto name = set.benchmark;
  sets_[name] = std::move(set);
}

const PromptTemplateSet& TemplateLibrary::for_benchmark(const std::string& benchmark) const {
  if (auto it = sets_.find(benchmark); it != sets_.end()) return it->second;
  if (auto it = sets_.find(template_family(benchmark)); it != sets_.end()) return it->second;
  throw ConfigError("no prompt templates for benchmark '" + benchmark + "'");
}

TemplateLibrary TemplateLibrary::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("template file must be an object of benchmarks");
  TemplateLibrary lib;
  for (const auto& [name, strategies] : doc.items()) {
    PromptTemplateSet set;
    set.benchmark = name;
    if (!strategies.is_object()) throw ConfigError("templates for '" + name + "' must be an object");
    for (const auto& [strategy, entry] : strategies.items()) {
      const auto kind = parse_strategy(strategy);
      if (!entry.contains("system") || !entry.contains("suffix")) {
        throw ConfigError("templates " + name + "/" + strategy + " need 'system' and 'suffix'");
      }
      set.system_prompts[kind] = entry["system"].get<std::string>();
      set.suffixes[kind] = entry["suffix"].get<std::string>();
    }
    lib.add(std::move(set));
  }
  return lib;
}

TemplateLibrary TemplateLibrary::load(const std::string& path) {
  return from_json(load_json_file(path));
}

ordered_json TemplateLibrary::to_json() const {
  ordered_json doc = ordered_json::object();
  for (const auto& [name, set] : sets_) {
    ordered_json strategies = ordered_json::object();
    for (auto s : kAllStrategies) {
      if (!set.covers(s)) continue;
      strategies[std::string(to_string(s))] = {{"system", set.system_prompts.at(s)},
                                               {"suffix", set.suffixes.at(s)}};
    }
    doc[name] = std::move(strategies);
  }
  return doc;
}

std::string_view to_string(Role r) { return r == Role::User ? "user" : "assistant"; }

std::string format_question(const TaskInstance& instance) {
  std::string out = instance.question;
  if (instance.kind == AnswerKind::Letter) {
    for (const auto& c : instance.choices) out += "\n" + c.label + ". " + c.text;
  }
  return out;
}

PromptBundle render(const TaskInstance& instance, StrategyKind strategy,
                    const PromptTemplateSet& templates, std::span<const Shot> shots) {
  PromptBundle bundle;
  bundle.system = templates.system_for(strategy);
  const auto& suffix = templates.suffix_for(strategy);
  bundle.strategy = strategy;
  bundle.instance_id = instance.id;

  for (const auto& shot : shots) {
    if (shot.instance.id == instance.id) {
      throw ValidationError("few-shot exemplar '" + shot.instance.id +
                            "' is the instance being asked");
    }
    bundle.messages.push_back({Role::User, format_question(shot.instance) + "\n" + suffix});
    bundle.messages.push_back({Role::Assistant, shot.assistant_text});
  }
  bundle.messages.push_back({Role::User, format_question(instance) + "\n" + suffix});
  return bundle;
}

namespace {

std::string need(const std::optional<std::string>& v, const TaskInstance& inst,
                 PlaceholderPolicy policy, const char* what, const std::string& placeholder) {
  if (v) return *v;
  if (policy == PlaceholderPolicy::Allow && inst.kind != AnswerKind::Freeform) return placeholder;
  throw ConfigError("few-shot exemplar '" + inst.id + "' has no stored " + what);
}

}  // namespace

std::string exemplar_output(const TaskInstance& instance, StrategyKind strategy,
                            const ExemplarNotes& notes, PlaceholderPolicy policy) {
  const std::string head = "Answer: " + instance.gold + ".";
  switch (textual_base(strategy)) {
    case StrategyKind::Direct: return head;
    case StrategyKind::PostReason:
      return head + " Explanation: " +
             need(notes.justification, instance, policy, "justification",
                  "The answer follows from the given information.");
    case StrategyKind::PostSummary:
      return head + " Summary: " +
             need(notes.summary, instance, policy, "summary",
                  "The question asks for the value above, which is " + instance.gold + ".");
    case StrategyKind::PostConfidence: {
      int pct = 0;
      if (notes.confidence_pct) {
        pct = *notes.confidence_pct;
      } else if (policy == PlaceholderPolicy::Allow && instance.kind != AnswerKind::Freeform) {
        pct = 90;
      } else {
        throw ConfigError("few-shot exemplar '" + instance.id + "' has no stored confidence");
      }
      return head + " Confidence: " + std::to_string(pct) + "%. Explanation: " +
             need(notes.confidence_reason, instance, policy, "confidence reason",
                  "The answer follows from the given information.");
    }
    default: break;
  }
  throw ConfigError("no exemplar format for strategy " + std::string(to_string(strategy)));
}

ExemplarStore ExemplarStore::load(const std::string& path) {
  ExemplarStore store;
  for_each_jsonl(path, [&](const json& r, std::size_t line) {
    try {
      store.put(r.at("instance_id").get<std::string>(),
                parse_strategy(r.at("strategy").get<std::string>()),
                r.at("assistant_text").get<std::string>());
    } catch (const json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
  return store;
}

void ExemplarStore::put(const std::string& instance_id, StrategyKind strategy, std::string text) {
  texts_[{instance_id, strategy}] = std::move(text);
}

std::optional<std::string> ExemplarStore::find(const std::string& instance_id,
                                               StrategyKind strategy) const {
  if (auto it = texts_.find({instance_id, strategy}); it != texts_.end()) return it->second;
  if (auto it = texts_.find({instance_id, textual_base(strategy)}); it != texts_.end()) {
    return it->second;
  }
  return std::nullopt;
}

std::string_view to_string(ShotSelection s) {
  return s == ShotSelection::FirstById ? "first_by_id" : "seeded_sample";
}

ShotSelection parse_shot_selection(std::string_view s) {
  if (s == "first_by_id") return ShotSelection::FirstById;
  if (s == "seeded_sample") return ShotSelection::SeededSample;
  throw ConfigError("unknown shot selection '" + std::string(s) + "'");
}

std::vector<Shot> select_shots(std::span<const TaskInstance> pool, const TaskInstance& instance,
                               StrategyKind strategy, const ExemplarStore& store, std::size_t k,
                               ShotSelection selection, std::uint64_t seed) {
  std::vector<const TaskInstance*> candidates;
  for (const auto& p : pool) {
    if (p.id != instance.id) candidates.push_back(&p);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const TaskInstance* a, const TaskInstance* b) { return a->id < b->id; });

  std::vector<const TaskInstance*> chosen;
  if (selection == ShotSelection::FirstById) {
    const auto n = std::min(k, candidates.size());
    chosen.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n));
  } else {
    for (auto i : sample_indices(candidates.size(), k, seed)) chosen.push_back(candidates[i]);
  }

  std::vector<Shot> shots;
  for (const auto* c : chosen) {
    auto text = store.find(c->id, strategy);
    shots.push_back({*c, text ? *text
                              : exemplar_output(*c, strategy, {}, PlaceholderPolicy::Allow)});
  }
  return shots;
}

}  // namespace postreason
