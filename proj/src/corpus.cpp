#include "postreason/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "postreason/error.hpp"
#include "postreason/text.hpp"

namespace postreason {

std::vector<std::string> TaskInstance::labels() const {
  std::vector<std::string> out;
  out.reserve(choices.size());
  for (const auto& c : choices) out.push_back(c.label);
  return out;
}

namespace {

bool parses_as_integer(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

bool parses_as_number(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  bool digits = false;
  bool dot = false;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string canonical_gold(std::string_view raw, AnswerKind kind) {
  std::string_view v = raw;
  if (auto pos = v.rfind("####"); pos != std::string_view::npos) v = v.substr(pos + 4);
  v = text::trim(v);
  switch (kind) {
    case AnswerKind::Integer:
    case AnswerKind::Numeric: {
      std::string out;
      for (char c : v) {
        if (c != ',' && c != '$') out.push_back(c);
      }
      return out;
    }
    case AnswerKind::Letter: return text::to_upper(v);
    case AnswerKind::Freeform: return std::string(v);
  }
  return std::string(v);
}

std::string invariant_violation(const TaskInstance& inst) {
  if (inst.id.empty()) return "empty id";
  switch (inst.kind) {
    case AnswerKind::Letter: {
      if (inst.choices.empty()) return "letter kind without choices";
      for (const auto& c : inst.choices) {
        if (c.label == inst.gold) return {};
      }
      return "gold '" + inst.gold + "' is not a choice label";
    }
    case AnswerKind::Integer:
      if (!parses_as_integer(inst.gold)) return "gold '" + inst.gold + "' is not an integer";
      return {};
    case AnswerKind::Numeric:
      if (!parses_as_number(inst.gold)) return "gold '" + inst.gold + "' is not numeric";
      return {};
    case AnswerKind::Freeform:
      if (text::trim(inst.gold).empty()) return "empty gold";
      return {};
  }
  return {};
}

void validate(const TaskInstance& instance) {
  if (auto why = invariant_violation(instance); !why.empty()) {
    throw ValidationError(instance.benchmark + "/" + instance.id + ": " + why);
  }
}

ordered_json to_json(const TaskInstance& inst) {
  ordered_json j;
  j["id"] = inst.id;
  j["question"] = inst.question;
  if (!inst.choices.empty()) {
    auto arr = ordered_json::array();
    for (const auto& c : inst.choices) arr.push_back({{"label", c.label}, {"text", c.text}});
    j["choices"] = std::move(arr);
  }
  j["gold"] = inst.gold;
  j["kind"] = std::string(to_string(inst.kind));
  return j;
}

TaskInstance instance_from_json(const json& record, const std::string& benchmark,
                                AnswerKind kind, Split split) {
  if (!record.is_object()) throw ValidationError("record is not a JSON object");
  for (const char* key : {"id", "question", "gold"}) {
    if (!record.contains(key) || !record[key].is_string()) {
      throw ValidationError(std::string("missing or non-string field '") + key + "'");
    }
  }
  TaskInstance inst;
  inst.id = record["id"].get<std::string>();
  inst.benchmark = benchmark;
  inst.question = record["question"].get<std::string>();
  inst.kind = kind;
  inst.split = split;
  if (record.contains("kind")) {
    if (!record["kind"].is_string()) throw ValidationError("field 'kind' is not a string");
    const auto declared = parse_answer_kind(record["kind"].get<std::string>());
    if (declared != kind) {
      throw ValidationError("record kind '" + std::string(to_string(declared)) +
                            "' does not match declared kind '" + std::string(to_string(kind)) +
                            "'");
    }
  }
  if (record.contains("choices")) {
    if (!record["choices"].is_array()) throw ValidationError("field 'choices' is not an array");
    for (const auto& c : record["choices"]) {
      if (!c.is_object() || !c.contains("label") || !c.contains("text") ||
          !c["label"].is_string() || !c["text"].is_string()) {
        throw ValidationError("choice entries need string 'label' and 'text'");
      }
      inst.choices.push_back({c["label"].get<std::string>(), c["text"].get<std::string>()});
    }
  }
  inst.gold = canonical_gold(record["gold"].get<std::string>(), kind);
  return inst;
}

std::vector<TaskInstance> parse_benchmark(std::istream& in, const std::string& source_name,
                                          const std::string& benchmark, AnswerKind kind,
                                          Split split) {
  std::vector<TaskInstance> out;
  std::vector<std::string> offending;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error&) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": malformed line");
    }
    TaskInstance inst;
    try {
      inst = instance_from_json(record, benchmark, kind, split);
    } catch (const ValidationError& e) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.insert(inst.id).second) {
      throw ValidationError(source_name + ":" + std::to_string(line_no) + ": duplicate id '" +
                            inst.id + "'");
    }
    if (!invariant_violation(inst).empty()) offending.push_back(inst.id);
    out.push_back(std::move(inst));
  }
  if (!offending.empty()) {
    std::string msg = source_name + ": gold/kind mismatch for ids:";
    for (const auto& id : offending) msg += " " + id;
    throw ValidationError(msg);
  }
  return out;
}

std::vector<TaskInstance> load_benchmark(const std::string& path, const std::string& benchmark,
                                         AnswerKind kind, Split split) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open benchmark file " + path);
  return parse_benchmark(in, path, benchmark, kind, split);
}

void write_instances(const std::string& path, std::span<const TaskInstance> instances) {
  JsonlWriter writer(path, JsonlWriter::Mode::Truncate);
  for (const auto& inst : instances) writer.write(to_json(inst));
}

std::string normalize_question(std::string_view question) {
  std::string stripped;
  stripped.reserve(question.size());
  for (char c : question) {
    if (is_ascii_punct(c)) continue;
    stripped.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return text::collapse_whitespace(stripped);
}

ContaminationResult filter_contamination(std::span<const TaskInstance> train,
                                         std::span<const TaskInstance> eval_sets) {
  std::unordered_set<std::string> eval_keys;
  eval_keys.reserve(eval_sets.size());
  for (const auto& e : eval_sets) eval_keys.insert(normalize_question(e.question));

  ContaminationResult result;
  for (const auto& t : train) {
    if (eval_keys.contains(normalize_question(t.question))) {
      result.removed.push_back(t);
    } else {
      result.kept.push_back(t);
    }
  }
  return result;
}

CorpusManifest CorpusManifest::from_json(const json& doc, const std::string& base_dir) {
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    return path.lexically_normal().string();
  };
  CorpusManifest m;
  try {
    for (const auto& s : doc.at("sources")) {
      SourceSpec spec;
      spec.path = resolve(s.at("path").get<std::string>());
      spec.benchmark = s.at("benchmark").get<std::string>();
      spec.name = s.value("name", spec.benchmark);
      spec.kind = parse_answer_kind(s.value("kind", std::string("integer")));
      spec.split = parse_split(s.value("split", std::string("train")));
      m.sources.push_back(std::move(spec));
    }
    if (doc.contains("composition")) {
      for (const auto& c : doc["composition"]) {
        const auto count = c.at("count").get<long long>();
        if (count < 0) throw ConfigError("composition count must be non-negative");
        m.composition.push_back({c.at("source").get<std::string>(),
                                 static_cast<std::size_t>(count)});
      }
    }
    m.seed = doc.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("corpus manifest: ") + e.what());
  }
  m.validate();
  return m;
}

CorpusManifest CorpusManifest::load(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return from_json(load_json_file(path), base);
}

void CorpusManifest::validate() const {
  std::set<std::string> paths;
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (!paths.insert(s.path).second) throw ConfigError("duplicate source path " + s.path);
    if (!names.insert(s.name).second) throw ConfigError("duplicate source name " + s.name);
  }
  for (const auto& c : composition) {
    if (!names.contains(c.source)) {
      throw ConfigError("composition names unknown source '" + c.source + "'");
    }
  }
}

namespace {

std::uint64_t next_mt(void* state) { return (*static_cast<std::mt19937_64*>(state))(); }

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t bounded_draw(std::uint64_t (*next)(void*), void* state, std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Reject the top partial bucket so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = next(state);
  } while (r >= limit);
  return r % bound;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + bounded_draw(next_mt, &rng, n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

std::vector<TaskInstance> compose_training_mix(const CorpusManifest& manifest,
                                               const InstancePools& pools, std::uint64_t seed) {
  std::vector<TaskInstance> out;
  std::unordered_set<std::string> ids;
  for (std::size_t s = 0; s < manifest.composition.size(); ++s) {
    const auto& target = manifest.composition[s];
    if (target.count == 0) continue;
    auto it = pools.find(target.source);
    const std::size_t available = it == pools.end() ? 0 : it->second.size();
    if (available < target.count) {
      throw ValidationError("source '" + target.source + "' has " + std::to_string(available) +
                            " instances, short by " + std::to_string(target.count - available));
    }
    const auto& pool = it->second;
    for (auto i : sample_indices(pool.size(), target.count, splitmix(seed ^ splitmix(s)))) {
      if (!ids.insert(pool[i].id).second) {
        throw ValidationError("duplicate id '" + pool[i].id + "' across training sources");
      }
      out.push_back(pool[i]);
    }
  }
  return out;
}

}  // namespace postreason
