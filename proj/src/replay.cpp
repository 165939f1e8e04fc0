#include "postreason/client.hpp"
#include "postreason/error.hpp"

namespace postreason {

std::string replay_key(const std::string& model_id, const PromptBundle& bundle) {
  std::string key = model_id;
  key += '|';
  key += to_string(bundle.strategy);
  key += '|';
  key += bundle.instance_id;
  key += '|';
  key += bundle.tag;
  return key;
}

ordered_json to_json(const Transcript& t) {
  ordered_json j;
  j["key"] = t.key;
  j["model_id"] = t.model_id;
  j["strategy"] = t.strategy;
  j["instance_id"] = t.instance_id;
  j["tag"] = t.tag;
  j["text"] = t.text;
  j["finish_reason"] = to_string(t.finish_reason);
  j["prompt_tokens"] = t.prompt_tokens ? ordered_json(*t.prompt_tokens) : ordered_json(nullptr);
  j["completion_tokens"] =
      t.completion_tokens ? ordered_json(*t.completion_tokens) : ordered_json(nullptr);
  return j;
}

Transcript transcript_from_json(const json& j) {
  Transcript t;
  try {
    t.model_id = j.at("model_id").get<std::string>();
    t.strategy = j.at("strategy").get<std::string>();
    t.instance_id = j.at("instance_id").get<std::string>();
    t.tag = j.value("tag", std::string{});
    t.text = j.at("text").get<std::string>();
    t.finish_reason = parse_finish_reason(j.value("finish_reason", std::string("stop")));
    if (j.contains("prompt_tokens") && j["prompt_tokens"].is_number_integer()) {
      t.prompt_tokens = j["prompt_tokens"].get<std::int64_t>();
    }
    if (j.contains("completion_tokens") && j["completion_tokens"].is_number_integer()) {
      t.completion_tokens = j["completion_tokens"].get<std::int64_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("transcript: ") + e.what());
  }
  parse_strategy(t.strategy);
  t.key = t.model_id + "|" + t.strategy + "|" + t.instance_id + "|" + t.tag;
  if (j.contains("key") && j["key"].get<std::string>() != t.key) {
    throw ValidationError("transcript key '" + j["key"].get<std::string>() +
                          "' does not match its fields");
  }
  return t;
}

void ReplayBackend::load(const std::string& path) {
  for_each_jsonl(path, [&](const json& rec, std::size_t line) {
    try {
      add(transcript_from_json(rec));
    } catch (const Error& e) {
      throw ValidationError(path + ":" + std::to_string(line) + ": " + e.what());
    }
  });
}

void ReplayBackend::add(Transcript t) {
  // Later transcripts for the same key win, so appended recordings override.
  auto key = t.key;
  transcripts_.insert_or_assign(std::move(key), std::move(t));
}

RawCompletion ReplayBackend::complete(const PromptBundle& bundle,
                                      const GenerationProfile& profile,
                                      const ModelRegistryEntry& entry) {
  const auto key = replay_key(entry.model_id, bundle);
  auto it = transcripts_.find(key);
  if (it == transcripts_.end()) throw ConfigError("no replay transcript for " + key);
  ++served_;
  const Transcript& t = it->second;

  RawCompletion rc;
  rc.text = t.text;
  rc.finish_reason = t.finish_reason;
  rc.prompt_tokens = t.prompt_tokens;
  rc.completion_tokens =
      t.completion_tokens ? *t.completion_tokens
                          : static_cast<std::int64_t>(mock_token_count(t.text));
  rc.attempts = 1;
  if (auto pos = find_first_stop(rc.text, profile.stop_sequences)) {
    rc.text.resize(*pos);
    rc.truncated_early = true;
    rc.finish_reason = FinishReason::Stop;
    rc.completion_tokens = static_cast<std::int64_t>(mock_token_count(rc.text));
  }
  return rc;
}

RecordingBackend::RecordingBackend(CompletionBackend& inner, const std::string& path)
    : inner_(inner), writer_(path, JsonlWriter::Mode::Append) {}

RawCompletion RecordingBackend::complete(const PromptBundle& bundle,
                                         const GenerationProfile& profile,
                                         const ModelRegistryEntry& entry) {
  RawCompletion rc = inner_.complete(bundle, profile, entry);
  if (rc.finish_reason != FinishReason::Error) {
    Transcript t;
    t.key = replay_key(entry.model_id, bundle);
    t.model_id = entry.model_id;
    t.strategy = std::string(to_string(bundle.strategy));
    t.instance_id = bundle.instance_id;
    t.tag = bundle.tag;
    t.text = rc.text;
    t.finish_reason = rc.finish_reason;
    t.prompt_tokens = rc.prompt_tokens;
    t.completion_tokens = rc.completion_tokens;
    writer_.write(to_json(t));
  }
  return rc;
}

}  // namespace postreason
