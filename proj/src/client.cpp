#include "postreason/client.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <thread>

#include "postreason/error.hpp"

namespace postreason {

std::string_view to_string(ModelClass c) {
  switch (c) {
    case ModelClass::StandardInstruct: return "standard_instruct";
    case ModelClass::ThinkingOpen: return "thinking_open";
    case ModelClass::Qwen35: return "qwen35";
    case ModelClass::ProprietaryApi: return "proprietary_api";
  }
  return "?";
}

ModelClass parse_model_class(std::string_view s) {
  if (s == "standard_instruct") return ModelClass::StandardInstruct;
  if (s == "thinking_open") return ModelClass::ThinkingOpen;
  if (s == "qwen35") return ModelClass::Qwen35;
  if (s == "proprietary_api") return ModelClass::ProprietaryApi;
  throw ConfigError("unknown model class '" + std::string(s) + "'");
}

void GenerationProfile::validate(bool early_stop) const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must be in (0, 1]");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (top_k && *top_k < 1) throw ConfigError("top_k must be >= 1");
  if (early_stop && stop_sequences.empty()) {
    throw ConfigError("early-stop decoding needs at least one stop sequence");
  }
}

GenerationProfile profile_from_json(const json& j) {
  GenerationProfile p;
  p.max_tokens = j.value("max_tokens", p.max_tokens);
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  if (j.contains("top_k") && !j["top_k"].is_null()) p.top_k = j["top_k"].get<int>();
  if (j.contains("presence_penalty") && !j["presence_penalty"].is_null()) {
    p.presence_penalty = j["presence_penalty"].get<double>();
  }
  if (j.contains("repetition_penalty") && !j["repetition_penalty"].is_null()) {
    p.repetition_penalty = j["repetition_penalty"].get<double>();
  }
  if (j.contains("stop")) p.stop_sequences = j["stop"].get<std::vector<std::string>>();
  p.native_thinking = j.value("native_thinking", false);
  if (j.contains("extra")) p.extra = j["extra"];
  p.validate();
  return p;
}

ordered_json to_json(const GenerationProfile& p) {
  ordered_json j;
  j["max_tokens"] = p.max_tokens;
  j["temperature"] = p.temperature;
  j["top_p"] = p.top_p;
  j["top_k"] = p.top_k ? ordered_json(*p.top_k) : ordered_json(nullptr);
  j["presence_penalty"] = p.presence_penalty ? ordered_json(*p.presence_penalty) : ordered_json(nullptr);
  j["repetition_penalty"] =
      p.repetition_penalty ? ordered_json(*p.repetition_penalty) : ordered_json(nullptr);
  j["stop"] = p.stop_sequences;
  j["native_thinking"] = p.native_thinking;
  return j;
}

void ModelRegistryEntry::validate() const {
  if (model_id.empty()) throw ConfigError("registry entry without model_id");
  // Proprietary models may leave their size undisclosed (0).
  const bool size_optional = model_class == ModelClass::ProprietaryApi && param_count_b == 0.0;
  if (!(param_count_b > 0.0) && !size_optional) {
    throw ConfigError(model_id + ": param_count_b must be > 0");
  }
  static const std::regex url(R"(^https?://[A-Za-z0-9._\-]+(:[0-9]{1,5})?(/[^\s]*)?$)");
  if (!std::regex_match(endpoint, url)) {
    throw ConfigError(model_id + ": malformed endpoint '" + endpoint + "'");
  }
  for (const auto& [strategy, profile] : profile_overrides) {
    if (is_thinking(strategy) && !thinking_capable) {
      throw ConfigError(model_id + ": thinking override on a non-thinking model");
    }
    profile.validate();
  }
}

ModelRegistry ModelRegistry::from_json(const json& doc) {
  ModelRegistry reg;
  try {
    for (const auto& m : doc.at("models")) {
      ModelRegistryEntry e;
      e.model_id = m.at("model_id").get<std::string>();
      e.endpoint = m.at("endpoint").get<std::string>();
      e.family = m.value("family", std::string{});
      e.param_count_b = m.value("param_count_b", 0.0);
      e.thinking_capable = m.value("thinking_capable", false);
      e.model_class = parse_model_class(m.value("model_class", std::string("standard_instruct")));
      e.api_key_env = m.value("api_key_env", std::string{});
      if (m.contains("profile_overrides")) {
        for (const auto& [strategy, profile] : m["profile_overrides"].items()) {
          e.profile_overrides[parse_strategy(strategy)] = profile_from_json(profile);
        }
      }
      reg.add(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model registry: ") + e.what());
  }
  return reg;
}

ModelRegistry ModelRegistry::load(const std::string& path) {
  return from_json(load_json_file(path));
}

void ModelRegistry::add(ModelRegistryEntry entry) {
  entry.validate();
  if (index_.contains(entry.model_id)) {
    throw ConfigError("duplicate registry entry " + entry.model_id);
  }
  index_[entry.model_id] = entries_.size();
  entries_.push_back(std::move(entry));
}

const ModelRegistryEntry& ModelRegistry::find(const std::string& model_id) const {
  auto it = index_.find(model_id);
  if (it == index_.end()) throw ConfigError("model '" + model_id + "' is not in the registry");
  return entries_[it->second];
}

std::map<std::string, double> ModelRegistry::param_counts() const {
  std::map<std::string, double> out;
  for (const auto& e : entries_) {
    if (e.param_count_b > 0.0) out[e.model_id] = e.param_count_b;
  }
  return out;
}

GenerationProfile default_profile(ModelClass model_class, StrategyKind strategy) {
  GenerationProfile p;
  p.temperature = 0.7;
  p.top_p = 0.8;
  p.top_k = 20;
  const bool thinking = is_thinking(strategy);
  const bool post = textual_base(strategy) != StrategyKind::Direct;

  if (thinking && (model_class == ModelClass::StandardInstruct ||
                   model_class == ModelClass::ProprietaryApi)) {
    throw CapabilityError("model class " + std::string(to_string(model_class)) +
                          " has no native-thinking profile");
  }

  switch (model_class) {
    case ModelClass::StandardInstruct:
      p.max_tokens = post ? 4096 : 2048;
      break;
    case ModelClass::ThinkingOpen:
      if (thinking) {
        p.max_tokens = 16384;
        p.temperature = 0.6;
        p.top_p = 0.95;
      } else {
        p.max_tokens = post ? 4096 : 2048;
      }
      break;
    case ModelClass::Qwen35:
      p.presence_penalty = 1.5;
      p.repetition_penalty = 1.0;
      if (thinking) {
        p.max_tokens = 16384;
        p.temperature = 1.0;
        p.top_p = 0.95;
      } else {
        p.max_tokens = post ? 4096 : 2048;
      }
      break;
    case ModelClass::ProprietaryApi:
      p.max_tokens = 8192;
      break;
  }
  p.native_thinking = thinking;
  return p;
}

GenerationProfile profile_for(const ModelRegistryEntry& entry, StrategyKind strategy) {
  if (is_thinking(strategy) && !entry.thinking_capable) {
    throw CapabilityError(entry.model_id + " is not thinking-capable; cannot run " +
                          std::string(to_string(strategy)));
  }
  if (auto it = entry.profile_overrides.find(strategy); it != entry.profile_overrides.end()) {
    return it->second;
  }
  return default_profile(entry.model_class, strategy);
}

std::vector<std::string> default_stop_sequences(StrategyKind strategy) {
  std::vector<std::string> stops = {"Explanation:", " Explanation:", "\nExplanation:"};
  switch (textual_base(strategy)) {
    case StrategyKind::PostSummary:
      stops.insert(stops.end(), {"Summary:", " Summary:", "\nSummary:"});
      break;
    case StrategyKind::PostConfidence:
      stops.insert(stops.end(), {"Confidence:", " Confidence:", "\nConfidence:"});
      break;
    default: break;
  }
  return stops;
}

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Error: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop" || s == "eos" || s == "end_turn" || s == "stop_sequence") {
    return FinishReason::Stop;
  }
  if (s == "length" || s == "max_tokens") return FinishReason::Length;
  return FinishReason::Error;
}

std::size_t mock_token_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || u >= 0x80) {
      if (!in_word) ++n;
      in_word = true;
    } else {
      in_word = false;
      if (!std::isspace(u)) ++n;
    }
  }
  return n;
}

std::optional<std::size_t> find_first_stop(std::string_view text,
                                           std::span<const std::string> stops) {
  std::optional<std::size_t> best;
  for (const auto& s : stops) {
    if (s.empty()) continue;
    auto pos = text.find(s);
    if (pos != std::string_view::npos && (!best || pos < *best)) best = pos;
  }
  return best;
}

json build_chat_request(const PromptBundle& bundle, const GenerationProfile& profile,
                        const ModelRegistryEntry& entry) {
  json messages = json::array();
  if (!bundle.system.empty()) messages.push_back({{"role", "system"}, {"content", bundle.system}});
  for (const auto& m : bundle.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  json req = {
      {"model", entry.model_id},
      {"messages", std::move(messages)},
      {"max_tokens", profile.max_tokens},
      {"temperature", profile.temperature},
      {"top_p", profile.top_p},
  };
  if (profile.top_k) req["top_k"] = *profile.top_k;
  if (profile.presence_penalty) req["presence_penalty"] = *profile.presence_penalty;
  if (profile.repetition_penalty) req["repetition_penalty"] = *profile.repetition_penalty;
  if (!profile.stop_sequences.empty()) req["stop"] = profile.stop_sequences;
  if (entry.thinking_capable) {
    req["chat_template_kwargs"] = {{"enable_thinking", profile.native_thinking}};
  }
  if (profile.extra.is_object()) {
    for (const auto& [k, v] : profile.extra.items()) req[k] = v;
  }
  return req;
}

RawCompletion parse_chat_response(const std::string& body, const GenerationProfile& profile) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw ProtocolError("upstream returned non-JSON body");
  }
  RawCompletion out;
  try {
    const auto& choice = doc.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    out.text = content.is_null() ? std::string{} : content.get<std::string>();
    const auto& fr = choice.value("finish_reason", json(nullptr));
    out.finish_reason = fr.is_string() ? parse_finish_reason(fr.get<std::string>())
                                       : FinishReason::Stop;
    if (doc.contains("usage") && doc["usage"].is_object()) {
      const auto& u = doc["usage"];
      if (u.contains("prompt_tokens") && u["prompt_tokens"].is_number_integer()) {
        out.prompt_tokens = u["prompt_tokens"].get<std::int64_t>();
      }
      if (u.contains("completion_tokens") && u["completion_tokens"].is_number_integer()) {
        out.completion_tokens = u["completion_tokens"].get<std::int64_t>();
      }
    }
    // vLLM reports which stop string fired.
    if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) {
      const auto hit = choice["stop_reason"].get<std::string>();
      if (std::find(profile.stop_sequences.begin(), profile.stop_sequences.end(), hit) !=
          profile.stop_sequences.end()) {
        out.truncated_early = true;
        out.finish_reason = FinishReason::Stop;
      }
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion: ") + e.what());
  }
  if (!profile.stop_sequences.empty()) {
    if (auto pos = find_first_stop(out.text, profile.stop_sequences)) {
      out.text.resize(*pos);
      out.truncated_early = true;
      out.finish_reason = FinishReason::Stop;
    }
  }
  return out;
}

std::chrono::milliseconds RetryPolicy::delay_for(int retry) const {
  const double scaled =
      static_cast<double>(base_delay.count()) * std::pow(multiplier, std::max(0, retry - 1));
  const auto capped = std::min(scaled, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped));
}

std::vector<RawCompletion> run_batch(CompletionBackend& backend,
                                     std::span<const PromptBundle> bundles,
                                     const ModelRegistryEntry& entry,
                                     const GenerationProfile& profile, std::size_t max_in_flight,
                                     const BatchCallback& on_done) {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  std::vector<RawCompletion> results(bundles.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mu;

  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < bundles.size(); i = next.fetch_add(1)) {
      RawCompletion rc;
      try {
        rc = backend.complete(bundles[i], profile, entry);
      } catch (const std::exception& e) {
        rc.finish_reason = FinishReason::Error;
        rc.error = e.what();
        rc.text.clear();
      }
      results[i] = std::move(rc);
      if (on_done) {
        std::lock_guard lock(callback_mu);
        on_done(i, results[i]);
      }
    }
  };

  const auto n_workers = std::min(max_in_flight, bundles.size());
  std::vector<std::jthread> workers;
  workers.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) workers.emplace_back(worker);
  workers.clear();
  return results;
}

std::vector<RawCompletion> run_batch(CompletionBackend& backend,
                                     std::span<const PromptBundle> bundles,
                                     const ModelRegistryEntry& entry, StrategyKind strategy,
                                     std::size_t max_in_flight) {
  return run_batch(backend, bundles, entry, profile_for(entry, strategy), max_in_flight);
}

}  // namespace postreason
