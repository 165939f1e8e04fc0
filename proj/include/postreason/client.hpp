#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "postreason/enums.hpp"
#include "postreason/jsonl.hpp"
#include "postreason/prompts.hpp"

namespace postreason {

/// Rows of the decoding-parameter table. Each class has its own defaults per
/// strategy; thinking rows exist only for classes with native reasoning.
enum class ModelClass {
  StandardInstruct,  // Llama, Ministral, Mistral, Gemma
  ThinkingOpen,      // GPT-OSS, Qwen3
  Qwen35,
  ProprietaryApi,
};

std::string_view to_string(ModelClass c);
ModelClass parse_model_class(std::string_view s);

struct GenerationProfile {
  int max_tokens = 2048;
  double temperature = 0.7;
  double top_p = 0.8;
  std::optional<int> top_k;
  std::optional<double> presence_penalty;
  std::optional<double> repetition_penalty;
  std::vector<std::string> stop_sequences;
  bool native_thinking = false;
  /// Provider-specific request fields merged verbatim into the request body.
  json extra = json::object();

  void validate(bool early_stop = false) const;
  bool operator==(const GenerationProfile&) const = default;
};

GenerationProfile profile_from_json(const json& j);
ordered_json to_json(const GenerationProfile& p);

struct ModelRegistryEntry {
  std::string model_id;
  std::string endpoint;
  std::string family;
  /// Billions of parameters; 0 for proprietary models with undisclosed size.
  double param_count_b = 0.0;
  bool thinking_capable = false;
  ModelClass model_class = ModelClass::StandardInstruct;
  /// Name of the environment variable holding the API key; empty for none.
  std::string api_key_env;
  std::map<StrategyKind, GenerationProfile> profile_overrides;

  void validate() const;
};

class ModelRegistry {
 public:
  static ModelRegistry from_json(const json& doc);
  static ModelRegistry load(const std::string& path);

  void add(ModelRegistryEntry entry);
  const ModelRegistryEntry& find(const std::string& model_id) const;
  bool contains(const std::string& model_id) const { return index_.contains(model_id); }
  const std::vector<ModelRegistryEntry>& entries() const { return entries_; }
  std::map<std::string, double> param_counts() const;

 private:
  std::vector<ModelRegistryEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Table defaults. Throws CapabilityError for thinking strategies on classes
/// without a thinking row. Ablation strategies share the post-reason row.
GenerationProfile default_profile(ModelClass model_class, StrategyKind strategy);

GenerationProfile profile_for(const ModelRegistryEntry& entry, StrategyKind strategy);

/// End-of-answer markers for early-stop decoding.
std::vector<std::string> default_stop_sequences(StrategyKind strategy);

enum class FinishReason { Stop, Length, Error };
std::string_view to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct RawCompletion {
  std::string text;
  FinishReason finish_reason = FinishReason::Error;
  std::optional<std::int64_t> completion_tokens;
  std::optional<std::int64_t> prompt_tokens;
  std::int64_t latency_ms = 0;
  bool truncated_early = false;
  int attempts = 0;
  std::string error;
};

/// Deterministic stand-in tokenizer: each maximal alphanumeric run is one
/// token and every other non-space byte is one token. Prefix-monotone.
std::size_t mock_token_count(std::string_view text);

/// Earliest occurrence of any stop sequence, if any.
std::optional<std::size_t> find_first_stop(std::string_view text,
                                           std::span<const std::string> stops);

json build_chat_request(const PromptBundle& bundle, const GenerationProfile& profile,
                        const ModelRegistryEntry& entry);

/// Parses an OpenAI-compatible response body. Applies the client-side stop
/// scan when the profile carries stop sequences. Throws ProtocolError.
RawCompletion parse_chat_response(const std::string& body, const GenerationProfile& profile);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual RawCompletion complete(const PromptBundle& bundle, const GenerationProfile& profile,
                                 const ModelRegistryEntry& entry) = 0;
};

struct RetryPolicy {
  int max_attempts = 4;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{8000};
  double multiplier = 2.0;

  /// Delay before retry number `retry` (1-based).
  std::chrono::milliseconds delay_for(int retry) const;
};

struct HttpOptions {
  RetryPolicy retry;
  std::chrono::seconds connect_timeout{10};
  std::chrono::seconds read_timeout{600};
};

/// Chat-completions transport. Retries 429, 5xx and transport failures with
/// exponential backoff; other 4xx statuses fail immediately.
class HttpChatBackend : public CompletionBackend {
 public:
  explicit HttpChatBackend(HttpOptions options = {});

  RawCompletion complete(const PromptBundle& bundle, const GenerationProfile& profile,
                         const ModelRegistryEntry& entry) override;

  std::uint64_t requests_sent() const { return requests_sent_.load(); }

 private:
  HttpOptions options_;
  std::atomic<std::uint64_t> requests_sent_{0};
};

std::string replay_key(const std::string& model_id, const PromptBundle& bundle);

struct Transcript {
  std::string key;
  std::string model_id;
  std::string strategy;
  std::string instance_id;
  std::string tag;
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::optional<std::int64_t> prompt_tokens;
  std::optional<std::int64_t> completion_tokens;
};

ordered_json to_json(const Transcript& t);
Transcript transcript_from_json(const json& j);

/// Serves completions from recorded transcripts. Stop sequences are applied
/// client-side, so one full transcript replays under both decoding modes.
class ReplayBackend : public CompletionBackend {
 public:
  ReplayBackend() = default;
  explicit ReplayBackend(const std::string& path) { load(path); }

  /// Adds every transcript in a JSONL file; later keys replace earlier ones.
  void load(const std::string& path);
  void add(Transcript t);

  RawCompletion complete(const PromptBundle& bundle, const GenerationProfile& profile,
                         const ModelRegistryEntry& entry) override;

  std::uint64_t requests_served() const { return served_.load(); }
  std::size_t size() const { return transcripts_.size(); }

 private:
  std::unordered_map<std::string, Transcript> transcripts_;
  std::atomic<std::uint64_t> served_{0};
};

/// Forwards to `inner` and appends every successful completion as a transcript.
class RecordingBackend : public CompletionBackend {
 public:
  RecordingBackend(CompletionBackend& inner, const std::string& path);

  RawCompletion complete(const PromptBundle& bundle, const GenerationProfile& profile,
                         const ModelRegistryEntry& entry) override;

 private:
  CompletionBackend& inner_;
  JsonlWriter writer_;
};

using BatchCallback = std::function<void(std::size_t index, const RawCompletion&)>;

/// Completes every bundle with at most `max_in_flight` outstanding requests.
/// Results line up with `bundles`; failures are recorded per item. The callback
/// runs serialized, as each item finishes.
std::vector<RawCompletion> run_batch(CompletionBackend& backend,
                                     std::span<const PromptBundle> bundles,
                                     const ModelRegistryEntry& entry,
                                     const GenerationProfile& profile, std::size_t max_in_flight,
                                     const BatchCallback& on_done = {});

std::vector<RawCompletion> run_batch(CompletionBackend& backend,
                                     std::span<const PromptBundle> bundles,
                                     const ModelRegistryEntry& entry, StrategyKind strategy,
                                     std::size_t max_in_flight);

}  // namespace postreason
