#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "postreason/client.hpp"
#include "postreason/corpus.hpp"

namespace fixtures {

std::string data_path(const std::string& rel);       // shipped data/
std::string test_data_path(const std::string& rel);  // tests/data/

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// In-process backend driven by a function of (model, bundle). Records calls.
class FakeBackend : public postreason::CompletionBackend {
 public:
  using Fn = std::function<postreason::RawCompletion(const postreason::ModelRegistryEntry&,
                                                     const postreason::PromptBundle&)>;
  explicit FakeBackend(Fn fn) : fn_(std::move(fn)) {}

  postreason::RawCompletion complete(const postreason::PromptBundle& bundle,
                                     const postreason::GenerationProfile& profile,
                                     const postreason::ModelRegistryEntry& entry) override;

  std::size_t calls() const { return calls_.load(); }
  std::vector<std::string> models_called() const;

 private:
  Fn fn_;
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  std::vector<std::string> models_;
};

postreason::RawCompletion ok_text(std::string text);

postreason::ModelRegistryEntry entry(const std::string& id, const std::string& endpoint,
                                     postreason::ModelClass cls = postreason::ModelClass::StandardInstruct,
                                     bool thinking = false, double params = 8.0);

postreason::TaskInstance instance(const std::string& id, const std::string& question,
                                  const std::string& gold,
                                  postreason::AnswerKind kind = postreason::AnswerKind::Integer);

std::string file_bytes(const std::string& path);

struct GoldenCase {
  std::string name;
  std::string text;
  postreason::AnswerKind kind = postreason::AnswerKind::Integer;
  std::vector<std::string> labels;
  std::optional<std::string> expected_answer;
  std::string expected_prefix;
  std::string gold;
  bool expected_correct = false;
};

std::vector<GoldenCase> load_golden();

/// Empty when the case agrees with the parser, otherwise what differed.
std::string check_golden(const GoldenCase& c);

/// Space-joined `n` distinct filler words ("w1 w2 ...").
std::string words(std::size_t n, const std::string& stem = "step");

}  // namespace fixtures
