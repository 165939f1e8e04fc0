#include "fixtures.hpp"

#include <random>

#include "postreason/parse.hpp"
#include "postreason/text.hpp"

namespace fixtures {

namespace fs = std::filesystem;

std::string data_path(const std::string& rel) {
  return (fs::path(POSTREASON_DATA_DIR) / rel).string();
}

std::string test_data_path(const std::string& rel) {
  return (fs::path(POSTREASON_TEST_DATA_DIR) / rel).string();
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("postreason-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

postreason::RawCompletion FakeBackend::complete(const postreason::PromptBundle& bundle,
                                                const postreason::GenerationProfile& profile,
                                                const postreason::ModelRegistryEntry& entry) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    models_.push_back(entry.model_id);
  }
  auto rc = fn_(entry, bundle);
  if (auto pos = postreason::find_first_stop(rc.text, profile.stop_sequences)) {
    rc.text.resize(*pos);
    rc.truncated_early = true;
    rc.finish_reason = postreason::FinishReason::Stop;
  }
  return rc;
}

std::vector<std::string> FakeBackend::models_called() const {
  std::lock_guard lock(mu_);
  return models_;
}

postreason::RawCompletion ok_text(std::string text) {
  postreason::RawCompletion rc;
  rc.text = std::move(text);
  rc.finish_reason = postreason::FinishReason::Stop;
  rc.attempts = 1;
  return rc;
}

postreason::ModelRegistryEntry entry(const std::string& id, const std::string& endpoint,
                                     postreason::ModelClass cls, bool thinking, double params) {
  postreason::ModelRegistryEntry e;
  e.model_id = id;
  e.endpoint = endpoint;
  e.family = "test";
  e.param_count_b = params;
  e.thinking_capable = thinking;
  e.model_class = cls;
  return e;
}

postreason::TaskInstance instance(const std::string& id, const std::string& question,
                                  const std::string& gold, postreason::AnswerKind kind) {
  postreason::TaskInstance t;
  t.id = id;
  t.benchmark = "test";
  t.question = question;
  t.gold = gold;
  t.kind = kind;
  t.split = postreason::Split::Train;
  return t;
}

std::string file_bytes(const std::string& path) { return postreason::text::read_file(path); }

std::string words(std::size_t n, const std::string& stem) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += stem + std::to_string(i + 1);
  }
  return out;
}

}  // namespace fixtures

namespace fixtures {

std::vector<GoldenCase> load_golden() {
  std::vector<GoldenCase> out;
  for (const auto& r : postreason::read_jsonl(test_data_path("golden_transcripts.jsonl"))) {
    GoldenCase c;
    c.name = r.at("name").get<std::string>();
    c.text = r.at("text").get<std::string>();
    c.kind = postreason::parse_answer_kind(r.at("kind").get<std::string>());
    if (r.contains("labels")) c.labels = r["labels"].get<std::vector<std::string>>();
    if (!r.at("expected_answer").is_null()) c.expected_answer = r["expected_answer"].get<std::string>();
    c.expected_prefix = r.at("expected_prefix").get<std::string>();
    c.gold = r.at("gold").get<std::string>();
    c.expected_correct = r.at("expected_correct").get<bool>();
    out.push_back(std::move(c));
  }
  return out;
}

std::string check_golden(const GoldenCase& c) {
  using namespace postreason;
  const auto stripped = strip_thinking(c.text);
  const auto ex = extract_answer(stripped, c.kind, c.labels);
  if (ex.answer != c.expected_answer) {
    return c.name + ": answer " + ex.answer.value_or("<none>") + " != " +
           c.expected_answer.value_or("<none>");
  }
  if (score(ex, c.gold, c.kind) != c.expected_correct) return c.name + ": score differs";
  const auto cut = truncate_at_answer(c.text, c.kind, c.labels);
  if (cut.prefix != c.expected_prefix) return c.name + ": prefix '" + cut.prefix + "'";
  if (cut.prefix != c.text.substr(0, cut.cut)) return c.name + ": cut offset";
  if (ex.method == ExtractionMethod::AnswerTag) {
    const auto again = extract_answer(strip_thinking(cut.prefix), c.kind, c.labels);
    if (again.answer != ex.answer) return c.name + ": truncation changed the answer";
  }
  return {};
}

}  // namespace fixtures
