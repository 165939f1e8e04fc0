#include <doctest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "postreason/corpus.hpp"
#include "postreason/error.hpp"

using namespace postreason;

namespace {

std::vector<TaskInstance> parse(const std::string& body, AnswerKind kind,
                                const std::string& bench = "b") {
  std::istringstream in(body);
  return parse_benchmark(in, "mem", bench, kind);
}

std::vector<TaskInstance> pool(const std::string& prefix, std::size_t n) {
  std::vector<TaskInstance> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(fixtures::instance(prefix + "-" + std::to_string(i),
                                     prefix + " question number " + std::to_string(i),
                                     std::to_string(i)));
  }
  return out;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("empty file gives no instances") { CHECK(parse("", AnswerKind::Numeric).empty()); }

  TEST_CASE("GSM8K-style record loads") {
    auto v = parse(R"({"id":"g1","question":"q?","gold":"18","kind":"numeric"})" "\n",
                   AnswerKind::Numeric, "gsm8k");
    REQUIRE(v.size() == 1);
    CHECK(v[0].id == "g1");
    CHECK(v[0].kind == AnswerKind::Numeric);
    CHECK(v[0].gold == "18");
    CHECK(v[0].benchmark == "gsm8k");
  }

  TEST_CASE("gold canonicalization") {
    CHECK(canonical_gold("Some work\n#### 1,234", AnswerKind::Integer) == "1234");
    CHECK(canonical_gold(" $18 ", AnswerKind::Numeric) == "18");
    CHECK(canonical_gold("c", AnswerKind::Letter) == "C");
    CHECK(canonical_gold(" (A) yes ", AnswerKind::Freeform) == "(A) yes");
  }

  TEST_CASE("letter gold outside choice labels is a validation error naming the id") {
    std::string line = R"({"id":"m1","question":"q","choices":[)";
    for (char c = 'A'; c <= 'J'; ++c) {
      line += std::string(c == 'A' ? "" : ",") + R"({"label":")" + c + R"(","text":"t"})";
    }
    line += R"(],"gold":"K","kind":"letter"})";
    try {
      parse(line + "\n", AnswerKind::Letter);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("m1") != std::string::npos);
    }
  }

  TEST_CASE("integer kind rejects non-integer gold") {
    CHECK_THROWS_AS(parse(R"({"id":"a","question":"q","gold":"2.5"})" "\n", AnswerKind::Integer),
                    ValidationError);
  }

  TEST_CASE("malformed line names its line number") {
    const std::string body = R"({"id":"a","question":"q","gold":"1"})" "\n{oops\n";
    try {
      parse(body, AnswerKind::Integer);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
  }

  TEST_CASE("duplicate ids within a benchmark are rejected") {
    const std::string body =
        R"({"id":"a","question":"q","gold":"1"})" "\n" R"({"id":"a","question":"r","gold":"2"})" "\n";
    CHECK_THROWS_AS(parse(body, AnswerKind::Integer), ValidationError);
  }

  TEST_CASE("load, serialize, load is the identity") {
    fixtures::TempDir dir("corpus");
    for (const char* name : {"gpqa", "mmlu_pro", "gsm8k", "bbh", "amc8"}) {
      const auto kind = std::string(name) == "gsm8k"   ? AnswerKind::Numeric
                        : std::string(name) == "bbh"   ? AnswerKind::Freeform
                        : std::string(name) == "amc8"  ? AnswerKind::Integer
                                                       : AnswerKind::Letter;
      auto first = load_benchmark(fixtures::data_path(std::string("fewshot/") + name + ".jsonl"),
                                  name, kind, Split::Fewshot);
      REQUIRE(first.size() == 3);
      write_instances(dir.file("x.jsonl"), first);
      auto second = load_benchmark(dir.file("x.jsonl"), name, kind, Split::Fewshot);
      CHECK(first == second);
    }
  }

  TEST_CASE("contamination filter") {
    auto train = pool("t", 5);
    SUBCASE("no eval sets keeps everything") {
      auto r = filter_contamination(train, {});
      CHECK(r.kept == train);
      CHECK(r.removed.empty());
    }
    SUBCASE("exact duplicate is removed") {
      std::vector<TaskInstance> eval = {train[2]};
      eval[0].id = "eval-1";
      auto r = filter_contamination(train, eval);
      REQUIRE(r.removed.size() == 1);
      CHECK(r.removed[0].id == train[2].id);
      CHECK(r.kept.size() == 4);
    }
    SUBCASE("casing, spacing and punctuation differences still match") {
      auto eval = fixtures::instance("e", "T   QUESTION number 3!!", "3");
      auto r = filter_contamination(train, std::vector{eval});
      REQUIRE(r.removed.size() == 1);
      CHECK(r.removed[0].id == "t-3");
      CHECK(normalize_question("T   QUESTION number 3!!") == normalize_question(train[3].question));
    }
    SUBCASE("partition and idempotence hold") {
      std::vector<TaskInstance> eval = {train[0], train[4]};
      auto r = filter_contamination(train, eval);
      CHECK(r.kept.size() + r.removed.size() == train.size());
      std::set<std::string> kept_ids, removed_ids;
      for (auto& t : r.kept) kept_ids.insert(t.id);
      for (auto& t : r.removed) removed_ids.insert(t.id);
      for (auto& id : kept_ids) CHECK_FALSE(removed_ids.contains(id));
      auto again = filter_contamination(r.kept, eval);
      CHECK(again.removed.empty());
      CHECK(again.kept == r.kept);
    }
  }

  TEST_CASE("training mix reproduces the 3,500-problem composition") {
    CorpusManifest m;
    const std::vector<std::pair<std::string, std::size_t>> targets = {
        {"Orca", 1234}, {"Synthetic", 1121}, {"CNK12", 668}, {"Olympiads", 447}, {"AMC", 30}};
    InstancePools pools;
    for (const auto& [name, count] : targets) {
      m.sources.push_back({name, name + ".jsonl", name, AnswerKind::Integer, Split::Train});
      m.composition.push_back({name, count});
      pools[name] = pool(name, count + 200);
    }
    m.validate();
    auto mix = compose_training_mix(m, pools, 7);
    CHECK(mix.size() == 3500);
    std::map<std::string, std::size_t> per;
    std::set<std::string> ids;
    for (const auto& t : mix) {
      ++per[t.id.substr(0, t.id.find('-'))];
      ids.insert(t.id);
    }
    for (const auto& [name, count] : targets) CHECK(per[name] == count);
    CHECK(ids.size() == mix.size());
    CHECK(compose_training_mix(m, pools, 7) == mix);
    CHECK(compose_training_mix(m, pools, 8) != mix);
  }

  TEST_CASE("zero target gives an empty mix") {
    CorpusManifest m;
    m.sources.push_back({"s", "s.jsonl", "s", AnswerKind::Integer, Split::Train});
    m.composition.push_back({"s", 0});
    InstancePools pools{{"s", pool("s", 3)}};
    CHECK(compose_training_mix(m, pools, 1).empty());
  }

  TEST_CASE("short pool names the source and the shortfall") {
    CorpusManifest m;
    m.sources.push_back({"small", "s.jsonl", "s", AnswerKind::Integer, Split::Train});
    m.composition.push_back({"small", 10});
    InstancePools pools{{"small", pool("small", 4)}};
    try {
      compose_training_mix(m, pools, 1);
      FAIL("expected error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("small") != std::string::npos);
      CHECK(msg.find('6') != std::string::npos);
    }
  }

  TEST_CASE("manifest rejects duplicate paths and unknown sources") {
    json doc = json::parse(R"({"sources":[{"path":"a.jsonl","benchmark":"x","name":"a"},
                                          {"path":"a.jsonl","benchmark":"y","name":"b"}]})");
    CHECK_THROWS_AS(CorpusManifest::from_json(doc), ConfigError);
    json doc2 = json::parse(R"({"sources":[{"path":"a.jsonl","benchmark":"x"}],
                                "composition":[{"source":"zzz","count":1}]})");
    CHECK_THROWS_AS(CorpusManifest::from_json(doc2), ConfigError);
  }

  TEST_CASE("sample_indices is a seeded partial permutation") {
    auto a = sample_indices(100, 10, 42);
    CHECK(a.size() == 10);
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == 10);
    for (auto i : a) CHECK(i < 100);
    CHECK(sample_indices(100, 10, 42) == a);
    CHECK(sample_indices(5, 5, 1).size() == 5);
  }
}
