#include <doctest.h>

#include "fixtures.hpp"
#include "postreason/error.hpp"
#include "postreason/prompts.hpp"

using namespace postreason;

namespace {

TaskInstance gsm_item() {
  return fixtures::instance("g-1", "Janet has 3 apples and buys 4 more. How many now?", "7",
                            AnswerKind::Numeric);
}

TaskInstance letter_item(const std::string& id, const std::string& gold) {
  auto inst = fixtures::instance(id, "Pick one.", gold, AnswerKind::Letter);
  inst.choices = {{"A", "alpha"}, {"B", "beta"}, {"C", "gamma"}, {"D", "delta"}};
  return inst;
}

}  // namespace

TEST_SUITE("prompts") {
  TEST_CASE("GSM8K direct and post-reasoning strings") {
    const auto lib = TemplateLibrary::builtin();
    const auto& t = lib.for_benchmark("gsm8k");
    const auto direct = render(gsm_item(), StrategyKind::Direct, t, {});
    CHECK(direct.system ==
          "You are a direct math expert. Output ONLY the final numeric answer. Do not provide "
          "any reasoning or explanation.");
    REQUIRE(direct.messages.size() == 1);
    CHECK(direct.messages[0].role == Role::User);
    CHECK(direct.messages[0].content ==
          "Janet has 3 apples and buys 4 more. How many now?\nAnswer immediately without any "
          "explanation or reasoning. Output format: 'Answer: [Answer].'");

    const auto post = render(gsm_item(), StrategyKind::PostReason, t, {});
    CHECK(post.system ==
          "You are a post-reasoning math expert. State the final numeric answer first, then "
          "explain your reasoning.");
    CHECK(post.messages[0].content ==
          "Janet has 3 apples and buys 4 more. How many now?\nState the final answer "
          "immediately as 'Answer: [Answer].' THEN, explain your reasoning in 'Explanation: '.");
  }

  TEST_CASE("benchmark ids resolve through template families") {
    const auto lib = TemplateLibrary::builtin();
    CHECK(lib.for_benchmark("amc8").benchmark == "amc");
    CHECK(lib.for_benchmark("amc12").benchmark == "amc");
    CHECK(lib.for_benchmark("hmmt_feb").benchmark == "hmmt");
    CHECK_THROWS_AS(lib.for_benchmark("aime"), ConfigError);
  }

  TEST_CASE("ablation strategies exist only where tabulated") {
    const auto lib = TemplateLibrary::builtin();
    for (const char* b : {"gsm8k", "gpqa", "mmlu_pro"}) {
      CHECK(lib.for_benchmark(b).covers(StrategyKind::PostSummary));
      CHECK(lib.for_benchmark(b).covers(StrategyKind::PostConfidence));
    }
    for (const char* b : {"amc8", "hmmt_nov", "bbh"}) {
      CHECK_FALSE(lib.for_benchmark(b).covers(StrategyKind::PostSummary));
      CHECK_THROWS_AS(render(gsm_item(), StrategyKind::PostConfidence, lib.for_benchmark(b), {}),
                      ConfigError);
    }
  }

  TEST_CASE("direct and post-reasoning differ only in system text and suffix") {
    const auto lib = TemplateLibrary::builtin();
    const auto pool = std::vector{letter_item("s1", "A"), letter_item("s2", "C"),
                                  letter_item("s3", "D")};
    const auto target = letter_item("q", "B");
    for (const char* b : {"gsm8k", "amc10", "hmmt_feb", "gpqa", "mmlu_pro", "bbh"}) {
      const auto& t = lib.for_benchmark(b);
      ExemplarStore store;
      for (std::size_t k : {0u, 1u, 3u}) {
        auto shots_d = select_shots(pool, target, StrategyKind::Direct, store, k,
                                    ShotSelection::FirstById, 0);
        auto shots_p = select_shots(pool, target, StrategyKind::PostReason, store, k,
                                    ShotSelection::FirstById, 0);
        auto d = render(target, StrategyKind::Direct, t, shots_d);
        auto p = render(target, StrategyKind::PostReason, t, shots_p);
        REQUIRE(d.messages.size() == 2 * k + 1);
        REQUIRE(p.messages.size() == d.messages.size());
        const auto& sd = t.suffix_for(StrategyKind::Direct);
        const auto& sp = t.suffix_for(StrategyKind::PostReason);
        for (std::size_t i = 0; i < d.messages.size(); i += 2) {
          CHECK(d.messages[i].role == Role::User);
          const auto& a = d.messages[i].content;
          const auto& c = p.messages[i].content;
          REQUIRE(a.ends_with(sd));
          REQUIRE(c.ends_with(sp));
          CHECK(a.substr(0, a.size() - sd.size()) == c.substr(0, c.size() - sp.size()));
        }
      }
    }
  }

  TEST_CASE("thinking strategies reuse the textual templates") {
    const auto lib = TemplateLibrary::builtin();
    const auto& t = lib.for_benchmark("gpqa");
    const auto target = letter_item("q", "B");
    auto a = render(target, StrategyKind::PostReason, t, {});
    auto b = render(target, StrategyKind::ThinkingPost, t, {});
    CHECK(a.system == b.system);
    CHECK(a.messages == b.messages);
    CHECK_FALSE(a.native_thinking());
    CHECK(b.native_thinking());
  }

  TEST_CASE("letter questions list their choices") {
    CHECK(format_question(letter_item("x", "A")) ==
          "Pick one.\nA. alpha\nB. beta\nC. gamma\nD. delta");
  }

  TEST_CASE("exemplar output formats") {
    auto inst = letter_item("x", "C");
    ExemplarNotes notes;
    notes.justification = "gamma fits.";
    notes.summary = "Asked to pick; picked gamma.";
    notes.confidence_pct = 85;
    notes.confidence_reason = "clear.";
    CHECK(exemplar_output(inst, StrategyKind::Direct, notes) == "Answer: C.");
    CHECK(exemplar_output(inst, StrategyKind::PostReason, notes) ==
          "Answer: C. Explanation: gamma fits.");
    CHECK(exemplar_output(inst, StrategyKind::ThinkingPost, notes) ==
          "Answer: C. Explanation: gamma fits.");
    CHECK(exemplar_output(inst, StrategyKind::PostSummary, notes) ==
          "Answer: C. Summary: Asked to pick; picked gamma.");
    CHECK(exemplar_output(inst, StrategyKind::PostConfidence, notes) ==
          "Answer: C. Confidence: 85%. Explanation: clear.");
  }

  TEST_CASE("missing notes are errors unless placeholders are allowed") {
    auto inst = letter_item("x", "C");
    CHECK_THROWS_AS(exemplar_output(inst, StrategyKind::PostReason), ConfigError);
    CHECK(exemplar_output(inst, StrategyKind::PostReason, {}, PlaceholderPolicy::Allow)
              .starts_with("Answer: C. Explanation: "));
    auto free = fixtures::instance("f", "q", "True", AnswerKind::Freeform);
    CHECK_THROWS_AS(
        exemplar_output(free, StrategyKind::PostReason, {}, PlaceholderPolicy::Allow),
        ConfigError);
    CHECK(exemplar_output(free, StrategyKind::Direct) == "Answer: True.");
  }

  TEST_CASE("the instance itself is never a shot") {
    const auto lib = TemplateLibrary::builtin();
    const auto target = letter_item("q", "B");
    std::vector<Shot> shots = {{target, "Answer: B."}};
    CHECK_THROWS_AS(render(target, StrategyKind::Direct, lib.for_benchmark("gpqa"), shots),
                    ValidationError);

    const auto pool = std::vector{letter_item("a", "A"), target, letter_item("c", "C")};
    ExemplarStore store;
    for (auto sel : {ShotSelection::FirstById, ShotSelection::SeededSample}) {
      auto picked = select_shots(pool, target, StrategyKind::Direct, store, 5, sel, 3);
      CHECK(picked.size() == 2);
      for (const auto& s : picked) CHECK(s.instance.id != "q");
    }
  }

  TEST_CASE("stored exemplar text wins and thinking falls back to the base") {
    ExemplarStore store;
    store.put("a", StrategyKind::PostReason, "Answer: A. Explanation: stored.");
    CHECK(store.find("a", StrategyKind::ThinkingPost) == "Answer: A. Explanation: stored.");
    CHECK_FALSE(store.find("a", StrategyKind::Direct));
    const auto pool = std::vector{letter_item("a", "A")};
    auto shots = select_shots(pool, letter_item("q", "B"), StrategyKind::PostReason, store, 1,
                              ShotSelection::FirstById, 0);
    REQUIRE(shots.size() == 1);
    CHECK(shots[0].assistant_text == "Answer: A. Explanation: stored.");
  }

  TEST_CASE("seeded selection is deterministic") {
    std::vector<TaskInstance> pool;
    for (int i = 0; i < 20; ++i) pool.push_back(letter_item("p" + std::to_string(i), "A"));
    ExemplarStore store;
    auto ids = [&](std::uint64_t seed) {
      std::vector<std::string> out;
      for (auto& s : select_shots(pool, letter_item("q", "B"), StrategyKind::Direct, store, 4,
                                  ShotSelection::SeededSample, seed)) {
        out.push_back(s.instance.id);
      }
      return out;
    };
    CHECK(ids(11) == ids(11));
    CHECK(ids(11).size() == 4);
  }

  TEST_CASE("shipped template file matches the built-in library") {
    const auto shipped = TemplateLibrary::load(fixtures::data_path("templates.json"));
    CHECK(shipped == TemplateLibrary::builtin());
    CHECK(TemplateLibrary::from_json(json::parse(shipped.to_json().dump())) == shipped);
  }

  TEST_CASE("shipped exemplars cover every few-shot item for direct and post-reasoning") {
    const auto store = ExemplarStore::load(fixtures::data_path("fewshot/exemplars.jsonl"));
    CHECK(store.size() == 72);
    for (const char* id : {"gsm8k-fs-1", "amc8-fs-2", "hmmtn-fs-3", "gpqa-fs-1", "bbh-fs-2"}) {
      CHECK(store.find(id, StrategyKind::Direct));
      CHECK(store.find(id, StrategyKind::PostReason));
    }
    CHECK(store.find("mmlu-fs-1", StrategyKind::PostConfidence));
  }
}
