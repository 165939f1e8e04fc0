#include <doctest.h>

#include <cctype>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "postreason/distill.hpp"
#include "postreason/error.hpp"
#include "postreason/text.hpp"

using namespace postreason;

namespace {

bool has_reason(const Verdict& v, RejectReason r) {
  return std::find(v.reasons.begin(), v.reasons.end(), r) != v.reasons.end();
}

// Oracle: gold occurs inside one of the first `window` whitespace tokens with
// no letter, digit or underscore touching it.
bool oracle_leak(const std::string& text, const std::string& gold, std::size_t window) {
  std::istringstream in(text);
  std::string tok;
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  for (std::size_t i = 0; i < window && in >> tok; ++i) {
    for (auto p = tok.find(gold); p != std::string::npos; p = tok.find(gold, p + 1)) {
      const bool left = p == 0 || !word(tok[p - 1]);
      const bool right = p + gold.size() == tok.size() || !word(tok[p + gold.size()]);
      if (left && right) return true;
    }
  }
  return false;
}

std::string user_text(const PromptBundle& b) { return b.messages.back().content; }

DistillContext context(const ModelRegistryEntry& base, const ModelRegistryEntry* expert = nullptr) {
  DistillContext ctx;
  ctx.base = &base;
  ctx.expert = expert;
  return ctx;
}

const std::string kValid =
    "Begin with the given quantities and combine them step by step, checking each partial "
    "result against the constraints of the problem until the final value emerges clearly.";

}  // namespace

TEST_SUITE("distill") {
  TEST_CASE("filter examples") {
    CHECK(text::split_whitespace(kValid).size() >= 20);
    const auto nineteen = fixtures::words(19);
    auto v = validate_trace(nineteen, "42");
    CHECK(v.reasons == std::vector{RejectReason::TooShort});
    CHECK(validate_trace(fixtures::words(20), "42").accepted());

    const auto leak = "The answer is 42 because " + fixtures::words(35);
    CHECK(validate_trace(leak, "42").reasons == std::vector{RejectReason::AnswerLeak});

    auto late = fixtures::words(29) + " 42 " + fixtures::words(10, "tail");
    CHECK(validate_trace(late, "42").accepted());

    CHECK(validate_trace("   \n", "42").reasons == std::vector{RejectReason::Empty});
    CHECK(validate_trace("", "").reasons == std::vector{RejectReason::Empty});

    auto both = validate_trace("42 is it", "42");
    CHECK(has_reason(both, RejectReason::TooShort));
    CHECK(has_reason(both, RejectReason::AnswerLeak));

    CHECK(validate_trace("x420 " + fixtures::words(25), "42").accepted());
    CHECK_FALSE(validate_trace("(42). " + fixtures::words(25), "42").accepted());
  }

  TEST_CASE("filter agrees with the token oracle on random traces") {
    std::mt19937 rng(23);
    const std::vector<std::string> vocab = {"step", "42",  "x42", "42.", "(42)", "420",
                                            "4",    "2",   "a",   "42x", "-42",  "so"};
    for (int trial = 0; trial < 2000; ++trial) {
      std::string t;
      const int n = static_cast<int>(rng() % 40);
      for (int i = 0; i < n; ++i) {
        if (i) t += (rng() % 4 == 0) ? "\n" : " ";
        t += vocab[rng() % vocab.size()];
      }
      const auto v = validate_trace(t, "42");
      CAPTURE(t);
      if (text::trim(t).empty()) {
        CHECK(v.reasons == std::vector{RejectReason::Empty});
        continue;
      }
      CHECK(has_reason(v, RejectReason::TooShort) == (text::split_whitespace(t).size() < 20));
      CHECK(has_reason(v, RejectReason::AnswerLeak) == oracle_leak(t, "42", 15));
      CHECK(v.accepted() == v.reasons.empty());
    }
  }

  TEST_CASE("modes") {
    CHECK(parse_distill_mode("self") == DistillModeKind::SelfDistill);
    CHECK(parse_distill_mode("expert") == DistillModeKind::Expert);
    CHECK_THROWS_AS((DistillMode{DistillModeKind::Expert, std::nullopt}.validate()), ConfigError);
    DistillMode{DistillModeKind::SelfDistill, std::nullopt}.validate();
  }

  TEST_CASE("prompts fill the question and answer") {
    const auto p = DistillPrompts::builtin();
    auto inst = fixtures::instance("q1", "What is 2+3?", "5");
    auto b = distill_bundle(inst, DistillModeKind::SelfDistill, 2, p);
    CHECK(b.tag == "distill:self_distill:2");
    CHECK(user_text(b).find("What is 2+3?") != std::string::npos);
    CHECK(user_text(b).find("answer is 5") != std::string::npos);
    CHECK(user_text(b).find('{') == std::string::npos);
    auto r = distill_bundle(inst, DistillModeKind::Rephrased, 1, p, std::string("REF"));
    CHECK(user_text(r).find("REF") != std::string::npos);
    CHECK(DistillPrompts::load(fixtures::data_path("distill_prompts.json")) == p);
  }

  TEST_CASE("generate_trace sequences") {
    auto base = fixtures::entry("base", "http://localhost:1/v1");
    auto inst = fixtures::instance("q1", "What is 2+3?", "5");
    const DistillMode self{DistillModeKind::SelfDistill, std::nullopt};

    SUBCASE("valid on the first attempt") {
      fixtures::FakeBackend fake([](auto&, auto&) { return fixtures::ok_text(kValid); });
      auto out = generate_trace(inst, self, fake, context(base));
      REQUIRE(out.trace);
      CHECK(out.trace->attempt == 1);
      CHECK(out.trace->generator_model == "base");
      CHECK(fake.calls() == 1);
    }
    SUBCASE("too short, then valid") {
      fixtures::FakeBackend fake([](auto&, const PromptBundle& b) {
        return fixtures::ok_text(b.tag.ends_with(":1") ? "Too brief." : kValid);
      });
      auto out = generate_trace(inst, self, fake, context(base));
      REQUIRE(out.trace);
      CHECK(out.trace->attempt == 2);
      REQUIRE(out.attempts.size() == 2);
      CHECK(out.attempts[0].reasons == std::vector{RejectReason::TooShort});
    }
    SUBCASE("always leaking is dropped after three attempts") {
      fixtures::FakeBackend fake(
          [](auto&, auto&) { return fixtures::ok_text("It is 5 since " + fixtures::words(30)); });
      auto out = generate_trace(inst, self, fake, context(base));
      CHECK_FALSE(out.trace);
      CHECK(out.attempts.size() == 3);
      CHECK(fake.calls() == 3);
    }
    SUBCASE("backend failures count as generation errors") {
      fixtures::FakeBackend fake([](auto&, auto&) -> RawCompletion {
        throw TransportError("down", 503);
      });
      auto out = generate_trace(inst, self, fake, context(base));
      CHECK_FALSE(out.trace);
      for (const auto& v : out.attempts) {
        CHECK(v.reasons == std::vector{RejectReason::GenerationError});
      }
    }
    SUBCASE("thinking blocks are not part of the trace") {
      fixtures::FakeBackend fake(
          [](auto&, auto&) { return fixtures::ok_text("<think>5 5 5</think>\n" + kValid); });
      auto out = generate_trace(inst, self, fake, context(base));
      REQUIRE(out.trace);
      CHECK(out.trace->text == kValid);
    }
  }

  TEST_CASE("expert and rephrased modes route to the right models") {
    auto base = fixtures::entry("base", "http://localhost:1/v1");
    auto expert = fixtures::entry("expert", "http://localhost:2/v1");
    auto inst = fixtures::instance("q1", "What is 2+3?", "5");
    fixtures::FakeBackend fake([](const ModelRegistryEntry& e, const PromptBundle& b) {
      if (e.model_id == "expert") return fixtures::ok_text("EXPERT " + kValid);
      REQUIRE(user_text(b).find("EXPERT") != std::string::npos);
      return fixtures::ok_text("REWORDED " + kValid);
    });

    auto ex = generate_trace(inst, {DistillModeKind::Expert, "expert"}, fake, context(base, &expert));
    REQUIRE(ex.trace);
    CHECK(ex.trace->generator_model == "expert");
    CHECK(ex.trace->text.starts_with("EXPERT"));

    auto re = generate_trace(inst, {DistillModeKind::Rephrased, "expert"}, fake,
                             context(base, &expert));
    REQUIRE(re.trace);
    CHECK(re.trace->generator_model == "base");
    CHECK(re.trace->text.starts_with("REWORDED"));
    CHECK(fake.models_called() == std::vector<std::string>{"expert", "expert", "base"});

    CHECK_THROWS_AS(generate_trace(inst, {DistillModeKind::Expert, "other"}, fake,
                                   context(base, &expert)),
                    ConfigError);
  }

  TEST_CASE("corpus run: two perpetual failures out of ten") {
    auto base = fixtures::entry("base", "http://localhost:1/v1");
    auto expert = fixtures::entry("expert", "http://localhost:2/v1");
    std::vector<TaskInstance> items;
    for (int i = 0; i < 10; ++i) {
      items.push_back(fixtures::instance("p" + std::to_string(i), "Problem " + std::to_string(i),
                                         std::to_string(100 + i)));
    }
    fixtures::FakeBackend fake([](auto&, const PromptBundle& b) {
      if (b.instance_id == "p3" || b.instance_id == "p7") return fixtures::ok_text("short");
      return fixtures::ok_text(kValid);
    });
    fixtures::TempDir dir("dist");
    const DistillMode self{DistillModeKind::SelfDistill, std::nullopt};
    auto stats = run_distillation(items, self, fake, context(base, &expert),
                                  dir.file("t.jsonl"), 4);
    CHECK(stats.input == 10);
    CHECK(stats.accepted == 8);
    CHECK(stats.dropped == 2);
    CHECK(stats.accepted + stats.dropped == stats.input);
    CHECK(stats.dropped_ids == std::vector<std::string>{"p3", "p7"});
    CHECK(stats.reasons[RejectReason::TooShort] == 6);
    for (const auto& m : fake.models_called()) CHECK(m == "base");

    const auto rows = read_jsonl(dir.file("t.jsonl"));
    REQUIRE(rows.size() == 8);
    std::vector<std::string> ids;
    for (const auto& r : rows) {
      ids.push_back(r["instance_id"].get<std::string>());
      CHECK(validate_trace(r["trace"].get<std::string>(), r["gold"].get<std::string>()).accepted());
      CHECK(r["mode"] == "self_distill");
    }
    CHECK(ids == std::vector<std::string>{"p0", "p1", "p2", "p4", "p5", "p6", "p8", "p9"});
    CHECK(to_json(stats)["rejections"]["too_short"] == 6);
  }

  TEST_CASE("empty input writes an empty file") {
    auto base = fixtures::entry("base", "http://localhost:1/v1");
    fixtures::FakeBackend fake([](auto&, auto&) { return fixtures::ok_text(kValid); });
    fixtures::TempDir dir("dist0");
    auto stats = run_distillation({}, {DistillModeKind::SelfDistill, std::nullopt}, fake,
                                  context(base), dir.file("t.jsonl"));
    CHECK(stats.input == 0);
    CHECK(fixtures::file_bytes(dir.file("t.jsonl")).empty());
  }

  TEST_CASE("record then replay gives byte-identical output") {
    auto base = fixtures::entry("base", "http://localhost:1/v1");
    auto expert = fixtures::entry("expert", "http://localhost:2/v1");
    std::vector<TaskInstance> items;
    for (int i = 0; i < 6; ++i) {
      items.push_back(fixtures::instance("r" + std::to_string(i), "Q" + std::to_string(i), "7"));
    }
    std::atomic<int> n{0};
    fixtures::FakeBackend fake([&](auto&, const PromptBundle&) {
      // Every third call is too short, so some instances need a second attempt.
      return fixtures::ok_text(++n % 3 == 0 ? "no" : kValid + " v" + std::to_string(n.load()));
    });
    fixtures::TempDir dir("distrep");
    const DistillMode mode{DistillModeKind::Rephrased, "expert"};
    {
      RecordingBackend rec(fake, dir.file("rec.jsonl"));
      run_distillation(items, mode, rec, context(base, &expert), dir.file("live.jsonl"), 1);
    }
    ReplayBackend replay(dir.file("rec.jsonl"));
    auto s1 = run_distillation(items, mode, replay, context(base, &expert), dir.file("a.jsonl"), 3);
    auto s2 = run_distillation(items, mode, replay, context(base, &expert), dir.file("b.jsonl"), 2);
    CHECK(fixtures::file_bytes(dir.file("a.jsonl")) == fixtures::file_bytes(dir.file("b.jsonl")));
    CHECK(fixtures::file_bytes(dir.file("a.jsonl")) == fixtures::file_bytes(dir.file("live.jsonl")));
    CHECK(s1.accepted == s2.accepted);
    CHECK(s1.accepted + s1.dropped == 6);
  }
}
