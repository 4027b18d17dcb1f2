// tests/test_llm_gateway.cpp

// Copyright 2026  The sfd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <fstream>
#include <thread>

#include "sfd/error.hpp"
#include "sfd/llm_gateway.hpp"
#include "sfd/util.hpp"
#include "test_helpers.hpp"

using namespace sfd;
using sfd::testing::ScriptedBackend;
using sfd::testing::TempDir;
using sfd::testing::no_sleep_policy;

namespace {

CompletionRequest base_request() {
  CompletionRequest r;
  r.backend_id = "b";
  r.model_id = "m";
  r.prompt = "hello";
  r.temperature = 0.7;
  r.sample_index = 1;
  return r;
}

const char* kGoodTeacher =
    "{\"predicted_labels\": [\"G06F\"], \"reasoning\": \"Processor and memory.\"}";

}  // namespace

TEST_SUITE("llm-gateway") {
  TEST_CASE("templates carry exactly their placeholders") {
    CHECK(count_placeholders(kTeacherPromptTemplate) == 1);
    CHECK(count_placeholders(kDefinitionPromptTemplate) == 1);
    CHECK(count_placeholders(kJudgePromptTemplate) == 3);
    CHECK(kDefinitionPromptTemplate.substr(kDefinitionPromptTemplate.size() - 12) == "Definition: ");
    CHECK(kJudgePromptTemplate.substr(kJudgePromptTemplate.size() - 6) == "Score:");
    CHECK(kTeacherPromptTemplate.find("\"predicted_labels\"") != std::string_view::npos);
  }

  TEST_CASE("rendering fills every placeholder once") {
    Document doc{"d", "A wrench with {labels} jaws", {"B25B"}};
    const auto p = render_teacher_prompt(doc);
    CHECK(p.find("A wrench with {labels} jaws") != std::string::npos);
    CHECK(p.find("{patent_text}") == std::string::npos);

    const auto j = render_judge_prompt("text {reasoning}", {"B25B", "F16H"}, "because");
    CHECK(j.find("Predicted Labels: [B25B, F16H]") != std::string::npos);
    CHECK(j.find("text {reasoning}") != std::string::npos);  // no second pass
    CHECK(j.find("because") != std::string::npos);

    const auto d = render_definition_prompt("H04W");
    CHECK(d.find("CPC Code: H04W\nDefinition: ") != std::string::npos);
    CHECK(count_placeholders(d) == 0);
  }

  TEST_CASE("cache key covers every field") {
    const auto r = base_request();
    const auto k = CacheKey::of(r);
    CHECK(k.digest.size() == 64);
    CHECK(CacheKey::of(r) == k);
    auto v = r;
    v.prompt = "hello!";
    CHECK_FALSE(CacheKey::of(v) == k);
    v = r;
    v.sample_index = 2;
    CHECK_FALSE(CacheKey::of(v) == k);
    v = r;
    v.temperature = 0.70000001;
    CHECK_FALSE(CacheKey::of(v) == k);
    v = r;
    v.model_id = "m2";
    CHECK_FALSE(CacheKey::of(v) == k);
    v = r;
    v.max_tokens = 16;
    CHECK_FALSE(CacheKey::of(v) == k);
    v = r;
    v.retry = 1;
    CHECK_FALSE(CacheKey::of(v) == k);

    auto z = r;
    z.temperature = 0.0;
    auto nz = r;
    nz.temperature = -0.0;
    CHECK(CacheKey::of(z) == CacheKey::of(nz));
  }

  TEST_CASE("cached_complete calls the backend once per key") {
    TempDir dir;
    auto backend = std::make_shared<ScriptedBackend>(
        [](const CompletionRequest& r) { return "answer to " + r.prompt; });
    LlmGateway gw(no_sleep_policy());
    gw.register_backend("b", backend);
    const auto r = base_request();
    CHECK(gw.cached_complete(r, dir.path()) == "answer to hello");
    CHECK(gw.cached_complete(r, dir.path()) == "answer to hello");
    CHECK(backend->calls == 1);
    CHECK(gw.cache_hits() == 1);

    // A fresh gateway reads the same entry from disk.
    LlmGateway gw2(no_sleep_policy());
    gw2.register_backend("b", backend);
    CHECK(gw2.cached_complete(r, dir.path()) == "answer to hello");
    CHECK(backend->calls == 1);
  }

  TEST_CASE("corrupt cache entries are treated as misses") {
    TempDir dir;
    auto backend = std::make_shared<ScriptedBackend>([](const CompletionRequest&) { return "fresh"; });
    LlmGateway gw(no_sleep_policy());
    gw.register_backend("b", backend);
    const auto r = base_request();
    gw.cached_complete(r, dir.path());
    const auto file = dir.path() / (CacheKey::of(r).digest + ".txt");
    REQUIRE(std::filesystem::exists(file));
    std::ofstream(file) << "garbage without a header";
    CHECK(gw.cached_complete(r, dir.path()) == "fresh");
    CHECK(backend->calls == 2);
    CHECK(read_cache_entry(file, CacheKey::of(r)) == std::optional<std::string>("fresh"));
  }

  TEST_CASE("cache entries round trip arbitrary text") {
    TempDir dir;
    const auto r = base_request();
    const std::string text = "line one\nline two\n{\"x\": 1}\n\n";
    write_cache_entry(dir / "e.txt", CacheKey::of(r), r, text);
    CHECK(read_cache_entry(dir / "e.txt", CacheKey::of(r)) == std::optional<std::string>(text));
    auto other = r;
    other.prompt = "different";
    CHECK_FALSE(read_cache_entry(dir / "e.txt", CacheKey::of(other)).has_value());
  }

  TEST_CASE("concurrent identical requests share one backend call") {
    TempDir dir;
    auto backend = std::make_shared<ScriptedBackend>([](const CompletionRequest&) {
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
      return "slow";
    });
    LlmGateway gw(no_sleep_policy(), dir.path());
    gw.register_backend("b", backend);
    parallel_for(8, 8, [&](std::size_t) { CHECK(gw.request(base_request()) == "slow"); });
    CHECK(backend->calls == 1);
  }

  TEST_CASE("transient failures are retried with exponential backoff") {
    int failures = 2;
    auto backend = std::make_shared<ScriptedBackend>([&](const CompletionRequest&) -> std::string {
      if (failures-- > 0) throw TransientError("503");
      return "ok";
    });
    std::vector<long> delays;
    RetryPolicy policy;
    policy.sleep = [&](std::chrono::milliseconds d) { delays.push_back(d.count()); };
    LlmGateway gw(policy);
    gw.register_backend("b", backend);
    CHECK(gw.complete(base_request()) == "ok");
    CHECK(backend->calls == 3);
    CHECK(delays == std::vector<long>{500, 1000});
  }

  TEST_CASE("retries are bounded and permanent errors propagate") {
    auto always = std::make_shared<ScriptedBackend>(
        [](const CompletionRequest&) -> std::string { throw TransientError("timeout"); });
    LlmGateway gw(no_sleep_policy(4));
    gw.register_backend("b", always);
    try {
      gw.complete(base_request());
      FAIL("expected TransportError");
    } catch (const TransportError& e) {
      CHECK(e.attempts() == 4);
    }
    CHECK(always->calls == 4);

    auto bad = std::make_shared<ScriptedBackend>(
        [](const CompletionRequest&) -> std::string { throw Error("400 bad request"); });
    LlmGateway gw2(no_sleep_policy());
    gw2.register_backend("b", bad);
    CHECK_THROWS_AS(gw2.complete(base_request()), Error);
    CHECK(bad->calls == 1);

    auto r = base_request();
    r.backend_id = "missing";
    CHECK_THROWS_AS(gw2.complete(r), ConfigError);
  }

  TEST_CASE("mock backend is deterministic per request") {
    MockChatBackend m;
    const auto r = base_request();
    CHECK(m.complete(r) == m.complete(r));
    auto v = r;
    v.sample_index = 0;
    CHECK(m.complete(r) != m.complete(v));
  }

  TEST_CASE("teacher output parsing") {
    auto out = parse_teacher_output(kGoodTeacher);
    CHECK(out.predicted_labels == std::vector<std::string>{"G06F"});
    CHECK(out.reasoning == "Processor and memory.");

    // Surrounding prose and fences are tolerated.
    out = parse_teacher_output(std::string("Here you go:\n```json\n") + kGoodTeacher + "\n```");
    CHECK(out.predicted_labels == std::vector<std::string>{"G06F"});

    // Braces inside strings do not confuse object extraction.
    out = parse_teacher_output(
        "{\"predicted_labels\": [\"H04L\", \"H04L\"], \"reasoning\": \"uses {curly} } braces\"}");
    CHECK(out.predicted_labels == std::vector<std::string>{"H04L"});
    CHECK(out.reasoning == "uses {curly} } braces");

    CHECK_THROWS_AS(parse_teacher_output("no json here"), ParseError);
    CHECK_THROWS_AS(parse_teacher_output("{\"predicted_labels\": [], \"reasoning\": \"x\"}"), ParseError);
    CHECK_THROWS_AS(parse_teacher_output("{\"predicted_labels\": [\"G06F\"], \"reasoning\": \"\"}"), ParseError);
    CHECK_THROWS_AS(parse_teacher_output("{\"predicted_labels\": [\"bad\"], \"reasoning\": \"x\"}"), ParseError);
    CHECK_THROWS_AS(parse_teacher_output("{\"predicted_labels\": [\"G06F\"], \"reasoning\": \"x\", \"extra\": 1}"),
                    ParseError);
    CHECK_THROWS_AS(parse_teacher_output("{\"predicted_labels\": \"G06F\", \"reasoning\": \"x\"}"), ParseError);

    const TeacherOutput t{{"A61B", "A61K"}, "Catheter delivering a drug."};
    CHECK(parse_teacher_output(serialize_teacher_output(t)) == t);
  }

  TEST_CASE("judge score parsing") {
    CHECK(parse_judge_score("4").raw_score == 4);
    CHECK(parse_judge_score(" 5\n").raw_score == 5);
    CHECK(parse_judge_score("Score: 3").raw_score == 3);
    CHECK(parse_judge_score("On a 1-5 scale the reasoning is fine.\nSCORE: 2").raw_score == 2);
    CHECK(parse_judge_score("2\nThe labels are judged against the text.").raw_score == 2);
    CHECK(parse_judge_score("I rate it 4 out of 5").raw_score == 4);
    CHECK_THROWS_AS(parse_judge_score("excellent"), ParseError);
    CHECK_THROWS_AS(parse_judge_score("Score: 7"), ParseError);
    CHECK_THROWS_AS(parse_judge_score("3.5"), ParseError);
  }

  TEST_CASE("generate_rationales retries malformed samples and marks degenerates") {
    auto backend = std::make_shared<ScriptedBackend>([](const CompletionRequest& r) -> std::string {
      if (r.sample_index == 0 && r.retry < 2) return "not json";
      if (r.sample_index == 2) return "never json";
      return kGoodTeacher;
    });
    LlmGateway gw(no_sleep_policy());
    gw.register_backend("mock", backend);
    ModelEndpoint teacher{"mock", "t", 0.7, 512};
    Document doc{"d", "processor memory", {"G06F"}};
    const auto rset = generate_rationales(doc, 3, teacher, gw);
    REQUIRE(rset.k() == 3);
    CHECK_FALSE(rset.samples[0].degenerate);
    CHECK_FALSE(rset.samples[1].degenerate);
    CHECK(rset.samples[2].degenerate);
    CHECK(rset.canonical_index == 0);
    CHECK(backend->calls == 3 + 1 + 3);
    CHECK_THROWS_AS(generate_rationales(doc, 1, teacher, gw), ValidationError);
  }

  TEST_CASE("judge falls back to the minimum score") {
    auto backend = std::make_shared<ScriptedBackend>([](const CompletionRequest&) { return "no idea"; });
    LlmGateway gw(no_sleep_policy());
    gw.register_backend("mock", backend);
    const auto r = judge_rationale("t", {"G06F"}, "why", {"mock", "j", 0.0, 16}, gw);
    CHECK(r.raw_score == 1);
    CHECK_FALSE(r.parsed);
    CHECK(backend->calls == 1 + kParseRetries);
  }

  TEST_CASE("definition resolver fills and persists missing codes") {
    TempDir dir;
    auto backend = std::make_shared<ScriptedBackend>([](const CompletionRequest& r) -> std::string {
      if (r.prompt.find("CPC Code: X99Z") != std::string::npos) return "   \n";
      return "\nWireless communication networks.\nExtra line.";
    });
    LlmGateway gw(no_sleep_policy());
    gw.register_backend("mock", backend);
    LabelCatalog catalog;
    catalog.add({"G06F", "Data processing.", DefinitionSource::kFileProvided});
    DefinitionResolver resolver(catalog, {"mock", "t", 0.0, 512}, gw, dir / "gen.jsonl");

    CHECK(resolver.fetch("G06F").definition == "Data processing.");
    CHECK(backend->calls == 0);
    const auto def = resolver.fetch("H04W");
    CHECK(def.definition == "Wireless communication networks.");
    CHECK(def.source == DefinitionSource::kLlmGenerated);
    resolver.fetch("H04W");
    CHECK(backend->calls == 1);
    const auto persisted = load_label_definitions(dir / "gen.jsonl");
    CHECK(persisted.size() == 1);
    CHECK(persisted.contains("H04W"));
    try {
      resolver.fetch("X99Z");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("X99Z") != std::string::npos);
    }
  }
}
