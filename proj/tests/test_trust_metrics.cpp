// tests/test_trust_metrics.cpp

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

#include <cmath>
#include <random>

#include "sfd/error.hpp"
#include "sfd/trust_metrics.hpp"
#include "test_helpers.hpp"

using namespace sfd;
using sfd::testing::CountingEmbedder;
using sfd::testing::ScriptedBackend;
using sfd::testing::TempDir;
using sfd::testing::naive_cosine;
using sfd::testing::no_sleep_policy;

namespace {

std::vector<EmbeddingVector> vecs(std::initializer_list<std::vector<double>> xs) {
  std::vector<EmbeddingVector> out;
  for (const auto& x : xs) out.emplace_back(x);
  return out;
}

// Independent oracle: direct pairwise mean without any shared helpers.
double oracle_sc(const std::vector<std::vector<double>>& xs) {
  double sum = 0.0;
  int pairs = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      sum += naive_cosine(xs[i], xs[j]);
      ++pairs;
    }
  return sum / pairs;
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_SUITE("trust-metrics") {
  TEST_CASE("self-consistency fixtures") {
    CHECK(self_consistency(vecs({{1, 0}, {1, 0}, {0, 1}}), true) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(self_consistency(vecs({{1, 2}, {1, 2}, {1, 2}}), true) == doctest::Approx(1.0));
    CHECK(self_consistency(vecs({{1, 0}, {1, 1}}), true) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(self_consistency(vecs({{1, 0}, {-1, 0}}), false) == doctest::Approx(-1.0));
    CHECK(self_consistency(vecs({{1, 0}, {-1, 0}}), true) == 0.0);
    CHECK_THROWS_AS(self_consistency(vecs({{1, 0}}), true), ValidationError);
  }

  TEST_CASE("self-consistency matches the pairwise oracle") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t) {
      const std::size_t k = 2 + rng() % 5, dim = 2 + rng() % 10;
      std::vector<std::vector<double>> xs;
      std::vector<EmbeddingVector> es;
      for (std::size_t i = 0; i < k; ++i) {
        xs.push_back(sfd::testing::random_vector(rng, dim));
        es.emplace_back(xs.back());
      }
      const double raw = self_consistency(es, false);
      CHECK(raw == doctest::Approx(oracle_sc(xs)).epsilon(1e-9));
      CHECK(self_consistency(es, true) == std::max(0.0, raw));
      // Invariant under permutation.
      std::reverse(es.begin(), es.end());
      CHECK(self_consistency(es, false) == doctest::Approx(raw).epsilon(1e-12));
    }
  }

  TEST_CASE("class entailment alignment") {
    const EmbeddingVector r({1.0, 0.0});
    CHECK(class_entailment_alignment(r, vecs({{1, 0}}), true) == doctest::Approx(1.0));
    CHECK(class_entailment_alignment(r, vecs({{1, 0}, {0, 1}}), true) == doctest::Approx(0.5));
    CHECK(class_entailment_alignment(r, vecs({{1, 1}, {1, -1}}), true) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(class_entailment_alignment(r, vecs({{-1, 0}}), true) == 0.0);
    CHECK(class_entailment_alignment(r, vecs({{-1, 0}}), false) == doctest::Approx(-1.0));
    CHECK(class_entailment_alignment(r, vecs({}), true) == 0.0);

    std::map<std::string, EmbeddingVector> defs = {{"G06F", EmbeddingVector({1.0, 0.0})}};
    CHECK(class_entailment_alignment(r, {"G06F"}, defs, true) == doctest::Approx(1.0));
    try {
      class_entailment_alignment(r, {"G06F", "H04L"}, defs, true);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("H04L") != std::string::npos);
    }
  }

  TEST_CASE("judge score mappings") {
    CHECK(llm_agreement(5, LasMapping::kCentered) == doctest::Approx(0.88079708).epsilon(1e-8));
    CHECK(llm_agreement(3, LasMapping::kCentered) == 0.5);
    CHECK(llm_agreement(1, LasMapping::kCentered) == doctest::Approx(logistic(-2.0)).epsilon(1e-12));
    CHECK(llm_agreement(1, LasMapping::kLiteral) == doctest::Approx(0.73105858).epsilon(1e-8));
    CHECK(llm_agreement(5, LasMapping::kLiteral) == doctest::Approx(logistic(5.0)).epsilon(1e-12));
    CHECK(llm_agreement(1, LasMapping::kLinear) == 0.0);
    CHECK(llm_agreement(4, LasMapping::kLinear) == 0.75);
    CHECK(llm_agreement(5, LasMapping::kLinear) == 1.0);
    for (auto m : {LasMapping::kCentered, LasMapping::kLiteral, LasMapping::kLinear})
      for (int s = 1; s < 5; ++s) CHECK(llm_agreement(s, m) < llm_agreement(s + 1, m));
    CHECK_THROWS_AS(llm_agreement(0, LasMapping::kCentered), ValidationError);
    CHECK_THROWS_AS(llm_agreement(6, LasMapping::kLinear), ValidationError);
  }

  TEST_CASE("combined trust") {
    const double lo = llm_agreement(1, LasMapping::kCentered);
    const double hi = llm_agreement(5, LasMapping::kCentered);
    CHECK(combined_trust(0, 0, lo, kEqualWeights) == doctest::Approx(0.03973431).epsilon(1e-8));
    CHECK(combined_trust(1, 1, hi, kEqualWeights) == doctest::Approx(0.96026569).epsilon(1e-8));
    CHECK(combined_trust(0.2, 0.4, 0.9, {1.0, 0.0, 0.0}) == 0.2);
    CHECK(combined_trust(0.2, 0.4, 0.9, {0.5, 0.0, 0.5}) == doctest::Approx(0.55));
    CHECK(combined_trust(1, 1, 1, kEqualWeights) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(combined_trust(0.9, 0.6, 0.3, kEqualWeights) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(combined_trust(0.9, 0.6, 0.3, {1.0, 0.0, 0.0}) == 0.9);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
      const double a = u(rng), b = u(rng), c = u(rng);
      const double v = combined_trust(a, b, c, kEqualWeights);
      CHECK(v >= std::min({a, b, c}) - 1e-15);
      CHECK(v <= std::max({a, b, c}) + 1e-15);
    }
  }

  TEST_CASE("config validation") {
    TrustConfig c;
    CHECK_NOTHROW(c.validate());
    c.k = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = {};
    c.weights = {0.5, 0.5, 0.1};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(parse_las_mapping(to_string(LasMapping::kLinear)) == LasMapping::kLinear);
    CHECK_THROWS_AS(parse_las_mapping("cubic"), Error);
  }

  TEST_CASE("medoid picks the most central sample") {
    std::vector<RationaleSample> samples(3);
    const auto es = vecs({{1, 0}, {1, 1}, {0, 1}});
    CHECK(medoid_index(samples, es) == 1);
    samples[1].degenerate = true;
    CHECK(medoid_index(samples, es) != 1);
  }

  struct ScoringFixture {
    TempDir dir;
    std::shared_ptr<ScriptedBackend> chat = std::make_shared<ScriptedBackend>(
        [](const CompletionRequest& r) -> std::string {
          if (r.prompt.find("Score:") != std::string::npos) return "5";
          if (r.prompt.find("CPC Code:") != std::string::npos) return "Gearing mechanisms.";
          return "{\"predicted_labels\":[\"F16H\"],\"reasoning\":\"gear and pinion sample " +
                 std::to_string(r.sample_index) + "\"}";
        });
    std::shared_ptr<CountingEmbedder> embedder = std::make_shared<CountingEmbedder>(64);
    LlmGateway gateway{no_sleep_policy()};
    EmbeddingService embeddings{no_sleep_policy()};
    LabelCatalog catalog;
    DefinitionResolver resolver{catalog, {"mock", "t", 0.0, 512}, gateway};
    ScoringContext ctx{gateway, embeddings, resolver, "mock", {"mock", "t", 0.7, 512},
                       {"mock", "j", 0.0, 16}};
    ScoringFixture() {
      gateway.register_backend("mock", chat);
      embeddings.register_backend("mock", embedder);
    }
  };

  TEST_CASE("score_document combines the three metrics") {
    ScoringFixture f;
    Document doc{"d1", "A gear train with a pinion.", {"F16H"}};
    const auto rset = generate_rationales(doc, 3, f.ctx.teacher, f.gateway);
    const auto s = score_document(doc, rset, TrustConfig{}, f.ctx);
    CHECK(s.judge_raw == 5);
    CHECK(s.las == doctest::Approx(0.88079708).epsilon(1e-8));
    CHECK(s.sc > 0.5);
    CHECK(s.cts == doctest::Approx((s.sc + s.cea + s.las) / 3.0).epsilon(1e-12));
    CHECK_FALSE(s.degenerate);
    CHECK(f.catalog.contains("F16H"));
  }

  TEST_CASE("all-degenerate rationales get minimum trust without any calls") {
    ScoringFixture f;
    Document doc{"d1", "text", {"F16H"}};
    RationaleSet rset{"d1", {{{}, {}, true}, {{}, {}, true}, {{}, {}, true}}, 0};
    const auto s = score_document(doc, rset, TrustConfig{}, f.ctx);
    CHECK(s.degenerate);
    CHECK(s.sc == 0.0);
    CHECK(s.cea == 0.0);
    CHECK(s.judge_raw == 1);
    CHECK(s.cts == doctest::Approx(0.03973431).epsilon(1e-8));
    CHECK(f.chat->calls == 0);
    CHECK(f.embedder->texts_seen == 0);
  }

  TEST_CASE("score_corpus is resumable") {
    ScoringFixture f;
    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i)
      docs.push_back({"d" + std::to_string(i), "gear number " + std::to_string(i), {"F16H"}});
    ScoreCorpusOptions opts;
    opts.scores_path = f.dir / "scores.jsonl";
    opts.rationales_path = f.dir / "rationales.jsonl";
    opts.parallelism = 3;
    const auto first = score_corpus(docs, TrustConfig{}, f.ctx, opts);
    CHECK(first.scores.size() == 10);
    CHECK(first.reused == 0);
    CHECK(first.generated_rationales == 10);
    const int calls = f.chat->calls;
    const auto second = score_corpus(docs, TrustConfig{}, f.ctx, opts);
    CHECK(f.chat->calls == calls);
    CHECK(second.reused == 10);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      CHECK(second.scores[i].doc_id == docs[i].id);
      CHECK(second.scores[i].cts == first.scores[i].cts);
    }

    // Stored rationales are reused when the scores file is gone.
    std::filesystem::remove(opts.scores_path);
    const int teacher_calls_before = f.chat->calls;
    const auto third = score_corpus(docs, TrustConfig{}, f.ctx, opts);
    CHECK(third.generated_rationales == 0);
    CHECK(f.chat->calls - teacher_calls_before == 10);  // judge only
    CHECK(load_trust_scores(opts.scores_path).size() == 10);
  }

  TEST_CASE("trust score records round trip") {
    TempDir dir;
    TrustScores s{"a", 0.1, 0.2, 0.3, 0.2, 2, false, 0.1, 0.2};
    write_trust_scores(dir / "s.jsonl", {s});
    const auto back = load_trust_scores(dir / "s.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].cts == s.cts);
    CHECK(back[0].judge_raw == 2);
    write_trust_scores(dir / "dup.jsonl", {s, s});
    CHECK_THROWS_AS(load_trust_scores(dir / "dup.jsonl"), ValidationError);
  }
}
