// tests/test_synthetic.cpp

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

#include <algorithm>
#include <set>

#include "sfd/error.hpp"
#include "sfd/eval_analysis.hpp"
#include "sfd/llm_gateway.hpp"
#include "sfd/synthetic.hpp"

using namespace sfd;

namespace {

CompletionRequest request(std::string prompt, int sample = 0, int retry = 0) {
  CompletionRequest r;
  r.backend_id = "synthetic";
  r.model_id = "m";
  r.prompt = std::move(prompt);
  r.temperature = 0.7;
  r.sample_index = sample;
  r.retry = retry;
  return r;
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("labels have disjoint keyword pools") {
    std::set<std::string> seen;
    for (const auto& l : synthetic_labels()) {
      CHECK(is_valid_label_code(l.code));
      CHECK_FALSE(l.definition.empty());
      for (const auto& k : l.keywords) CHECK(seen.insert(k).second);
    }
  }

  TEST_CASE("corpus has the exact noise fraction and a text-recoverable flag") {
    SyntheticSpec spec;
    spec.num_docs = 400;
    spec.seed = 3;
    const auto c = generate_synthetic_corpus(spec);
    REQUIRE(c.documents.size() == 400);
    CHECK(c.noisy.size() == 120);
    CHECK(c.catalog.size() == synthetic_labels().size());
    for (const auto& d : c.documents) {
      CHECK(synthetic_is_noisy(d.text) == (c.noisy.count(d.id) == 1));
      CHECK_FALSE(d.gold_labels.empty());
    }
    const auto again = generate_synthetic_corpus(spec);
    CHECK(again.documents == c.documents);
    spec.seed = 4;
    CHECK_FALSE(generate_synthetic_corpus(spec).documents == c.documents);
  }

  TEST_CASE("teacher follows the noise flag") {
    SyntheticSpec spec;
    spec.num_docs = 200;
    const auto c = generate_synthetic_corpus(spec);
    SyntheticChatBackend backend;
    std::size_t clean_hits = 0, clean = 0, noisy_hits = 0, noisy = 0, malformed = 0;
    for (const auto& d : c.documents) {
      const auto reply = backend.complete(request(render_teacher_prompt(d)));
      CHECK(reply == backend.complete(request(render_teacher_prompt(d))));
      TeacherOutput out;
      try {
        out = parse_teacher_output(reply);
      } catch (const ParseError&) {
        ++malformed;
        continue;
      }
      const bool hit = std::find(out.predicted_labels.begin(), out.predicted_labels.end(),
                                 d.gold_labels.front()) != out.predicted_labels.end();
      if (c.noisy.count(d.id)) {
        ++noisy;
        noisy_hits += hit;
      } else {
        ++clean;
        clean_hits += hit;
      }
    }
    CHECK(malformed < 30);
    CHECK(double(clean_hits) / clean > 0.9);
    CHECK(double(noisy_hits) / noisy < 0.5);
  }

  TEST_CASE("judge and definition replies parse") {
    SyntheticSpec spec;
    spec.num_docs = 50;
    const auto c = generate_synthetic_corpus(spec);
    SyntheticChatBackend backend;
    for (const auto& d : c.documents) {
      const auto v = parse_judge_score(
          backend.complete(request(render_judge_prompt(d.text, d.gold_labels, "because"))));
      CHECK(v.raw_score >= 1);
      CHECK(v.raw_score <= 5);
    }
    for (const auto& l : synthetic_labels()) {
      const auto def = backend.complete(request(render_definition_prompt(l.code)));
      CHECK_FALSE(def.empty());
    }
  }

  TEST_CASE("annotations track noise and skip cells") {
    SyntheticSpec spec;
    spec.num_docs = 90;
    const auto c = generate_synthetic_corpus(spec);
    const auto recs = synthetic_annotations(c, 60, 3, 1);
    CHECK(recs.size() == 60 * 3 - 20);
    for (const auto& r : recs)
      for (auto crit : {Criterion::kLogicalConsistency, Criterion::kTaskAlignment, Criterion::kPlausibility}) {
        CHECK(r.score(crit) >= 1);
        CHECK(r.score(crit) <= 5);
      }
    CHECK(krippendorff_alpha(recs, std::nullopt) > 0.5);
  }
}
