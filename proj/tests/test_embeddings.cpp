// tests/test_embeddings.cpp

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

#include "sfd/embeddings.hpp"
#include "sfd/error.hpp"
#include "test_helpers.hpp"

using namespace sfd;
using sfd::testing::CountingEmbedder;
using sfd::testing::TempDir;
using sfd::testing::naive_cosine;
using sfd::testing::no_sleep_policy;

TEST_SUITE("embeddings") {
  TEST_CASE("cosine fixtures") {
    const EmbeddingVector a({1.0, 0.0}), b({1.0, 1.0}), c({0.0, 1.0}), z = EmbeddingVector::zeros(2);
    CHECK(cosine(a, b) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(a, c) == 0.0);
    CHECK(cosine(a, EmbeddingVector({-2.0, 0.0})) == doctest::Approx(-1.0));
    CHECK(cosine(a, z) == 0.0);
    CHECK_THROWS_AS(cosine(a, EmbeddingVector({1.0, 0.0, 0.0})), ValidationError);
  }

  TEST_CASE("cosine matches an independent oracle and stays in range") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
      const std::size_t dim = 1 + rng() % 40;
      auto x = sfd::testing::random_vector(rng, dim);
      auto y = sfd::testing::random_vector(rng, dim);
      const double c = cosine(EmbeddingVector(x), EmbeddingVector(y));
      CHECK(c == doctest::Approx(naive_cosine(x, y)).epsilon(1e-12));
      CHECK(c >= -1.0);
      CHECK(c <= 1.0);
      CHECK(c == cosine(EmbeddingVector(y), EmbeddingVector(x)));
    }
  }

  TEST_CASE("vectors reject empty and non-finite values") {
    CHECK_THROWS_AS(EmbeddingVector(std::vector<double>{}), ValidationError);
    CHECK_THROWS_AS(EmbeddingVector({1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(EmbeddingVector({INFINITY}), ValidationError);
  }

  TEST_CASE("mock embedding is deterministic, unit length and lexical") {
    const auto a = mock_embed("regenerative braking for an electric vehicle");
    CHECK(a == mock_embed("regenerative braking for an electric vehicle"));
    CHECK(a.dim() == kDefaultMockDim);
    CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const auto near = mock_embed("regenerative braking of an electric vehicle");
    const auto far = mock_embed("pharmaceutical tablet formulation");
    CHECK(cosine(a, near) > cosine(a, far));
    CHECK(mock_embed("").norm() == 0.0);
    CHECK(mock_embed("x", 32).dim() == 32);
    CHECK_THROWS_AS(mock_embed("x", 4), ValidationError);
  }

  TEST_CASE("service caches in memory and on disk") {
    TempDir dir;
    auto backend = std::make_shared<CountingEmbedder>(64);
    {
      EmbeddingService svc(no_sleep_policy(), dir.path());
      svc.register_backend("mock", backend);
      const auto v = svc.embed("gear pinion shaft", "mock");
      CHECK(svc.embed("gear pinion shaft", "mock") == v);
      CHECK(backend->texts_seen == 1);
      const auto many = svc.embed_many({"gear pinion shaft", "clutch", "clutch"}, "mock");
      CHECK(many[0] == v);
      CHECK(many[1] == many[2]);
      CHECK(backend->texts_seen == 2);
      CHECK(svc.embed("", "mock").norm() == 0.0);
      CHECK(backend->texts_seen == 2);
    }
    EmbeddingService fresh(no_sleep_policy(), dir.path());
    fresh.register_backend("mock", backend);
    fresh.embed("clutch", "mock");
    CHECK(backend->texts_seen == 2);
    CHECK(fresh.backend_calls() == 0);
  }

  TEST_CASE("unknown embedder is a configuration error") {
    EmbeddingService svc(no_sleep_policy());
    CHECK_THROWS_AS(svc.embed("x", "nope"), ConfigError);
  }
}
