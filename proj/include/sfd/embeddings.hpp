// include/sfd/embeddings.hpp

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

#ifndef SFD_EMBEDDINGS_HPP_
#define SFD_EMBEDDINGS_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sfd/llm_gateway.hpp"

namespace sfd {

// Fixed-length vector of finite reals.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  // Throws ValidationError on an empty vector or non-finite entries.
  explicit EmbeddingVector(std::vector<double> values);

  static EmbeddingVector zeros(std::size_t dim);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// cos(a, b) = a.b / (|a| |b|), or 0 when either norm is 0. Throws
// ValidationError on a dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr std::size_t kDefaultMockDim = 256;
inline constexpr std::uint64_t kMockEmbedSeed = 0x5fd0e1b5c0ffee11ULL;

// Offline embedder: character 3-grams of the text (padded with one boundary
// byte on each side) are projected through a seeded random sign matrix into
// `dim` coordinates and L2-normalized. Empty text maps to all zeros.
// Requires dim >= 8.
EmbeddingVector mock_embed(std::string_view text,
                           std::size_t dim = kDefaultMockDim);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  // One vector per input, in order. Throws TransientError for retryable
  // failures.
  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) = 0;
};

class MockEmbedder : public Embedder {
 public:
  explicit MockEmbedder(std::size_t dim = kDefaultMockDim);
  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;

 private:
  std::size_t dim_;
};

// POST {base_url}/embeddings with {"model", "input": [texts]}; expects
// {"data": [{"embedding": [...], "index": i}, ...]}.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(std::string base_url, std::string model,
               std::string bearer_token,
               std::chrono::seconds timeout = std::chrono::seconds(120));
  // Unknown until the first response; 0 before that.
  std::size_t dim() const override { return dim_; }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;
  void set_dim(std::size_t dim) { dim_ = dim; }

 private:
  std::string base_url_;
  std::string model_;
  std::string token_;
  std::chrono::seconds timeout_;
  std::size_t dim_ = 0;
};

// Registry of embedders with retries and a two-level cache (memory, then one
// file per (backend id, text digest) under cache_dir).
class EmbeddingService {
 public:
  explicit EmbeddingService(RetryPolicy policy = {},
                            std::optional<std::filesystem::path> cache_dir = {});

  void register_backend(const std::string& id, std::shared_ptr<Embedder> e);

  // Deterministic per (backend, text). Empty text maps to the zero vector of
  // the backend's dimension. Throws ConfigError for unknown backends and
  // TransportError after exhausted retries.
  EmbeddingVector embed(const std::string& text, const std::string& backend);
  std::vector<EmbeddingVector> embed_many(const std::vector<std::string>& texts,
                                          const std::string& backend);

  std::size_t backend_calls() const { return backend_calls_.load(); }

 private:
  std::shared_ptr<Embedder> lookup(const std::string& id) const;
  std::optional<EmbeddingVector> load_cached(const std::string& key);
  void store_cached(const std::string& key, const std::string& backend,
                    const std::string& text_digest, const EmbeddingVector& v);

  RetryPolicy policy_;
  std::optional<std::filesystem::path> cache_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Embedder>> backends_;
  std::unordered_map<std::string, EmbeddingVector> memory_;
  std::atomic<std::size_t> backend_calls_{0};
};

}  // namespace sfd

#endif  // SFD_EMBEDDINGS_HPP_
