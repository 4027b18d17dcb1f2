// src/embeddings.cpp

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

#include "sfd/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>
#include <unordered_map>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

EmbeddingVector::EmbeddingVector(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty()) throw ValidationError("embedding must be non-empty");
  for (double v : values_)
    if (!std::isfinite(v)) throw ValidationError("non-finite embedding entry");
}

EmbeddingVector EmbeddingVector::zeros(std::size_t dim) {
  return EmbeddingVector(std::vector<double>(dim, 0.0));
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim())
    throw ValidationError("embedding dimension mismatch: " +
                          std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

EmbeddingVector mock_embed(std::string_view text, std::size_t dim) {
  if (dim < 8)
    throw ValidationError("mock embedding dimension must be at least 8");
  std::vector<double> acc(dim, 0.0);
  if (text.empty()) return EmbeddingVector(std::move(acc));

  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back('\x02');
  padded.append(text);
  padded.push_back('\x03');

  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h =
        fnv1a64(std::string_view(padded).substr(i, 3)) ^ kMockEmbedSeed;
    std::uint64_t bits = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      if (d % 64 == 0) bits = splitmix64(h + d / 64);
      acc[d] += (bits >> (d % 64)) & 1 ? 1.0 : -1.0;
    }
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : acc) v /= norm;
  return EmbeddingVector(std::move(acc));
}

MockEmbedder::MockEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ < 8)
    throw ValidationError("mock embedding dimension must be at least 8");
}

std::vector<EmbeddingVector> MockEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(mock_embed(t, dim_));
  return out;
}

// ---------------------------------------------------------------------------

EmbeddingService::EmbeddingService(
    RetryPolicy policy, std::optional<std::filesystem::path> cache_dir)
    : policy_(std::move(policy)), cache_dir_(std::move(cache_dir)) {
  if (!policy_.sleep)
    policy_.sleep = [](std::chrono::milliseconds d) {
      std::this_thread::sleep_for(d);
    };
  if (policy_.max_attempts < 1) policy_.max_attempts = 1;
}

void EmbeddingService::register_backend(const std::string& id,
                                        std::shared_ptr<Embedder> e) {
  std::lock_guard<std::mutex> lock(mu_);
  backends_[id] = std::move(e);
}

std::shared_ptr<Embedder> EmbeddingService::lookup(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = backends_.find(id);
  if (it == backends_.end())
    throw ConfigError("unknown embedding backend \"" + id + "\"");
  return it->second;
}

std::optional<EmbeddingVector> EmbeddingService::load_cached(
    const std::string& key) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (!cache_dir_) return std::nullopt;
  const auto file = *cache_dir_ / (key + ".json");
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  try {
    json obj = json::parse(read_file(file));
    EmbeddingVector v(obj.at("values").get<std::vector<double>>());
    if (v.dim() != obj.at("dim").get<std::size_t>()) return std::nullopt;
    std::lock_guard<std::mutex> lock(mu_);
    memory_.emplace(key, v);
    return v;
  } catch (const std::exception&) {
    return std::nullopt;  // corrupt entry: recompute and overwrite
  }
}

void EmbeddingService::store_cached(const std::string& key,
                                    const std::string& backend,
                                    const std::string& text_digest,
                                    const EmbeddingVector& v) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    memory_.insert_or_assign(key, v);
  }
  if (!cache_dir_) return;
  json obj = {{"backend_id", backend},
              {"text_sha256", text_digest},
              {"dim", v.dim()},
              {"values", std::vector<double>(v.values().begin(), v.values().end())}};
  write_file_atomic(*cache_dir_ / (key + ".json"), obj.dump());
}

EmbeddingVector EmbeddingService::embed(const std::string& text,
                                        const std::string& backend) {
  return embed_many({text}, backend).front();
}

std::vector<EmbeddingVector> EmbeddingService::embed_many(
    const std::vector<std::string>& texts, const std::string& backend) {
  auto embedder = lookup(backend);
  std::vector<std::optional<EmbeddingVector>> out(texts.size());
  std::vector<std::string> keys(texts.size()), digests(texts.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_slots;
  // Repeated texts inside one batch are sent once.
  std::unordered_map<std::string, std::size_t> first_slot;
  std::vector<std::pair<std::size_t, std::size_t>> repeats;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty() && embedder->dim() > 0) {
      out[i] = EmbeddingVector::zeros(embedder->dim());
      continue;
    }
    digests[i] = sha256_hex(texts[i]);
    keys[i] = sha256_hex(json::array({backend, digests[i]}).dump());
    if (auto it = first_slot.find(keys[i]); it != first_slot.end()) {
      repeats.emplace_back(i, it->second);
    } else if (auto hit = load_cached(keys[i])) {
      first_slot.emplace(keys[i], i);
      out[i] = std::move(*hit);
    } else {
      first_slot.emplace(keys[i], i);
      missing.push_back(texts[i]);
      missing_slots.push_back(i);
    }
  }
  if (!missing.empty()) {
    std::vector<EmbeddingVector> fresh;
    auto delay = policy_.initial_delay;
    std::string last_error;
    for (int attempt = 1;; ++attempt) {
      ++backend_calls_;
      try {
        fresh = embedder->embed_batch(missing);
        break;
      } catch (const TransientError& e) {
        last_error = e.what();
      }
      if (attempt >= policy_.max_attempts)
        throw TransportError("embedding backend \"" + backend +
                                 "\" failed after " + std::to_string(attempt) +
                                 " attempts: " + last_error,
                             attempt);
      policy_.sleep(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(delay.count()) * policy_.backoff_factor));
    }
    if (fresh.size() != missing.size())
      throw ValidationError("embedding backend \"" + backend + "\" returned " +
                            std::to_string(fresh.size()) + " vectors for " +
                            std::to_string(missing.size()) + " texts");
    for (std::size_t j = 0; j < missing_slots.size(); ++j) {
      const auto slot = missing_slots[j];
      store_cached(keys[slot], backend, digests[slot], fresh[j]);
      out[slot] = std::move(fresh[j]);
    }
  }
  for (const auto& [slot, source] : repeats) out[slot] = out[source];
  std::vector<EmbeddingVector> result;
  result.reserve(out.size());
  std::size_t dim = 0;
  for (auto& v : out) {
    if (dim == 0) dim = v->dim();
    if (v->dim() != dim)
      throw ValidationError("embedding backend \"" + backend +
                            "\" returned inconsistent dimensions");
    result.push_back(std::move(*v));
  }
  return result;
}

}  // namespace sfd
