// include/sfd/llm_gateway.hpp

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

#ifndef SFD_LLM_GATEWAY_HPP_
#define SFD_LLM_GATEWAY_HPP_

#include <array>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/rationale.hpp"

namespace sfd {

// ---------------------------------------------------------------------------
// Prompt templates. Placeholders are substituted in a single pass, so
// substituted text is never re-scanned.

extern const std::string_view kTeacherPromptTemplate;     // {patent_text}
extern const std::string_view kDefinitionPromptTemplate;  // {cpc_code}
extern const std::string_view kJudgePromptTemplate;  // {text} {labels} {reasoning}

std::string render_teacher_prompt(const Document& doc);
std::string render_definition_prompt(std::string_view code);
// labels are serialized as "[A, B, C]" in the given order.
std::string render_judge_prompt(std::string_view text,
                                const std::vector<std::string>& labels,
                                std::string_view reasoning);

// Number of known template placeholders left in a rendered prompt.
std::size_t count_placeholders(std::string_view prompt);

// ---------------------------------------------------------------------------
// Requests and the content-addressed cache key.

struct CompletionRequest {
  std::string backend_id;
  std::string model_id;
  std::string prompt;
  double temperature = 0.0;
  int sample_index = 0;
  int max_tokens = 512;
  // Parse-retry counter. Zero leaves the key identical to the plain field
  // tuple; positive values are appended to it.
  int retry = 0;
};

// SHA-256 (256-bit) over a canonical JSON encoding of the request fields, hex
// encoded. Collisions are treated as impossible at this width.
struct CacheKey {
  std::string digest;

  static CacheKey of(const CompletionRequest& req);
  bool operator==(const CacheKey&) const = default;
};

// ---------------------------------------------------------------------------
// Backends.

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Returns the completion text. Throws TransientError for retryable
  // failures; any other exception aborts without retry.
  virtual std::string complete(const CompletionRequest& req) = 0;
};

// Deterministic stand-in: the text is a pure function of the cache key.
class MockChatBackend : public ChatBackend {
 public:
  std::string complete(const CompletionRequest& req) override;
};

// Generic chat-completion endpoint: POST {base_url}/chat/completions with
// {"model", "messages": [{"role": "user", "content": prompt}], "temperature",
// "max_tokens"}; the reply text is choices[0].message.content. The bearer
// token, when non-empty, is sent as an Authorization header.
class HttpChatBackend : public ChatBackend {
 public:
  HttpChatBackend(std::string base_url, std::string bearer_token,
                  std::chrono::seconds timeout = std::chrono::seconds(120));
  std::string complete(const CompletionRequest& req) override;

 private:
  std::string base_url_;
  std::string token_;
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double backoff_factor = 2.0;
  // Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

// Routes requests to registered backends, retrying transient failures with
// exponential backoff, and optionally caching responses on disk (one file
// per CacheKey digest).
class LlmGateway {
 public:
  explicit LlmGateway(RetryPolicy policy = {},
                      std::optional<std::filesystem::path> cache_dir = {});

  void register_backend(const std::string& id,
                        std::shared_ptr<ChatBackend> backend);
  bool has_backend(const std::string& id) const;

  // Throws ConfigError for unknown backends and TransportError once
  // max_attempts transient failures have been seen.
  std::string complete(const CompletionRequest& req);

  // Cache hit returns the stored text; a miss (including an unreadable or
  // corrupt entry) calls complete() and persists the result.
  std::string cached_complete(const CompletionRequest& req,
                              const std::filesystem::path& cache_dir);

  // cached_complete against the configured cache directory, or complete()
  // when none is configured.
  std::string request(const CompletionRequest& req);

  // Total backend invocations, counting every retry attempt.
  std::size_t backend_calls() const { return backend_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

  const std::optional<std::filesystem::path>& cache_dir() const {
    return cache_dir_;
  }

 private:
  std::mutex& key_mutex(const CacheKey& key);

  RetryPolicy policy_;
  std::optional<std::filesystem::path> cache_dir_;
  mutable std::mutex registry_mu_;
  std::map<std::string, std::shared_ptr<ChatBackend>> backends_;
  std::array<std::mutex, 64> key_mutexes_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

// Cache file layout: first line is a JSON header {"format": "sfd-cache",
// "version": 1, "key", "backend_id", "model_id", "prompt_sha256",
// "temperature", "sample_index", "max_tokens", "retry", "timestamp",
// "response_bytes"}; the raw response text follows verbatim.
std::optional<std::string> read_cache_entry(const std::filesystem::path& file,
                                            const CacheKey& key);
void write_cache_entry(const std::filesystem::path& file, const CacheKey& key,
                       const CompletionRequest& req, std::string_view text);

// ---------------------------------------------------------------------------
// Output parsing.

struct TeacherOutput {
  std::vector<std::string> predicted_labels;
  std::string reasoning;

  bool operator==(const TeacherOutput&) const = default;
};

struct JudgeVerdict {
  int raw_score = 1;
};

// Extracts the first well-formed JSON object in text (code fences and
// surrounding prose are tolerated). The object must hold exactly the keys
// predicted_labels and reasoning, with a non-empty list of valid codes and a
// non-empty reasoning. Throws ParseError otherwise.
TeacherOutput parse_teacher_output(std::string_view text);
std::string serialize_teacher_output(const TeacherOutput& out);

// First standalone digit 1-5 after the last "score" (case-insensitive), else
// the first one anywhere. Throws ParseError when there is none.
JudgeVerdict parse_judge_score(std::string_view text);

// ---------------------------------------------------------------------------
// Higher-level calls.

struct ModelEndpoint {
  std::string backend_id = "mock";
  std::string model_id;
  double temperature = 0.0;
  int max_tokens = 512;
};

// Extra attempts after a parse failure before falling back to the default.
inline constexpr int kParseRetries = 2;

// k samples with sample_index 0..k-1. A sample that still fails to parse
// after kParseRetries re-requests is recorded as degenerate. Throws
// ValidationError for k < 2.
RationaleSet generate_rationales(const Document& doc, int k,
                                 const ModelEndpoint& teacher,
                                 LlmGateway& gateway);

struct JudgeResult {
  int raw_score = 1;
  bool parsed = false;  // false when the minimum-trust default was applied
};

// Judge call with the same retry policy; unparseable after retries gives 1.
JudgeResult judge_rationale(std::string_view text,
                            const std::vector<std::string>& labels,
                            std::string_view reasoning,
                            const ModelEndpoint& judge, LlmGateway& gateway);

// Resolves label definitions: file-provided entries first, otherwise one
// backend call per code (memoized). Generated entries are added to the
// catalog as llm-generated and, when a path is set, written out to it.
class DefinitionResolver {
 public:
  DefinitionResolver(LabelCatalog& catalog, const ModelEndpoint& endpoint,
                     LlmGateway& gateway,
                     std::optional<std::filesystem::path> persist_path = {});

  // Throws Error naming the code when the backend fails.
  LabelDefinition fetch(const std::string& code);

  std::size_t generated_count() const { return generated_; }

 private:
  LabelCatalog& catalog_;
  ModelEndpoint endpoint_;
  LlmGateway& gateway_;
  std::optional<std::filesystem::path> persist_path_;
  std::mutex mu_;
  std::size_t generated_ = 0;
};

LabelDefinition fetch_definition(const std::string& code, LabelCatalog& catalog,
                                 const ModelEndpoint& endpoint,
                                 LlmGateway& gateway);

}  // namespace sfd

#endif  // SFD_LLM_GATEWAY_HPP_
