// src/llm_gateway.cpp

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

#include "sfd/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <thread>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

const std::string_view kTeacherPromptTemplate = R"PROMPT(
You are an expert in patent classification with deep knowledge of the Cooperative Patent Classification (CPC) system. Your task is to analyze the provided patent text (abstract or representative claim) and identify the relevant CPC technical subclasses. You must also provide a detailed, logical reasoning process explaining why each subclass was selected, ensuring alignment with the CPC class definitions.

Instructions:
1. Identify one or more CPC subclasses (e.g., 'G06F', 'H04L', 'A61B') that best represent the technical content of the patent text. Ensure the subclasses are valid and specific to at least the 4-character CPC code level.
2. Provide a rigorous reasoning process that justifies your classification decisions. The reasoning must be less than 60 words and must be coherent, grounded in the technical content of the patent, and aligned with the CPC subclass definitions.
3. Consider that a patent may belong to multiple CPC subclasses due to its multi-label nature.
4. Output your response strictly in the JSON format below, with no additional text, comments, or Markdown formatting.

Example output format:
{
  "predicted_labels": ["B25B"],
  "reasoning": "The patent text describes a mechanical hand tool, specifically a wrench. Key features include 'adjustable jaws' for gripping 'nuts and bolts' and a 'handle' for applying torque, aligning with CPC subclass B25B."
}

Patent text:
---
{patent_text}
)PROMPT";

const std::string_view kDefinitionPromptTemplate = R"PROMPT(
You are an expert on the Cooperative Patent Classification (CPC) system.
Your task is to provide a concise, official definition for the given CPC subclass code.
The definition should be a single, clear sentence. Do not add any extra explanation or introductory text.

CPC Code: {cpc_code}
Definition: )PROMPT";

const std::string_view kJudgePromptTemplate = R"PROMPT(
You are an impartial and strict judge. Your task is to evaluate if the provided 'Reasoning' logically and accurately supports the assignment of the given 'Predicted Labels' based on the 'Original Text'.

Rate the quality of the reasoning on a scale of 1 to 5.
- 1: Completely illogical, irrelevant, or hallucinatory.
- 2: Poorly reasoned, contains significant flaws.
- 3: Partially correct but has logical gaps or is not well-supported.
- 4: Mostly logical and relevant, with minor flaws.
- 5: Perfectly logical, coherent, and directly justifies the labels based on the text.

Your answer MUST be a single digit from 1 to 5.

Original Text:
---
{text}
---

Predicted Labels: {labels}
---

Reasoning:
---
{reasoning}
---

Based on your evaluation, what is the score for this reasoning? Answer with a single digit (1-5).
Score:)PROMPT";

namespace {

constexpr std::string_view kPlaceholders[] = {
    "{patent_text}", "{cpc_code}", "{text}", "{labels}", "{reasoning}"};

std::string substitute(
    std::string_view tmpl,
    std::initializer_list<std::pair<std::string_view, std::string_view>> subs) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    bool matched = false;
    if (tmpl[pos] == '{') {
      for (const auto& [name, value] : subs) {
        if (tmpl.substr(pos, name.size()) == name) {
          out.append(value);
          pos += name.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(tmpl[pos++]);
  }
  return out;
}

std::string format_labels(const std::vector<std::string>& labels) {
  std::string out = "[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += labels[i];
  }
  out += "]";
  return out;
}

void default_sleep(std::chrono::milliseconds d) {
  std::this_thread::sleep_for(d);
}

}  // namespace

std::string render_teacher_prompt(const Document& doc) {
  return substitute(kTeacherPromptTemplate, {{"{patent_text}", doc.text}});
}

std::string render_definition_prompt(std::string_view code) {
  return substitute(kDefinitionPromptTemplate, {{"{cpc_code}", code}});
}

std::string render_judge_prompt(std::string_view text,
                                const std::vector<std::string>& labels,
                                std::string_view reasoning) {
  const std::string serialized = format_labels(labels);
  return substitute(kJudgePromptTemplate, {{"{text}", text},
                                           {"{labels}", serialized},
                                           {"{reasoning}", reasoning}});
}

std::size_t count_placeholders(std::string_view prompt) {
  std::size_t n = 0;
  for (auto ph : kPlaceholders)
    for (auto pos = prompt.find(ph); pos != std::string_view::npos;
         pos = prompt.find(ph, pos + 1))
      ++n;
  return n;
}

// ---------------------------------------------------------------------------

CacheKey CacheKey::of(const CompletionRequest& req) {
  // -0.0 and 0.0 must share a key.
  double temperature = req.temperature == 0.0 ? 0.0 : req.temperature;
  json fields = json::array({req.backend_id, req.model_id, req.prompt,
                             temperature, req.sample_index, req.max_tokens});
  if (req.retry > 0) fields.push_back(req.retry);
  return CacheKey{sha256_hex(fields.dump())};
}

std::string MockChatBackend::complete(const CompletionRequest& req) {
  return "mock completion " + CacheKey::of(req).digest.substr(0, 16);
}

// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(RetryPolicy policy,
                       std::optional<std::filesystem::path> cache_dir)
    : policy_(std::move(policy)), cache_dir_(std::move(cache_dir)) {
  if (!policy_.sleep) policy_.sleep = default_sleep;
  if (policy_.max_attempts < 1) policy_.max_attempts = 1;
}

void LlmGateway::register_backend(const std::string& id,
                                  std::shared_ptr<ChatBackend> backend) {
  std::lock_guard<std::mutex> lock(registry_mu_);
  backends_[id] = std::move(backend);
}

bool LlmGateway::has_backend(const std::string& id) const {
  std::lock_guard<std::mutex> lock(registry_mu_);
  return backends_.count(id) > 0;
}

std::string LlmGateway::complete(const CompletionRequest& req) {
  std::shared_ptr<ChatBackend> backend;
  {
    std::lock_guard<std::mutex> lock(registry_mu_);
    auto it = backends_.find(req.backend_id);
    if (it == backends_.end())
      throw ConfigError("unknown backend \"" + req.backend_id + "\"");
    backend = it->second;
  }
  auto delay = policy_.initial_delay;
  std::string last_error;
  for (int attempt = 1; attempt <= policy_.max_attempts; ++attempt) {
    ++backend_calls_;
    try {
      return backend->complete(req);
    } catch (const TransientError& e) {
      last_error = e.what();
    }
    if (attempt < policy_.max_attempts) {
      policy_.sleep(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(delay.count()) * policy_.backoff_factor));
    }
  }
  throw TransportError("backend \"" + req.backend_id + "\" failed after " +
                           std::to_string(policy_.max_attempts) +
                           " attempts: " + last_error,
                       policy_.max_attempts);
}

std::mutex& LlmGateway::key_mutex(const CacheKey& key) {
  return key_mutexes_[fnv1a64(key.digest) % key_mutexes_.size()];
}

std::string LlmGateway::cached_complete(const CompletionRequest& req,
                                        const std::filesystem::path& cache_dir) {
  const auto key = CacheKey::of(req);
  const auto file = cache_dir / (key.digest + ".txt");
  std::lock_guard<std::mutex> lock(key_mutex(key));
  if (auto hit = read_cache_entry(file, key)) {
    ++cache_hits_;
    return *std::move(hit);
  }
  std::string text = complete(req);
  write_cache_entry(file, key, req, text);
  return text;
}

std::string LlmGateway::request(const CompletionRequest& req) {
  if (cache_dir_) return cached_complete(req, *cache_dir_);
  return complete(req);
}

std::optional<std::string> read_cache_entry(const std::filesystem::path& file,
                                            const CacheKey& key) {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) return std::nullopt;
  std::string raw;
  try {
    raw = read_file(file);
  } catch (const Error&) {
    return std::nullopt;
  }
  auto nl = raw.find('\n');
  if (nl == std::string::npos) return std::nullopt;
  json header = json::parse(raw.substr(0, nl), nullptr, false);
  if (header.is_discarded() || !header.is_object()) return std::nullopt;
  if (header.value("format", "") != "sfd-cache" ||
      header.value("key", "") != key.digest)
    return std::nullopt;
  auto body = raw.substr(nl + 1);
  auto it = header.find("response_bytes");
  if (it == header.end() || !it->is_number_unsigned() ||
      it->get<std::size_t>() != body.size())
    return std::nullopt;
  return body;
}

void write_cache_entry(const std::filesystem::path& file, const CacheKey& key,
                       const CompletionRequest& req, std::string_view text) {
  const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  json header = {{"format", "sfd-cache"},
                 {"version", 1},
                 {"key", key.digest},
                 {"backend_id", req.backend_id},
                 {"model_id", req.model_id},
                 {"prompt_sha256", sha256_hex(req.prompt)},
                 {"temperature", req.temperature},
                 {"sample_index", req.sample_index},
                 {"max_tokens", req.max_tokens},
                 {"retry", req.retry},
                 {"timestamp", now},
                 {"response_bytes", text.size()}};
  std::string contents = header.dump();
  contents += '\n';
  contents.append(text);
  write_file_atomic(file, contents);
}

// ---------------------------------------------------------------------------

namespace {

// End of the JSON object starting at `open`, honoring strings and escapes.
std::size_t match_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

bool is_alnum(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// First digit 1-5 in text[from, end) not embedded in a word or number.
std::optional<int> first_standalone_digit(std::string_view text,
                                          std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    char c = text[i];
    if (c < '1' || c > '5') continue;
    char prev = i > 0 ? text[i - 1] : ' ';
    char next = i + 1 < text.size() ? text[i + 1] : ' ';
    char after = i + 2 < text.size() ? text[i + 2] : ' ';
    if (is_alnum(prev) || prev == '.' || prev == '-') continue;
    if (is_alnum(next)) continue;
    if ((next == '.' || next == ',' || next == '-') && is_digit(after))
      continue;
    return c - '0';
  }
  return std::nullopt;
}

}  // namespace

TeacherOutput parse_teacher_output(std::string_view text) {
  std::string last_problem = "no JSON object found";
  for (auto open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    auto close = match_brace(text, open);
    if (close == std::string_view::npos) break;
    json obj = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;

    // First well-formed object decides the outcome.
    if (!obj.contains("predicted_labels") || !obj.contains("reasoning"))
      throw ParseError("teacher output missing key predicted_labels or reasoning");
    if (obj.size() != 2)
      throw ParseError("teacher output has keys besides predicted_labels and reasoning");
    const auto& labels = obj["predicted_labels"];
    const auto& reasoning = obj["reasoning"];
    if (!labels.is_array() || !reasoning.is_string())
      throw ParseError("teacher output fields have the wrong types");
    TeacherOutput out;
    for (const auto& l : labels) {
      if (!l.is_string()) throw ParseError("non-string predicted label");
      auto code = l.get<std::string>();
      if (!is_valid_label_code(code))
        throw ParseError("invalid predicted label code \"" + code + "\"");
      if (std::find(out.predicted_labels.begin(), out.predicted_labels.end(),
                    code) == out.predicted_labels.end())
        out.predicted_labels.push_back(std::move(code));
    }
    if (out.predicted_labels.empty())
      throw ParseError("teacher output has an empty label list");
    out.reasoning = reasoning.get<std::string>();
    if (out.reasoning.empty())
      throw ParseError("teacher output has empty reasoning");
    return out;
  }
  throw ParseError(last_problem);
}

std::string serialize_teacher_output(const TeacherOutput& out) {
  return json{{"predicted_labels", out.predicted_labels},
              {"reasoning", out.reasoning}}
      .dump();
}

JudgeVerdict parse_judge_score(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  });
  auto pos = lower.rfind("score");
  if (pos != std::string::npos)
    if (auto d = first_standalone_digit(text, pos + 5)) return JudgeVerdict{*d};
  if (auto d = first_standalone_digit(text, 0)) return JudgeVerdict{*d};
  throw ParseError("no score in 1-5 found in judge output");
}

// ---------------------------------------------------------------------------

RationaleSet generate_rationales(const Document& doc, int k,
                                 const ModelEndpoint& teacher,
                                 LlmGateway& gateway) {
  if (k < 2)
    throw ValidationError("k must be at least 2 for self-consistency, got " +
                          std::to_string(k));
  RationaleSet rset;
  rset.doc_id = doc.id;
  CompletionRequest req;
  req.backend_id = teacher.backend_id;
  req.model_id = teacher.model_id;
  req.prompt = render_teacher_prompt(doc);
  req.temperature = teacher.temperature;
  req.max_tokens = teacher.max_tokens;
  for (int i = 0; i < k; ++i) {
    req.sample_index = i;
    RationaleSample sample{{}, {}, true};
    for (int retry = 0; retry <= kParseRetries; ++retry) {
      req.retry = retry;
      try {
        auto parsed = parse_teacher_output(gateway.request(req));
        sample = {std::move(parsed.predicted_labels),
                  std::move(parsed.reasoning), false};
        break;
      } catch (const ParseError&) {
      }
    }
    rset.samples.push_back(std::move(sample));
  }
  rset.canonical_index = first_non_degenerate(rset.samples);
  return rset;
}

JudgeResult judge_rationale(std::string_view text,
                            const std::vector<std::string>& labels,
                            std::string_view reasoning,
                            const ModelEndpoint& judge, LlmGateway& gateway) {
  CompletionRequest req;
  req.backend_id = judge.backend_id;
  req.model_id = judge.model_id;
  req.prompt = render_judge_prompt(text, labels, reasoning);
  req.temperature = judge.temperature;
  req.max_tokens = judge.max_tokens;
  for (int retry = 0; retry <= kParseRetries; ++retry) {
    req.retry = retry;
    try {
      return {parse_judge_score(gateway.request(req)).raw_score, true};
    } catch (const ParseError&) {
    }
  }
  return {1, false};
}

DefinitionResolver::DefinitionResolver(
    LabelCatalog& catalog, const ModelEndpoint& endpoint, LlmGateway& gateway,
    std::optional<std::filesystem::path> persist_path)
    : catalog_(catalog),
      endpoint_(endpoint),
      gateway_(gateway),
      persist_path_(std::move(persist_path)) {}

LabelDefinition DefinitionResolver::fetch(const std::string& code) {
  std::lock_guard<std::mutex> lock(mu_);
  if (const auto* def = catalog_.find(code)) return *def;
  if (!is_valid_label_code(code))
    throw ValidationError("invalid label code \"" + code + "\"");

  CompletionRequest req;
  req.backend_id = endpoint_.backend_id;
  req.model_id = endpoint_.model_id;
  req.prompt = render_definition_prompt(code);
  req.temperature = endpoint_.temperature;
  req.max_tokens = endpoint_.max_tokens;
  std::string text;
  try {
    text = gateway_.request(req);
  } catch (const Error& e) {
    throw Error("definition for " + code + " unavailable: " + e.what());
  }
  // Keep the first non-blank line, trimmed.
  std::string definition;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    auto line = text.substr(start, end - start);
    auto b = line.find_first_not_of(" \t\r");
    if (b != std::string::npos) {
      auto e = line.find_last_not_of(" \t\r");
      definition = line.substr(b, e - b + 1);
      break;
    }
    start = end + 1;
  }
  if (definition.empty())
    throw Error("definition for " + code + " unavailable: empty response");

  LabelDefinition def{code, definition, DefinitionSource::kLlmGenerated};
  catalog_.put(def);
  ++generated_;
  if (persist_path_) {
    LabelCatalog generated;
    for (const auto& [c, d] : catalog_)
      if (d.source == DefinitionSource::kLlmGenerated) generated.put(d);
    write_label_definitions(*persist_path_, generated);
  }
  return def;
}

LabelDefinition fetch_definition(const std::string& code, LabelCatalog& catalog,
                                 const ModelEndpoint& endpoint,
                                 LlmGateway& gateway) {
  DefinitionResolver resolver(catalog, endpoint, gateway);
  return resolver.fetch(code);
}

}  // namespace sfd
