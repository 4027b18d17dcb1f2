// src/trust_metrics.cpp

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

#include "sfd/trust_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

void TrustConfig::validate() const {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("trust weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("trust weights must sum to 1");
  if (k < 2) throw ValidationError("k must be at least 2");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double self_consistency(std::span<const EmbeddingVector> rationale_embeddings,
                        bool clamp) {
  const std::size_t k = rationale_embeddings.size();
  if (k < 2)
    throw ValidationError("self-consistency needs at least two rationales");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      sum += cosine(rationale_embeddings[i], rationale_embeddings[j]);
  double sc = 2.0 * sum / (static_cast<double>(k) * static_cast<double>(k - 1));
  return clamp ? std::max(0.0, sc) : sc;
}

double class_entailment_alignment(
    const EmbeddingVector& rationale_embedding,
    std::span<const EmbeddingVector> definition_embeddings, bool clamp) {
  if (definition_embeddings.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : definition_embeddings)
    sum += cosine(rationale_embedding, d);
  double cea = sum / static_cast<double>(definition_embeddings.size());
  return clamp ? std::max(0.0, cea) : cea;
}

double class_entailment_alignment(
    const EmbeddingVector& rationale_embedding,
    const std::vector<std::string>& predicted_labels,
    const std::map<std::string, EmbeddingVector>& definition_embeddings,
    bool clamp) {
  std::vector<EmbeddingVector> defs;
  defs.reserve(predicted_labels.size());
  for (const auto& code : predicted_labels) {
    auto it = definition_embeddings.find(code);
    if (it == definition_embeddings.end())
      throw ValidationError("no definition for predicted label " + code);
    defs.push_back(it->second);
  }
  return class_entailment_alignment(rationale_embedding, defs, clamp);
}

double llm_agreement(int judge_raw, LasMapping mapping) {
  if (judge_raw < 1 || judge_raw > 5)
    throw ValidationError("judge score " + std::to_string(judge_raw) +
                          " outside 1-5");
  const double s = judge_raw;
  switch (mapping) {
    case LasMapping::kCentered:
      return sigmoid(s - 3.0);
    case LasMapping::kLiteral:
      return sigmoid(s);
    case LasMapping::kLinear:
      return (s - 1.0) / 4.0;
  }
  return 0.0;
}

double combined_trust(double sc, double cea, double las,
                      const TrustWeights& weights) {
  return weights[0] * sc + weights[1] * cea + weights[2] * las;
}

std::size_t medoid_index(const std::vector<RationaleSample>& samples,
                         std::span<const EmbeddingVector> embeddings) {
  std::size_t best = first_non_degenerate(samples);
  double best_score = -2.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].degenerate) continue;
    double sum = 0.0;
    for (std::size_t j = 0; j < samples.size(); ++j)
      if (j != i) sum += cosine(embeddings[i], embeddings[j]);
    double mean = samples.size() > 1 ? sum / double(samples.size() - 1) : 0.0;
    if (mean > best_score) {
      best_score = mean;
      best = i;
    }
  }
  return best;
}

TrustScores score_document(const Document& doc, const RationaleSet& rset,
                           const TrustConfig& cfg, ScoringContext& ctx) {
  if (rset.doc_id != doc.id)
    throw ValidationError("rationale set " + rset.doc_id +
                          " does not belong to document " + doc.id);
  if (rset.k() < 2)
    throw ValidationError("rationale set for " + doc.id +
                          " has fewer than two samples");
  TrustScores out;
  out.doc_id = doc.id;

  if (rset.all_degenerate()) {
    out.degenerate = true;
    out.judge_raw = 1;
    out.las = llm_agreement(1, cfg.las_mapping);
    out.cts = combined_trust(out.sc, out.cea, out.las, cfg.weights);
    return out;
  }

  std::vector<std::string> reasonings;
  reasonings.reserve(rset.k());
  for (const auto& s : rset.samples)
    reasonings.push_back(s.degenerate ? std::string() : s.reasoning);
  const auto rationale_vecs = ctx.embeddings.embed_many(reasonings, ctx.embedder_id);

  out.sc_raw = self_consistency(rationale_vecs, false);
  out.sc = cfg.clamp_negative ? std::max(0.0, out.sc_raw) : out.sc_raw;

  std::size_t canonical = rset.canonical_index;
  if (cfg.canonical == CanonicalPolicy::kMedoid)
    canonical = medoid_index(rset.samples, rationale_vecs);
  else if (rset.samples.at(canonical).degenerate)
    canonical = first_non_degenerate(rset.samples);
  const auto& sample = rset.samples.at(canonical);

  std::map<std::string, EmbeddingVector> def_vecs;
  {
    std::vector<std::string> codes, texts;
    for (const auto& code : sample.predicted_labels) {
      if (def_vecs.count(code) ||
          std::find(codes.begin(), codes.end(), code) != codes.end())
        continue;
      codes.push_back(code);
      texts.push_back(ctx.definitions.fetch(code).definition);
    }
    if (!texts.empty()) {
      auto vecs = ctx.embeddings.embed_many(texts, ctx.embedder_id);
      for (std::size_t i = 0; i < codes.size(); ++i)
        def_vecs.emplace(codes[i], std::move(vecs[i]));
    }
  }
  out.cea_raw = class_entailment_alignment(
      rationale_vecs[canonical], sample.predicted_labels, def_vecs, false);
  out.cea = cfg.clamp_negative ? std::max(0.0, out.cea_raw) : out.cea_raw;

  auto verdict = judge_rationale(doc.text, sample.predicted_labels,
                                 sample.reasoning, ctx.judge, ctx.gateway);
  out.judge_raw = verdict.raw_score;
  out.las = llm_agreement(out.judge_raw, cfg.las_mapping);
  out.cts = combined_trust(out.sc, out.cea, out.las, cfg.weights);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kChunk = 64;

}  // namespace

ScoreCorpusResult score_corpus(const std::vector<Document>& corpus,
                               const TrustConfig& cfg, ScoringContext& ctx,
                               const ScoreCorpusOptions& options) {
  cfg.validate();
  ScoreCorpusResult result;
  std::map<std::string, TrustScores> existing;
  if (std::filesystem::exists(options.scores_path))
    for (auto& s : load_trust_scores(options.scores_path))
      existing.insert_or_assign(s.doc_id, std::move(s));

  std::map<std::string, RationaleSet> rationales;
  if (options.rationales_path)
    rationales = load_rationales(*options.rationales_path);

  std::vector<const Document*> todo;
  for (const auto& d : corpus)
    if (!existing.count(d.id)) todo.push_back(&d);

  std::map<std::string, TrustScores> fresh;
  for (std::size_t begin = 0; begin < todo.size(); begin += kChunk) {
    const std::size_t end = std::min(todo.size(), begin + kChunk);
    const std::size_t n = end - begin;
    std::vector<std::optional<RationaleSet>> new_sets(n);
    std::vector<std::optional<TrustScores>> scored(n);
    std::vector<std::string> errors(n);
    parallel_for(n, options.parallelism, [&](std::size_t i) {
      const Document& doc = *todo[begin + i];
      try {
        auto it = rationales.find(doc.id);
        const RationaleSet* rset = nullptr;
        if (it != rationales.end() &&
            static_cast<int>(it->second.k()) == cfg.k) {
          rset = &it->second;
        } else {
          new_sets[i] = generate_rationales(doc, cfg.k, ctx.teacher, ctx.gateway);
          rset = &*new_sets[i];
        }
        scored[i] = score_document(doc, *rset, cfg, ctx);
      } catch (const std::exception& e) {
        errors[i] = doc.id + ": " + e.what();
      }
    });
    // Single writer, corpus order.
    for (std::size_t i = 0; i < n; ++i) {
      if (new_sets[i]) {
        ++result.generated_rationales;
        if (options.rationales_path)
          append_rationales(*options.rationales_path, *new_sets[i]);
      }
      if (scored[i]) {
        append_jsonl(options.scores_path, to_json(*scored[i]));
        fresh.emplace(scored[i]->doc_id, *scored[i]);
      } else {
        ++result.errors;
        result.error_messages.push_back(errors[i]);
      }
    }
  }

  for (const auto& d : corpus) {
    if (auto it = existing.find(d.id); it != existing.end()) {
      ++result.reused;
      result.scores.push_back(it->second);
    } else if (auto jt = fresh.find(d.id); jt != fresh.end()) {
      result.scores.push_back(jt->second);
    }
  }
  return result;
}

json to_json(const TrustScores& s) {
  return {{"doc_id", s.doc_id},       {"sc", s.sc},
          {"cea", s.cea},             {"las", s.las},
          {"cts", s.cts},             {"judge_raw", s.judge_raw},
          {"degenerate", s.degenerate}};
}

TrustScores trust_scores_from_json(const json& obj) {
  TrustScores s;
  s.doc_id = obj.at("doc_id").get<std::string>();
  s.sc = obj.at("sc").get<double>();
  s.cea = obj.at("cea").get<double>();
  s.las = obj.at("las").get<double>();
  s.cts = obj.at("cts").get<double>();
  s.judge_raw = obj.at("judge_raw").get<int>();
  s.degenerate = obj.value("degenerate", false);
  s.sc_raw = s.sc;
  s.cea_raw = s.cea;
  return s;
}

std::vector<TrustScores> load_trust_scores(const std::filesystem::path& path) {
  std::vector<TrustScores> out;
  std::set<std::string> seen;
  read_jsonl(path, [&](const json& obj, std::size_t lineno) {
    try {
      auto s = trust_scores_from_json(obj);
      if (!seen.insert(s.doc_id).second)
        throw ValidationError("duplicate trust score for " + s.doc_id);
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": bad trust score record: " + e.what());
    }
  });
  return out;
}

void write_trust_scores(const std::filesystem::path& path,
                        const std::vector<TrustScores>& scores) {
  std::vector<json> records;
  records.reserve(scores.size());
  for (const auto& s : scores) records.push_back(to_json(s));
  write_jsonl(path, records);
}

std::string to_string(LasMapping m) {
  switch (m) {
    case LasMapping::kCentered:
      return "centered";
    case LasMapping::kLiteral:
      return "literal";
    case LasMapping::kLinear:
      return "linear";
  }
  return "centered";
}

LasMapping parse_las_mapping(const std::string& s) {
  if (s == "centered") return LasMapping::kCentered;
  if (s == "literal") return LasMapping::kLiteral;
  if (s == "linear") return LasMapping::kLinear;
  throw ConfigError("unknown LAS mapping \"" + s +
                    "\" (expected centered, literal or linear)");
}

std::string to_string(CanonicalPolicy p) {
  return p == CanonicalPolicy::kMedoid ? "medoid" : "first";
}

CanonicalPolicy parse_canonical_policy(const std::string& s) {
  if (s == "first") return CanonicalPolicy::kFirst;
  if (s == "medoid") return CanonicalPolicy::kMedoid;
  throw ConfigError("unknown canonical policy \"" + s +
                    "\" (expected first or medoid)");
}

}  // namespace sfd
