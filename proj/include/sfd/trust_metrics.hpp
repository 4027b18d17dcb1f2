// include/sfd/trust_metrics.hpp

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

#ifndef SFD_TRUST_METRICS_HPP_
#define SFD_TRUST_METRICS_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/embeddings.hpp"
#include "sfd/llm_gateway.hpp"
#include "sfd/rationale.hpp"
#include "sfd/util.hpp"

namespace sfd {

// How the judge's 1-5 score is squashed into [0, 1].
//   centered: sigmoid(s - 3)   literal: sigmoid(s)   linear: (s - 1) / 4
enum class LasMapping { kCentered, kLiteral, kLinear };

// Which sample supplies the single rationale for alignment and judging.
enum class CanonicalPolicy { kFirst, kMedoid };

// Weights over (SC, CEA, LAS).
using TrustWeights = std::array<double, 3>;
inline constexpr TrustWeights kEqualWeights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

struct TrustConfig {
  TrustWeights weights = kEqualWeights;
  LasMapping las_mapping = LasMapping::kCentered;
  int k = 3;
  bool clamp_negative = true;
  CanonicalPolicy canonical = CanonicalPolicy::kFirst;

  // Throws ValidationError: weights non-negative summing to 1 (1e-9), k >= 2.
  void validate() const;
};

struct TrustScores {
  std::string doc_id;
  double sc = 0.0;
  double cea = 0.0;
  double las = 0.0;
  double cts = 0.0;
  int judge_raw = 1;
  bool degenerate = false;
  // Unclamped values, not serialized.
  double sc_raw = 0.0;
  double cea_raw = 0.0;
};

double sigmoid(double z);

// Mean pairwise cosine over all i < j; clamp keeps max(0, mean). Throws
// ValidationError for fewer than two embeddings.
double self_consistency(std::span<const EmbeddingVector> rationale_embeddings,
                        bool clamp);

// Mean cosine between the rationale and each definition; 0 for an empty
// definition list.
double class_entailment_alignment(
    const EmbeddingVector& rationale_embedding,
    std::span<const EmbeddingVector> definition_embeddings, bool clamp);

// Looks up each predicted code in `definition_embeddings` first; a missing
// code throws ValidationError naming it.
double class_entailment_alignment(
    const EmbeddingVector& rationale_embedding,
    const std::vector<std::string>& predicted_labels,
    const std::map<std::string, EmbeddingVector>& definition_embeddings,
    bool clamp);

// Throws ValidationError for judge_raw outside 1-5.
double llm_agreement(int judge_raw, LasMapping mapping);

double combined_trust(double sc, double cea, double las,
                      const TrustWeights& weights);

// Non-degenerate sample maximizing mean cosine to the other samples; ties go
// to the lower index. Falls back to first_non_degenerate.
std::size_t medoid_index(const std::vector<RationaleSample>& samples,
                         std::span<const EmbeddingVector> embeddings);

// Everything score_document needs from the outside world.
struct ScoringContext {
  LlmGateway& gateway;
  EmbeddingService& embeddings;
  DefinitionResolver& definitions;
  std::string embedder_id = "mock";
  ModelEndpoint teacher;
  ModelEndpoint judge;
};

// SC over every sample's reasoning; CEA and LAS over the canonical sample.
// A set whose samples are all degenerate scores sc = cea = 0 and
// las = llm_agreement(1, mapping) without calling the judge.
TrustScores score_document(const Document& doc, const RationaleSet& rset,
                           const TrustConfig& cfg, ScoringContext& ctx);

struct ScoreCorpusOptions {
  std::filesystem::path scores_path;                    // trust_scores.jsonl
  std::optional<std::filesystem::path> rationales_path;  // rationales.jsonl
  int parallelism = 1;
};

struct ScoreCorpusResult {
  std::vector<TrustScores> scores;  // corpus order, existing records included
  std::size_t reused = 0;           // records already present on disk
  std::size_t generated_rationales = 0;
  std::size_t errors = 0;
  std::vector<std::string> error_messages;
};

// Scores every document, generating rationales for those without a stored
// set. Documents that already have a score record are skipped, so a rerun
// over completed outputs makes no backend calls. Per-document failures are
// counted and skipped.
ScoreCorpusResult score_corpus(const std::vector<Document>& corpus,
                               const TrustConfig& cfg, ScoringContext& ctx,
                               const ScoreCorpusOptions& options);

// trust_scores.jsonl: {"doc_id", "sc", "cea", "las", "cts", "judge_raw",
// "degenerate"} per line.
json to_json(const TrustScores& s);
TrustScores trust_scores_from_json(const json& obj);
std::vector<TrustScores> load_trust_scores(const std::filesystem::path& path);
void write_trust_scores(const std::filesystem::path& path,
                        const std::vector<TrustScores>& scores);

std::string to_string(LasMapping m);
LasMapping parse_las_mapping(const std::string& s);
std::string to_string(CanonicalPolicy p);
CanonicalPolicy parse_canonical_policy(const std::string& s);

}  // namespace sfd

#endif  // SFD_TRUST_METRICS_HPP_
