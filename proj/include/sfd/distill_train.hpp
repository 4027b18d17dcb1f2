// include/sfd/distill_train.hpp

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

#ifndef SFD_DISTILL_TRAIN_HPP_
#define SFD_DISTILL_TRAIN_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/trust_metrics.hpp"
#include "sfd/util.hpp"

namespace sfd {

inline constexpr std::size_t kDefaultFeatureDim = std::size_t{1} << 18;
// Probabilities are clipped to [kProbClip, 1 - kProbClip] inside the loss.
inline constexpr double kProbClip = 1e-7;

// Sparse, L2-normalized hashed counts of word unigrams and adjacent bigrams.
struct FeatureVector {
  std::vector<std::uint32_t> indices;  // strictly increasing, < dim
  std::vector<double> values;
  std::size_t dim = 0;

  bool empty() const { return indices.empty(); }
  bool operator==(const FeatureVector&) const = default;
};

// Lowercases, splits on non-alphanumeric bytes, hashes unigrams and bigrams
// into `dim` buckets. Throws ValidationError unless dim is a power of two.
FeatureVector featurize(std::string_view text,
                        std::size_t dim = kDefaultFeatureDim);

// The ordered label universe; index i is the i-th code in sorted order.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> codes);

  std::size_t size() const { return codes_.size(); }
  const std::vector<std::string>& codes() const { return codes_; }
  const std::string& code(std::size_t i) const { return codes_.at(i); }
  std::optional<std::size_t> index_of(std::string_view code) const;

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> codes_;
};

// Union of catalog codes and every gold code in the corpus.
LabelSpace label_space_from(const LabelCatalog& catalog,
                            const std::vector<Document>& corpus);

enum class WeightingMode { kUnweighted, kSoft, kFiltered };
// Supervision for the student: gold labels, or the teacher's canonical
// predicted labels (distillation).
enum class TargetSource { kGold, kTeacher };

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 20;
  int batch_size = 64;
  std::uint64_t seed = 0;
  double tau = 0.0;
  WeightingMode mode = WeightingMode::kSoft;
  double decision_threshold = 0.5;
  std::size_t feature_dim = kDefaultFeatureDim;
  TargetSource targets = TargetSource::kGold;

  void validate() const;
  json to_json() const;
};

struct WeightedExample {
  std::string doc_id;
  FeatureVector features;
  std::vector<std::uint8_t> targets;  // one 0/1 entry per label
  double weight = 1.0;
};

// Per-document teacher labels, used when cfg.targets == kTeacher.
using TeacherLabels = std::map<std::string, std::vector<std::string>>;

TeacherLabels teacher_labels_from(const std::map<std::string, RationaleSet>& rationales);

// unweighted: weight 1. soft: weight = cts. filtered: documents with
// cts < tau are dropped, survivors weighted by cts. Labels outside the
// label space are ignored. Throws ValidationError naming the document when
// a score record (soft/filtered) or teacher label set is missing.
std::vector<WeightedExample> build_training_set(
    const std::vector<Document>& docs,
    const std::map<std::string, TrustScores>& scores, const TrainConfig& cfg,
    const LabelSpace& labels, const TeacherLabels* teacher_labels = nullptr);

// Linear per-label logistic classifier over hashed features.
class StudentModel {
 public:
  StudentModel() = default;
  StudentModel(LabelSpace labels, std::size_t feature_dim, std::uint64_t seed);

  const LabelSpace& labels() const { return labels_; }
  std::size_t num_labels() const { return labels_.size(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::uint64_t seed() const { return seed_; }

  // Row-major: weight(c, j) = weights()[c * feature_dim + j].
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  double logit(std::size_t label, const FeatureVector& x) const;
  std::vector<double> predict_proba(const FeatureVector& x) const;

  json config;  // echo of the training configuration

  bool operator==(const StudentModel& o) const {
    return labels_ == o.labels_ && feature_dim_ == o.feature_dim_ &&
           seed_ == o.seed_ && weights_ == o.weights_ && bias_ == o.bias_;
  }

 private:
  LabelSpace labels_;
  std::size_t feature_dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

// sum_i weight_i * sum_c BCE(p_ic, y_ic) with p clipped to
// [kProbClip, 1 - kProbClip].
double weighted_loss(const StudentModel& model,
                     std::span<const WeightedExample> batch);

// Dense gradient of weighted_loss with respect to (weights, bias). Terms
// whose probability sits outside the clip interval contribute zero.
struct ModelGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};
ModelGradient loss_gradient(const StudentModel& model,
                            std::span<const WeightedExample> batch);

// Mini-batch gradient descent on weighted_loss from a zero initialization.
// Zero-weight examples are dropped before shuffling. The shuffle is a
// Fisher-Yates pass driven by mt19937_64(cfg.seed). Throws ValidationError
// when no example has positive weight. When `epoch_losses` is set it
// receives the full-set loss after each epoch.
StudentModel train(const std::vector<WeightedExample>& examples,
                   const TrainConfig& cfg, const LabelSpace& labels,
                   std::vector<double>* epoch_losses = nullptr);

// {c : p_c >= threshold}, or the single argmax label when that is empty.
// Codes are returned in label-space order.
std::vector<std::string> predict(const StudentModel& model,
                                 const FeatureVector& x,
                                 double decision_threshold);
std::vector<std::string> predict(const StudentModel& model,
                                 const Document& doc,
                                 double decision_threshold);

struct LabelMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct EvalMetrics {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  double subset_accuracy = 0.0;
  std::size_t num_docs = 0;
  std::map<std::string, LabelMetrics> per_label;  // labels seen in gold or predictions

  json to_json() const;
  bool operator==(const EvalMetrics& o) const;
};

using LabelSets = std::map<std::string, std::vector<std::string>>;

// Micro-F1 over pooled decisions; macro-F1 averages per-label F1 over labels
// present in the gold sets (F1 = 0 when precision + recall = 0); subset
// accuracy counts exact set matches. Throws ValidationError when the id sets
// differ or are empty.
EvalMetrics evaluate(const LabelSets& predictions, const LabelSets& golds);

LabelSets gold_label_sets(const std::vector<Document>& docs);
LabelSets predict_all(const StudentModel& model,
                      const std::vector<Document>& docs,
                      double decision_threshold);

struct SweepRow {
  double tau = 0.0;
  std::size_t retained = 0;
  bool feasible = false;
  EvalMetrics metrics;  // validation split; empty when infeasible
};

struct SweepResult {
  double tau_star = 0.0;
  std::vector<SweepRow> rows;  // grid order

  json to_json() const;
};

// Trains one filtered-mode student per tau (shared seed), evaluates on
// `val_docs` against gold labels and returns the tau maximizing validation
// micro-F1, ties going to the larger tau. Rows that empty the training set
// are infeasible. Throws ValidationError for an empty or out-of-range grid
// and when every value is infeasible.
SweepResult sweep_threshold(const std::vector<Document>& train_docs,
                            const std::vector<Document>& val_docs,
                            const std::map<std::string, TrustScores>& scores,
                            const std::vector<double>& grid,
                            const TrainConfig& cfg, const LabelSpace& labels,
                            const TeacherLabels* teacher_labels = nullptr,
                            int parallelism = 1);

// manifest.jsonl: {"doc_id", "weight", "included", "tau", "mode"} for every
// training document, in input order. Excluded documents carry weight 0.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<Document>& train_docs,
                    const std::vector<WeightedExample>& examples,
                    const TrainConfig& cfg);

// Binary model container, little-endian:
//   magic "SFDSTUD1" | u32 version=1 | u64 feature_dim | u32 num_labels |
//   u64 seed | num_labels x (u32 len, code bytes) | u32 len, config JSON |
//   f64 bias[num_labels] | f64 weights[num_labels * feature_dim]
void save_model(const std::filesystem::path& path, const StudentModel& model);
StudentModel load_model(const std::filesystem::path& path);

std::map<std::string, TrustScores> index_scores(const std::vector<TrustScores>& scores);

std::string to_string(WeightingMode m);
WeightingMode parse_weighting_mode(const std::string& s);
std::string to_string(TargetSource t);
TargetSource parse_target_source(const std::string& s);

}  // namespace sfd

#endif  // SFD_DISTILL_TRAIN_HPP_
