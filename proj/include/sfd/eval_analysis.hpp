// include/sfd/eval_analysis.hpp

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

#ifndef SFD_EVAL_ANALYSIS_HPP_
#define SFD_EVAL_ANALYSIS_HPP_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/distill_train.hpp"
#include "sfd/trust_metrics.hpp"

namespace sfd {

struct HumanScore {
  std::string doc_id;
  double value = 0.0;  // 1-5 scale
};

// A subset of {SC, CEA, LAS}; inactive metrics get weight 0 and the active
// ones share the weight equally.
struct AblationSpec {
  std::string name;
  std::array<bool, 3> active = {true, true, true};

  TrustWeights weights() const;
};

// SC only, CEA only, LAS only, w/o LAS, w/o CEA, w/o SC, CTS (full).
std::vector<AblationSpec> default_ablation_specs();
AblationSpec full_spec();

// Sample Pearson correlation. Throws ValidationError for unequal lengths,
// fewer than two points or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

enum class AlphaMetric { kInterval, kNominal };

// Krippendorff's alpha from the coincidence matrix. Units are documents for
// a single criterion, or (document, criterion) pairs when `criterion` is
// empty (pooled). Units with fewer than two values are not pairable.
// Returns 1.0 when every pairable value is identical; throws
// ValidationError when no unit is pairable.
double krippendorff_alpha(const std::vector<AnnotationRecord>& records,
                          std::optional<Criterion> criterion,
                          AlphaMetric metric = AlphaMetric::kInterval);

// Per document: mean over annotators of each annotator's criterion mean.
// Sorted by doc_id.
std::vector<HumanScore> aggregate_human_scores(
    const std::vector<AnnotationRecord>& records);

// Combined score of one variant: combined_trust with the spec's weights.
double variant_score(const TrustScores& s, const AblationSpec& spec);

// Pearson between the variant's recomputed score and the human value over
// the shared doc ids.
double correlate_trust(const std::vector<TrustScores>& scores,
                       const std::vector<HumanScore>& human,
                       const AblationSpec& spec);

struct CorrelationRow {
  std::string name;
  double rho = 0.0;
  double delta = 0.0;      // rho - rho(full)
  double rel_delta = 0.0;  // delta / rho(full), as a fraction
};

struct CorrelationTable {
  LasMapping mapping = LasMapping::kCentered;
  std::vector<CorrelationRow> rows;
};

// Rows for every spec with LAS recomputed from judge_raw under `mapping`.
// Deltas are taken against the row whose spec activates all three metrics.
CorrelationTable correlation_table(const std::vector<TrustScores>& scores,
                                   const std::vector<HumanScore>& human,
                                   const std::vector<AblationSpec>& specs,
                                   LasMapping mapping);

struct AblationRow {
  std::string name;
  bool feasible = false;
  std::size_t retained = 0;
  EvalMetrics metrics;
  std::string error;
};

// For every spec: recompute cts with the spec's weights, then
// build_training_set + train (cfg's mode and tau) + evaluate on test_docs.
// Training failures become infeasible rows.
std::vector<AblationRow> run_ablations(
    const std::vector<Document>& train_docs,
    const std::vector<Document>& test_docs,
    const std::vector<TrustScores>& scores, const TrainConfig& cfg,
    const LabelSpace& labels, const std::vector<AblationSpec>& specs,
    const TeacherLabels* teacher_labels = nullptr, int parallelism = 1);

struct AgreementSummary {
  double pooled = 0.0;
  std::map<std::string, double> per_criterion;
  std::size_t num_records = 0;
};

AgreementSummary agreement_summary(const std::vector<AnnotationRecord>& records,
                                   AlphaMetric metric = AlphaMetric::kInterval);

struct ReportInputs {
  std::optional<SweepResult> sweep;
  std::optional<std::vector<AblationRow>> ablations;
  std::vector<CorrelationTable> correlations;
  std::optional<AgreementSummary> agreement;
  std::optional<EvalMetrics> test_metrics;
  std::optional<EvalMetrics> baseline_metrics;  // unweighted student, test split

  bool empty() const;
};

// Writes report.md and report.json into `dir`, containing only the sections
// that have data. Output is a pure function of the inputs. Throws
// ValidationError on empty inputs and Error when the directory is not
// writable.
void emit_report(const ReportInputs& inputs, const std::filesystem::path& dir);

json report_json(const ReportInputs& inputs);
// Inverse of report_json; objects may hold any subset of the sections.
ReportInputs report_inputs_from_json(const json& obj);
EvalMetrics eval_metrics_from_json(const json& obj);
std::string report_markdown(const ReportInputs& inputs);

std::string to_string(Criterion c);

}  // namespace sfd

#endif  // SFD_EVAL_ANALYSIS_HPP_
