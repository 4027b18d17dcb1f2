// src/eval_analysis.cpp

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

#include "sfd/eval_analysis.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

namespace {

constexpr Criterion kCriteria[] = {Criterion::kLogicalConsistency,
                                   Criterion::kTaskAlignment,
                                   Criterion::kPlausibility};

}  // namespace

std::string to_string(Criterion c) {
  switch (c) {
    case Criterion::kLogicalConsistency:
      return "logical_consistency";
    case Criterion::kTaskAlignment:
      return "task_alignment";
    case Criterion::kPlausibility:
      return "plausibility";
  }
  return "";
}

TrustWeights AblationSpec::weights() const {
  const int n = int(active[0]) + int(active[1]) + int(active[2]);
  if (n == 0) throw ValidationError("ablation " + name + " has no active metric");
  TrustWeights w{};
  for (std::size_t i = 0; i < 3; ++i) w[i] = active[i] ? 1.0 / n : 0.0;
  return w;
}

std::vector<AblationSpec> default_ablation_specs() {
  return {{"SC only", {true, false, false}},   {"CEA only", {false, true, false}},
          {"LAS only", {false, false, true}},  {"w/o LAS", {true, true, false}},
          {"w/o CEA", {true, false, true}},    {"w/o SC", {false, true, true}},
          full_spec()};
}

AblationSpec full_spec() { return {"CTS", {true, true, true}}; }

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw ValidationError("pearson: lists differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("pearson: need at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw ValidationError("pearson: zero variance, correlation undefined");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double krippendorff_alpha(const std::vector<AnnotationRecord>& records,
                          std::optional<Criterion> criterion,
                          AlphaMetric metric) {
  // unit -> values
  std::map<std::pair<std::string, int>, std::vector<int>> units;
  for (const auto& r : records) {
    if (criterion) {
      units[{r.doc_id, 0}].push_back(r.score(*criterion));
    } else {
      for (auto c : kCriteria)
        units[{r.doc_id, static_cast<int>(c)}].push_back(r.score(c));
    }
  }
  // Coincidence matrix over the observed values.
  std::map<std::pair<int, int>, double> o;
  std::map<int, double> n_c;
  double n = 0.0;
  for (const auto& [unit, values] : units) {
    const std::size_t m = values.size();
    if (m < 2) continue;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) o[{values[i], values[j]}] += 1.0 / double(m - 1);
    for (int v : values) n_c[v] += 1.0;
    n += double(m);
  }
  if (n == 0.0)
    throw ValidationError("krippendorff_alpha: no item was rated by two or more annotators");

  auto delta = [metric](int a, int b) {
    if (metric == AlphaMetric::kNominal) return a == b ? 0.0 : 1.0;
    const double d = a - b;
    return d * d;
  };
  double observed = 0.0;
  for (const auto& [cell, count] : o) observed += count * delta(cell.first, cell.second);
  double expected = 0.0;
  for (const auto& [c, nc] : n_c)
    for (const auto& [k, nk] : n_c) expected += nc * nk * delta(c, k);
  if (expected == 0.0) return 1.0;
  return 1.0 - (n - 1.0) * observed / expected;
}

std::vector<HumanScore> aggregate_human_scores(
    const std::vector<AnnotationRecord>& records) {
  std::map<std::string, std::map<std::string, double>> per_doc;
  for (const auto& r : records)
    per_doc[r.doc_id][r.annotator_id] =
        (r.logical_consistency + r.task_alignment + r.plausibility) / 3.0;
  std::vector<HumanScore> out;
  out.reserve(per_doc.size());
  for (const auto& [doc, annotators] : per_doc) {
    double sum = 0.0;
    for (const auto& [a, mean] : annotators) sum += mean;
    out.push_back({doc, sum / double(annotators.size())});
  }
  return out;
}

double variant_score(const TrustScores& s, const AblationSpec& spec) {
  return combined_trust(s.sc, s.cea, s.las, spec.weights());
}

namespace {

struct Paired {
  std::vector<const TrustScores*> scores;
  std::vector<double> human;
};

Paired pair_up(const std::vector<TrustScores>& scores,
               const std::vector<HumanScore>& human) {
  std::map<std::string, double> h;
  for (const auto& x : human) h[x.doc_id] = x.value;
  std::vector<const TrustScores*> sorted;
  for (const auto& s : scores) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(),
            [](auto* a, auto* b) { return a->doc_id < b->doc_id; });
  Paired p;
  for (const auto* s : sorted)
    if (auto it = h.find(s->doc_id); it != h.end()) {
      p.scores.push_back(s);
      p.human.push_back(it->second);
    }
  if (p.scores.size() < 2)
    throw ValidationError("fewer than two documents have both trust and human scores");
  return p;
}

}  // namespace

double correlate_trust(const std::vector<TrustScores>& scores,
                       const std::vector<HumanScore>& human,
                       const AblationSpec& spec) {
  const auto p = pair_up(scores, human);
  std::vector<double> x;
  x.reserve(p.scores.size());
  for (const auto* s : p.scores) x.push_back(variant_score(*s, spec));
  return pearson(x, p.human);
}

CorrelationTable correlation_table(const std::vector<TrustScores>& scores,
                                   const std::vector<HumanScore>& human,
                                   const std::vector<AblationSpec>& specs,
                                   LasMapping mapping) {
  std::vector<TrustScores> remapped = scores;
  for (auto& s : remapped) s.las = llm_agreement(s.judge_raw, mapping);
  CorrelationTable table;
  table.mapping = mapping;
  std::optional<double> full;
  for (const auto& spec : specs) {
    CorrelationRow row;
    row.name = spec.name;
    row.rho = correlate_trust(remapped, human, spec);
    if (spec.active == std::array<bool, 3>{true, true, true}) full = row.rho;
    table.rows.push_back(row);
  }
  if (full && *full != 0.0)
    for (auto& row : table.rows) {
      row.delta = row.rho - *full;
      row.rel_delta = row.delta / *full;
    }
  return table;
}

std::vector<AblationRow> run_ablations(
    const std::vector<Document>& train_docs,
    const std::vector<Document>& test_docs,
    const std::vector<TrustScores>& scores, const TrainConfig& cfg,
    const LabelSpace& labels, const std::vector<AblationSpec>& specs,
    const TeacherLabels* teacher_labels, int parallelism) {
  const auto golds = gold_label_sets(test_docs);
  std::vector<AblationRow> rows(specs.size());
  parallel_for(specs.size(), parallelism, [&](std::size_t i) {
    const auto& spec = specs[i];
    AblationRow& row = rows[i];
    row.name = spec.name;
    try {
      std::map<std::string, TrustScores> variant;
      for (const auto& s : scores) {
        TrustScores v = s;
        v.cts = variant_score(s, spec);
        variant.insert_or_assign(v.doc_id, v);
      }
      auto examples = build_training_set(train_docs, variant, cfg, labels, teacher_labels);
      row.retained = static_cast<std::size_t>(std::count_if(
          examples.begin(), examples.end(),
          [](const WeightedExample& e) { return e.weight > 0.0; }));
      auto model = train(examples, cfg, labels);
      row.metrics = evaluate(predict_all(model, test_docs, cfg.decision_threshold), golds);
      row.feasible = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  return rows;
}

AgreementSummary agreement_summary(const std::vector<AnnotationRecord>& records,
                                   AlphaMetric metric) {
  AgreementSummary s;
  s.num_records = records.size();
  s.pooled = krippendorff_alpha(records, std::nullopt, metric);
  for (auto c : kCriteria) s.per_criterion[to_string(c)] = krippendorff_alpha(records, c, metric);
  return s;
}

// ---------------------------------------------------------------------------

bool ReportInputs::empty() const {
  return !sweep && !ablations && correlations.empty() && !agreement &&
         !test_metrics && !baseline_metrics;
}

json report_json(const ReportInputs& in) {
  json out = json::object();
  if (in.test_metrics) out["test_metrics"] = in.test_metrics->to_json();
  if (in.baseline_metrics) out["baseline_metrics"] = in.baseline_metrics->to_json();
  if (in.sweep) out["sweep"] = in.sweep->to_json();
  if (in.ablations) {
    json rows = json::array();
    for (const auto& r : *in.ablations) {
      json row = {{"name", r.name}, {"feasible", r.feasible}, {"retained", r.retained}};
      if (r.feasible) {
        row["micro_f1"] = r.metrics.micro_f1;
        row["macro_f1"] = r.metrics.macro_f1;
        row["subset_accuracy"] = r.metrics.subset_accuracy;
      } else {
        row["error"] = r.error;
      }
      rows.push_back(std::move(row));
    }
    out["ablations"] = rows;
  }
  if (!in.correlations.empty()) {
    json tables = json::array();
    for (const auto& t : in.correlations) {
      json rows = json::array();
      for (const auto& r : t.rows)
        rows.push_back({{"name", r.name}, {"rho", r.rho}, {"delta", r.delta},
                        {"rel_delta", r.rel_delta}});
      tables.push_back({{"las_mapping", to_string(t.mapping)}, {"rows", rows}});
    }
    out["correlations"] = tables;
  }
  if (in.agreement) {
    out["agreement"] = {{"metric", "interval"},
                        {"pooled_alpha", in.agreement->pooled},
                        {"per_criterion_alpha", in.agreement->per_criterion},
                        {"num_records", in.agreement->num_records}};
  }
  return out;
}

EvalMetrics eval_metrics_from_json(const json& obj) {
  EvalMetrics m;
  m.micro_f1 = obj.at("micro_f1").get<double>();
  m.macro_f1 = obj.at("macro_f1").get<double>();
  m.subset_accuracy = obj.at("subset_accuracy").get<double>();
  m.num_docs = obj.value("num_docs", std::size_t{0});
  if (obj.contains("per_label"))
    for (const auto& [code, l] : obj.at("per_label").items()) {
      LabelMetrics lm;
      lm.tp = l.at("tp").get<std::size_t>();
      lm.fp = l.at("fp").get<std::size_t>();
      lm.fn = l.at("fn").get<std::size_t>();
      lm.precision = l.at("precision").get<double>();
      lm.recall = l.at("recall").get<double>();
      lm.f1 = l.at("f1").get<double>();
      m.per_label.emplace(code, lm);
    }
  return m;
}

ReportInputs report_inputs_from_json(const json& obj) {
  ReportInputs in;
  try {
    if (obj.contains("test_metrics"))
      in.test_metrics = eval_metrics_from_json(obj.at("test_metrics"));
    if (obj.contains("baseline_metrics"))
      in.baseline_metrics = eval_metrics_from_json(obj.at("baseline_metrics"));
    if (obj.contains("sweep")) {
      SweepResult sw;
      sw.tau_star = obj.at("sweep").at("tau_star").get<double>();
      for (const auto& r : obj.at("sweep").at("rows")) {
        SweepRow row;
        row.tau = r.at("tau").get<double>();
        row.retained = r.at("retained").get<std::size_t>();
        row.feasible = r.at("feasible").get<bool>();
        if (row.feasible) row.metrics = eval_metrics_from_json(r);
        sw.rows.push_back(std::move(row));
      }
      in.sweep = std::move(sw);
    }
    if (obj.contains("ablations")) {
      std::vector<AblationRow> rows;
      for (const auto& r : obj.at("ablations")) {
        AblationRow row;
        row.name = r.at("name").get<std::string>();
        row.feasible = r.at("feasible").get<bool>();
        row.retained = r.at("retained").get<std::size_t>();
        if (row.feasible)
          row.metrics = eval_metrics_from_json(r);
        else
          row.error = r.value("error", std::string());
        rows.push_back(std::move(row));
      }
      in.ablations = std::move(rows);
    }
    if (obj.contains("correlations"))
      for (const auto& t : obj.at("correlations")) {
        CorrelationTable table;
        table.mapping = parse_las_mapping(t.at("las_mapping").get<std::string>());
        for (const auto& r : t.at("rows"))
          table.rows.push_back({r.at("name").get<std::string>(), r.at("rho").get<double>(),
                                r.at("delta").get<double>(), r.at("rel_delta").get<double>()});
        in.correlations.push_back(std::move(table));
      }
    if (obj.contains("agreement")) {
      const auto& a = obj.at("agreement");
      AgreementSummary s;
      s.pooled = a.at("pooled_alpha").get<double>();
      s.per_criterion = a.at("per_criterion_alpha").get<std::map<std::string, double>>();
      s.num_records = a.at("num_records").get<std::size_t>();
      in.agreement = std::move(s);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report data: ") + e.what());
  }
  return in;
}

namespace {

void metrics_table(std::string& md, const char* title, const EvalMetrics& m) {
  md += fmt::format("## {}\n\n", title);
  md += "| Documents | F1-Micro | F1-Macro | Subset Acc. |\n";
  md += "|---:|---:|---:|---:|\n";
  md += fmt::format("| {} | {:.4f} | {:.4f} | {:.4f} |\n\n", m.num_docs,
                    m.micro_f1, m.macro_f1, m.subset_accuracy);
}

}  // namespace

std::string report_markdown(const ReportInputs& in) {
  std::string md = "# Trust-aware distillation report\n\n";
  if (in.test_metrics) metrics_table(md, "Test metrics (trust-filtered student)", *in.test_metrics);
  if (in.baseline_metrics) metrics_table(md, "Test metrics (unweighted baseline)", *in.baseline_metrics);
  if (in.sweep) {
    md += "## Threshold sweep (validation)\n\n";
    md += "| Threshold | Retained | F1-Micro | F1-Macro | Subset Acc. |\n";
    md += "|---:|---:|---:|---:|---:|\n";
    for (const auto& r : in.sweep->rows) {
      if (r.feasible)
        md += fmt::format("| {:.2f} | {} | {:.4f} | {:.4f} | {:.4f} |\n", r.tau,
                          r.retained, r.metrics.micro_f1, r.metrics.macro_f1,
                          r.metrics.subset_accuracy);
      else
        md += fmt::format("| {:.2f} | 0 | infeasible | | |\n", r.tau);
    }
    md += fmt::format("\nSelected threshold: {:.2f} (validation micro-F1)\n\n",
                      in.sweep->tau_star);
  }
  if (in.ablations) {
    md += "## Trust-metric ablations (test)\n\n";
    md += "| Variant | Retained | F1-Micro | F1-Macro | Subset Acc. |\n";
    md += "|---|---:|---:|---:|---:|\n";
    for (const auto& r : *in.ablations) {
      if (r.feasible)
        md += fmt::format("| {} | {} | {:.4f} | {:.4f} | {:.4f} |\n", r.name,
                          r.retained, r.metrics.micro_f1, r.metrics.macro_f1,
                          r.metrics.subset_accuracy);
      else
        md += fmt::format("| {} | 0 | infeasible | | |\n", r.name);
    }
    md += "\n";
  }
  for (const auto& t : in.correlations) {
    md += fmt::format("## Correlation with human judgments (LAS mapping: {})\n\n",
                      to_string(t.mapping));
    md += "| Metric | Pearson | Delta | Rel. Delta |\n";
    md += "|---|---:|---:|---:|\n";
    for (const auto& r : t.rows)
      md += fmt::format("| {} | {:.3f} | {:+.3f} | {:+.2f}% |\n", r.name, r.rho,
                        r.delta, 100.0 * r.rel_delta);
    md += "\n";
  }
  if (in.agreement) {
    md += "## Inter-annotator agreement (Krippendorff's alpha, interval)\n\n";
    md += "| Scope | Alpha |\n|---|---:|\n";
    md += fmt::format("| pooled | {:.3f} |\n", in.agreement->pooled);
    for (const auto& [c, a] : in.agreement->per_criterion)
      md += fmt::format("| {} | {:.3f} |\n", c, a);
    md += fmt::format("\n{} annotation records.\n\n", in.agreement->num_records);
  }
  return md;
}

void emit_report(const ReportInputs& inputs, const std::filesystem::path& dir) {
  if (inputs.empty()) throw ValidationError("no results to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create report directory " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / "report.md", report_markdown(inputs));
  write_file_atomic(dir / "report.json", report_json(inputs).dump(2) + "\n");
}

}  // namespace sfd
