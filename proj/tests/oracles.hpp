// tests/oracles.hpp

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

#ifndef SFD_TESTS_ORACLES_HPP_
#define SFD_TESTS_ORACLES_HPP_

// Reference implementations written independently of the library code, used
// by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/distill_train.hpp"

namespace sfd::oracle {

// Pearson via the raw-moment formula in long double.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += (long double)x[i] * x[i];
    syy += (long double)y[i] * y[i];
    sxy += (long double)x[i] * y[i];
  }
  const long double num = n * sxy - sx * sy;
  const long double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
  return static_cast<double>(num / den);
}

// Krippendorff's alpha by explicit enumeration of value pairs:
//   D_o = (1/n) sum_u 1/(m_u - 1) sum_{i != j in u} d(v_i, v_j)
//   D_e = 1/(n(n-1)) sum_{i != j over all pairable values} d(v_i, v_j)
// Returns nullopt when nothing is pairable.
inline std::optional<double> alpha(const std::vector<AnnotationRecord>& records,
                                   std::optional<Criterion> criterion, bool nominal = false) {
  std::map<std::pair<std::string, int>, std::vector<double>> units;
  const Criterion all[] = {Criterion::kLogicalConsistency, Criterion::kTaskAlignment,
                           Criterion::kPlausibility};
  for (const auto& r : records) {
    if (criterion) {
      units[{r.doc_id, -1}].push_back(r.score(*criterion));
    } else {
      for (auto c : all) units[{r.doc_id, int(c)}].push_back(r.score(c));
    }
  }
  auto d = [nominal](double a, double b) { return nominal ? (a == b ? 0.0 : 1.0) : (a - b) * (a - b); };
  std::vector<double> pooled;
  long double within = 0;
  for (const auto& [u, v] : units) {
    if (v.size() < 2) continue;
    long double s = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j)
        if (i != j) s += d(v[i], v[j]);
    within += s / (v.size() - 1);
    pooled.insert(pooled.end(), v.begin(), v.end());
  }
  const long double n = pooled.size();
  if (n == 0) return std::nullopt;
  long double total = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i)
    for (std::size_t j = 0; j < pooled.size(); ++j)
      if (i != j) total += d(pooled[i], pooled[j]);
  if (total == 0) return 1.0;
  const long double d_o = within / n;
  const long double d_e = total / (n * (n - 1));
  return static_cast<double>(1.0L - d_o / d_e);
}

// Weighted clipped BCE summed over a batch, with a dense dot product.
inline double loss(const StudentModel& m, const std::vector<WeightedExample>& batch) {
  const std::size_t F = m.feature_dim();
  long double total = 0;
  for (const auto& ex : batch) {
    std::vector<double> dense(F, 0.0);
    for (std::size_t n = 0; n < ex.features.indices.size(); ++n)
      dense[ex.features.indices[n]] = ex.features.values[n];
    for (std::size_t c = 0; c < m.num_labels(); ++c) {
      long double z = m.bias()[c];
      for (std::size_t j = 0; j < F; ++j) z += (long double)m.weights()[c * F + j] * dense[j];
      long double p = 1.0L / (1.0L + std::exp(-z));
      p = std::clamp(p, 1e-7L, 1.0L - 1e-7L);
      const long double y = ex.targets[c];
      total += ex.weight * -(y * std::log(p) + (1 - y) * std::log(1 - p));
    }
  }
  return static_cast<double>(total);
}

// Maximum relative error between the analytic gradient and central
// differences of weighted_loss (step h) over every parameter.
// Components where both magnitudes are below `floor` are compared on the
// floor scale.
inline double gradient_check(const StudentModel& model,
                             const std::vector<WeightedExample>& batch, double h = 1e-5,
                             double floor = 1e-6) {
  const auto g = loss_gradient(model, batch);
  StudentModel m = model;
  double worst = 0.0;
  auto rel = [floor](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
  };
  for (std::size_t i = 0; i < m.weights().size(); ++i) {
    const double w0 = m.weights()[i];
    m.weights()[i] = w0 + h;
    const double up = weighted_loss(m, batch);
    m.weights()[i] = w0 - h;
    const double down = weighted_loss(m, batch);
    m.weights()[i] = w0;
    worst = std::max(worst, rel(g.weights[i], (up - down) / (2 * h)));
  }
  for (std::size_t c = 0; c < m.bias().size(); ++c) {
    const double b0 = m.bias()[c];
    m.bias()[c] = b0 + h;
    const double up = weighted_loss(m, batch);
    m.bias()[c] = b0 - h;
    const double down = weighted_loss(m, batch);
    m.bias()[c] = b0;
    worst = std::max(worst, rel(g.bias[c], (up - down) / (2 * h)));
  }
  return worst;
}

// Random small model and batch with logits well inside the clip range.
struct GradientDraw {
  StudentModel model;
  std::vector<WeightedExample> batch;
};

inline GradientDraw random_gradient_draw(std::mt19937_64& rng) {
  const std::size_t dim = std::size_t{1} << (2 + rng() % 4);  // 4..32
  const std::size_t num_labels = 1 + rng() % 4;
  std::vector<std::string> codes;
  for (std::size_t c = 0; c < num_labels; ++c) codes.push_back("A0" + std::to_string(c) + "B");
  GradientDraw d{StudentModel(LabelSpace(codes), dim, rng()), {}};
  std::normal_distribution<double> n(0.0, 0.7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& w : d.model.weights()) w = n(rng);
  for (auto& b : d.model.bias()) b = n(rng);
  const std::size_t batch = 1 + rng() % 8;
  for (std::size_t i = 0; i < batch; ++i) {
    WeightedExample ex;
    ex.doc_id = "x" + std::to_string(i);
    ex.features.dim = dim;
    std::set<std::uint32_t> idx;
    const std::size_t nnz = 1 + rng() % dim;
    while (idx.size() < nnz) idx.insert(static_cast<std::uint32_t>(rng() % dim));
    for (auto j : idx) {
      ex.features.indices.push_back(j);
      ex.features.values.push_back(n(rng));
    }
    for (std::size_t c = 0; c < num_labels; ++c) ex.targets.push_back(rng() % 2);
    ex.weight = u(rng);
    d.batch.push_back(std::move(ex));
  }
  return d;
}

// Multi-label metrics by counting every (document, label) decision.
struct Counts {
  double micro_f1, macro_f1, subset;
};

inline Counts metrics(const std::map<std::string, std::vector<std::string>>& pred,
                      const std::map<std::string, std::vector<std::string>>& gold) {
  std::set<std::string> gold_labels, all_labels;
  for (const auto& [id, g] : gold) gold_labels.insert(g.begin(), g.end());
  all_labels = gold_labels;
  for (const auto& [id, p] : pred) all_labels.insert(p.begin(), p.end());
  double tp = 0, fp = 0, fn = 0, exact = 0, macro = 0;
  std::map<std::string, std::array<double, 3>> per;
  for (const auto& [id, g] : gold) {
    const auto& p = pred.at(id);
    bool same = true;
    for (const auto& l : all_labels) {
      const bool in_g = std::count(g.begin(), g.end(), l) > 0;
      const bool in_p = std::count(p.begin(), p.end(), l) > 0;
      if (in_g && in_p) ++tp, ++per[l][0];
      if (!in_g && in_p) ++fp, ++per[l][1], same = false;
      if (in_g && !in_p) ++fn, ++per[l][2], same = false;
    }
    exact += same;
  }
  for (const auto& l : gold_labels) {
    const auto& c = per[l];
    const double denom = 2 * c[0] + c[1] + c[2];
    macro += denom > 0 ? 2 * c[0] / denom : 0.0;
  }
  return {2 * tp / (2 * tp + fp + fn), macro / gold_labels.size(), exact / gold.size()};
}

}  // namespace sfd::oracle

#endif  // SFD_TESTS_ORACLES_HPP_
