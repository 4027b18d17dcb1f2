// src/distill_train.cpp

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

#include "sfd/distill_train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

#include "sfd/error.hpp"

namespace sfd {

// ---------------------------------------------------------------------------
// Features

FeatureVector featurize(std::string_view text, std::size_t dim) {
  if (dim == 0 || (dim & (dim - 1)) != 0)
    throw ValidationError("feature dimension must be a power of two");
  if (dim > (std::size_t{1} << 32))
    throw ValidationError("feature dimension too large");

  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));

  const std::uint64_t mask = dim - 1;
  std::map<std::uint32_t, double> counts;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    counts[static_cast<std::uint32_t>(fnv1a64("u:" + tokens[i]) & mask)] += 1.0;
    if (i + 1 < tokens.size())
      counts[static_cast<std::uint32_t>(
          fnv1a64("b:" + tokens[i] + " " + tokens[i + 1]) & mask)] += 1.0;
  }

  FeatureVector fv;
  fv.dim = dim;
  double norm = 0.0;
  for (const auto& [idx, c] : counts) norm += c * c;
  norm = std::sqrt(norm);
  fv.indices.reserve(counts.size());
  fv.values.reserve(counts.size());
  for (const auto& [idx, c] : counts) {
    fv.indices.push_back(idx);
    fv.values.push_back(c / norm);
  }
  return fv;
}

// ---------------------------------------------------------------------------
// Labels and configuration

LabelSpace::LabelSpace(std::vector<std::string> codes) : codes_(std::move(codes)) {
  std::sort(codes_.begin(), codes_.end());
  codes_.erase(std::unique(codes_.begin(), codes_.end()), codes_.end());
}

std::optional<std::size_t> LabelSpace::index_of(std::string_view code) const {
  auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - codes_.begin());
}

LabelSpace label_space_from(const LabelCatalog& catalog,
                            const std::vector<Document>& corpus) {
  auto codes = catalog.codes();
  for (const auto& d : corpus)
    codes.insert(codes.end(), d.gold_labels.begin(), d.gold_labels.end());
  return LabelSpace(std::move(codes));
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0))
    throw ValidationError("learning_rate must be positive");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau must lie in [0, 1]");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0))
    throw ValidationError("decision_threshold must lie in (0, 1)");
  if (feature_dim == 0 || (feature_dim & (feature_dim - 1)) != 0)
    throw ValidationError("feature_dim must be a power of two");
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"tau", tau},
          {"mode", to_string(mode)},
          {"decision_threshold", decision_threshold},
          {"feature_dim", feature_dim},
          {"targets", to_string(targets)}};
}

TeacherLabels teacher_labels_from(
    const std::map<std::string, RationaleSet>& rationales) {
  TeacherLabels out;
  for (const auto& [id, rset] : rationales) {
    if (rset.samples.empty() || rset.all_degenerate()) {
      out[id] = {};
    } else {
      out[id] = rset.samples[first_non_degenerate(rset.samples)].predicted_labels;
    }
  }
  return out;
}

std::vector<WeightedExample> build_training_set(
    const std::vector<Document>& docs,
    const std::map<std::string, TrustScores>& scores, const TrainConfig& cfg,
    const LabelSpace& labels, const TeacherLabels* teacher_labels) {
  cfg.validate();
  if (cfg.targets == TargetSource::kTeacher && teacher_labels == nullptr)
    throw ValidationError("teacher targets requested without teacher labels");
  std::vector<WeightedExample> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    double weight = 1.0;
    if (cfg.mode != WeightingMode::kUnweighted) {
      auto it = scores.find(doc.id);
      if (it == scores.end())
        throw ValidationError("no trust score for document " + doc.id);
      const double cts = it->second.cts;
      if (cfg.mode == WeightingMode::kFiltered && cts < cfg.tau) continue;
      weight = cts;
    }
    const std::vector<std::string>* target_codes = &doc.gold_labels;
    if (cfg.targets == TargetSource::kTeacher) {
      auto it = teacher_labels->find(doc.id);
      if (it == teacher_labels->end())
        throw ValidationError("no teacher labels for document " + doc.id);
      target_codes = &it->second;
    }
    WeightedExample ex;
    ex.doc_id = doc.id;
    ex.features = featurize(doc.text, cfg.feature_dim);
    ex.targets.assign(labels.size(), 0);
    for (const auto& code : *target_codes)
      if (auto idx = labels.index_of(code)) ex.targets[*idx] = 1;
    ex.weight = weight;
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model

StudentModel::StudentModel(LabelSpace labels, std::size_t feature_dim,
                           std::uint64_t seed)
    : labels_(std::move(labels)),
      feature_dim_(feature_dim),
      seed_(seed),
      weights_(labels_.size() * feature_dim, 0.0),
      bias_(labels_.size(), 0.0) {}

double StudentModel::logit(std::size_t label, const FeatureVector& x) const {
  if (x.dim != feature_dim_ && !x.empty())
    throw ValidationError("feature dimension does not match the model");
  const double* row = weights_.data() + label * feature_dim_;
  double z = bias_[label];
  for (std::size_t n = 0; n < x.indices.size(); ++n)
    z += row[x.indices[n]] * x.values[n];
  return z;
}

std::vector<double> StudentModel::predict_proba(const FeatureVector& x) const {
  std::vector<double> p(num_labels());
  for (std::size_t c = 0; c < p.size(); ++c) p[c] = sigmoid(logit(c, x));
  return p;
}

namespace {

double clip_prob(double p) {
  return std::clamp(p, kProbClip, 1.0 - kProbClip);
}

double bce(double p, std::uint8_t y) {
  const double q = clip_prob(p);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

// d(weight * BCE)/d(logit), zero where the clip is active.
double residual(double p, std::uint8_t y, double weight) {
  if (p < kProbClip || p > 1.0 - kProbClip) return 0.0;
  return weight * (p - static_cast<double>(y));
}

// Residuals for every (example, label) of the batch, computed against the
// current parameters.
std::vector<double> batch_residuals(const StudentModel& model,
                                    std::span<const WeightedExample> batch) {
  const std::size_t L = model.num_labels();
  std::vector<double> r(batch.size() * L, 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& ex = batch[i];
    for (std::size_t c = 0; c < L; ++c)
      r[i * L + c] =
          residual(sigmoid(model.logit(c, ex.features)), ex.targets[c], ex.weight);
  }
  return r;
}

// params -= lr * gradient, with the gradient given by batch residuals.
void apply_update(StudentModel& model, std::span<const WeightedExample> batch,
                  const std::vector<double>& r, double lr) {
  const std::size_t L = model.num_labels();
  const std::size_t F = model.feature_dim();
  auto& w = model.weights();
  auto& b = model.bias();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i].features;
    for (std::size_t c = 0; c < L; ++c) {
      const double g = r[i * L + c];
      if (g == 0.0) continue;
      b[c] -= lr * g;
      double* row = w.data() + c * F;
      for (std::size_t n = 0; n < x.indices.size(); ++n)
        row[x.indices[n]] -= lr * g * x.values[n];
    }
  }
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

double weighted_loss(const StudentModel& model,
                     std::span<const WeightedExample> batch) {
  double total = 0.0;
  for (const auto& ex : batch) {
    if (ex.weight == 0.0) continue;
    double per = 0.0;
    for (std::size_t c = 0; c < model.num_labels(); ++c)
      per += bce(sigmoid(model.logit(c, ex.features)), ex.targets[c]);
    total += ex.weight * per;
  }
  return total;
}

ModelGradient loss_gradient(const StudentModel& model,
                            std::span<const WeightedExample> batch) {
  const std::size_t L = model.num_labels();
  const std::size_t F = model.feature_dim();
  ModelGradient g{std::vector<double>(L * F, 0.0), std::vector<double>(L, 0.0)};
  const auto r = batch_residuals(model, batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& x = batch[i].features;
    for (std::size_t c = 0; c < L; ++c) {
      const double rc = r[i * L + c];
      g.bias[c] += rc;
      for (std::size_t n = 0; n < x.indices.size(); ++n)
        g.weights[c * F + x.indices[n]] += rc * x.values[n];
    }
  }
  return g;
}

StudentModel train(const std::vector<WeightedExample>& examples,
                   const TrainConfig& cfg, const LabelSpace& labels,
                   std::vector<double>* epoch_losses) {
  cfg.validate();
  std::vector<WeightedExample> active;
  active.reserve(examples.size());
  for (const auto& ex : examples) {
    if (ex.weight < 0.0 || !std::isfinite(ex.weight))
      throw ValidationError("example " + ex.doc_id + " has an invalid weight");
    if (ex.targets.size() != labels.size())
      throw ValidationError("example " + ex.doc_id +
                            " targets do not match the label space");
    if (ex.weight > 0.0) active.push_back(ex);
  }
  if (active.empty())
    throw ValidationError(
        "no training examples with positive weight; lower tau so the filter "
        "keeps at least one document");

  StudentModel model(labels, cfg.feature_dim, cfg.seed);
  model.config = cfg.to_json();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(active.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<WeightedExample> batch;
  if (epoch_losses) epoch_losses->clear();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(active[order[i]]);
      const auto r = batch_residuals(model, batch);
      apply_update(model, batch, r, cfg.learning_rate);
    }
    if (epoch_losses) epoch_losses->push_back(weighted_loss(model, active));
  }
  return model;
}

std::vector<std::string> predict(const StudentModel& model,
                                 const FeatureVector& x,
                                 double decision_threshold) {
  const auto p = model.predict_proba(x);
  std::vector<std::string> out;
  for (std::size_t c = 0; c < p.size(); ++c)
    if (p[c] >= decision_threshold) out.push_back(model.labels().code(c));
  if (out.empty() && !p.empty()) {
    auto best = std::max_element(p.begin(), p.end()) - p.begin();
    out.push_back(model.labels().code(static_cast<std::size_t>(best)));
  }
  return out;
}

std::vector<std::string> predict(const StudentModel& model, const Document& doc,
                                 double decision_threshold) {
  return predict(model, featurize(doc.text, model.feature_dim()),
                 decision_threshold);
}

// ---------------------------------------------------------------------------
// Evaluation

json EvalMetrics::to_json() const {
  json labels = json::object();
  for (const auto& [code, m] : per_label)
    labels[code] = {{"tp", m.tp},           {"fp", m.fp},
                    {"fn", m.fn},           {"precision", m.precision},
                    {"recall", m.recall},   {"f1", m.f1}};
  return {{"micro_f1", micro_f1},
          {"macro_f1", macro_f1},
          {"subset_accuracy", subset_accuracy},
          {"num_docs", num_docs},
          {"per_label", labels}};
}

bool EvalMetrics::operator==(const EvalMetrics& o) const {
  if (micro_f1 != o.micro_f1 || macro_f1 != o.macro_f1 ||
      subset_accuracy != o.subset_accuracy || num_docs != o.num_docs ||
      per_label.size() != o.per_label.size())
    return false;
  for (const auto& [code, m] : per_label) {
    auto it = o.per_label.find(code);
    if (it == o.per_label.end()) return false;
    const auto& n = it->second;
    if (m.tp != n.tp || m.fp != n.fp || m.fn != n.fn || m.f1 != n.f1) return false;
  }
  return true;
}

EvalMetrics evaluate(const LabelSets& predictions, const LabelSets& golds) {
  if (golds.empty()) throw ValidationError("empty evaluation set");
  if (predictions.size() != golds.size())
    throw ValidationError("prediction and gold id sets differ");
  EvalMetrics m;
  m.num_docs = golds.size();
  std::set<std::string> gold_codes;
  std::size_t exact = 0, tp = 0, fp = 0, fn = 0;
  for (const auto& [id, gold_list] : golds) {
    auto it = predictions.find(id);
    if (it == predictions.end())
      throw ValidationError("no prediction for document " + id);
    std::set<std::string> gold(gold_list.begin(), gold_list.end());
    std::set<std::string> pred(it->second.begin(), it->second.end());
    if (gold == pred) ++exact;
    for (const auto& c : gold) {
      gold_codes.insert(c);
      auto& lm = m.per_label[c];
      if (pred.count(c)) {
        ++lm.tp;
        ++tp;
      } else {
        ++lm.fn;
        ++fn;
      }
    }
    for (const auto& c : pred)
      if (!gold.count(c)) {
        ++m.per_label[c].fp;
        ++fp;
      }
  }
  for (auto& [code, lm] : m.per_label) {
    lm.precision = lm.tp + lm.fp ? double(lm.tp) / double(lm.tp + lm.fp) : 0.0;
    lm.recall = lm.tp + lm.fn ? double(lm.tp) / double(lm.tp + lm.fn) : 0.0;
    lm.f1 = lm.precision + lm.recall > 0.0
                ? 2.0 * lm.precision * lm.recall / (lm.precision + lm.recall)
                : 0.0;
  }
  m.micro_f1 = 2 * tp + fp + fn ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
  double macro = 0.0;
  for (const auto& c : gold_codes) macro += m.per_label[c].f1;
  m.macro_f1 = gold_codes.empty() ? 0.0 : macro / double(gold_codes.size());
  m.subset_accuracy = double(exact) / double(golds.size());
  return m;
}

LabelSets gold_label_sets(const std::vector<Document>& docs) {
  LabelSets out;
  for (const auto& d : docs) out[d.id] = d.gold_labels;
  return out;
}

LabelSets predict_all(const StudentModel& model,
                      const std::vector<Document>& docs,
                      double decision_threshold) {
  LabelSets out;
  for (const auto& d : docs) out[d.id] = predict(model, d, decision_threshold);
  return out;
}

// ---------------------------------------------------------------------------
// Threshold sweep

json SweepResult::to_json() const {
  json rows_json = json::array();
  for (const auto& r : rows) {
    json row = {{"tau", r.tau}, {"retained", r.retained}, {"feasible", r.feasible}};
    if (r.feasible) {
      row["micro_f1"] = r.metrics.micro_f1;
      row["macro_f1"] = r.metrics.macro_f1;
      row["subset_accuracy"] = r.metrics.subset_accuracy;
    }
    rows_json.push_back(std::move(row));
  }
  return {{"tau_star", tau_star}, {"selection_metric", "micro_f1"}, {"rows", rows_json}};
}

SweepResult sweep_threshold(const std::vector<Document>& train_docs,
                            const std::vector<Document>& val_docs,
                            const std::map<std::string, TrustScores>& scores,
                            const std::vector<double>& grid,
                            const TrainConfig& cfg, const LabelSpace& labels,
                            const TeacherLabels* teacher_labels,
                            int parallelism) {
  if (grid.empty()) throw ValidationError("threshold grid is empty");
  for (double t : grid)
    if (!(t >= 0.0 && t <= 1.0))
      throw ValidationError("threshold grid values must lie in [0, 1]");
  const auto golds = gold_label_sets(val_docs);

  SweepResult result;
  result.rows.resize(grid.size());
  parallel_for(grid.size(), parallelism, [&](std::size_t i) {
    TrainConfig c = cfg;
    c.mode = WeightingMode::kFiltered;
    c.tau = grid[i];
    auto examples = build_training_set(train_docs, scores, c, labels, teacher_labels);
    SweepRow& row = result.rows[i];
    row.tau = grid[i];
    row.retained = static_cast<std::size_t>(std::count_if(
        examples.begin(), examples.end(),
        [](const WeightedExample& e) { return e.weight > 0.0; }));
    if (row.retained == 0) return;
    auto model = train(examples, c, labels);
    row.metrics = evaluate(predict_all(model, val_docs, c.decision_threshold), golds);
    row.feasible = true;
  });

  bool any = false;
  double best = -1.0;
  for (const auto& row : result.rows) {
    if (!row.feasible) continue;
    const double v = row.metrics.micro_f1;
    if (!any || v > best || (v == best && row.tau > result.tau_star)) {
      best = v;
      result.tau_star = row.tau;
      any = true;
    }
  }
  if (!any)
    throw ValidationError("every threshold in the grid filters out all training documents");
  return result;
}

// ---------------------------------------------------------------------------
// Files

void write_manifest(const std::filesystem::path& path,
                    const std::vector<Document>& train_docs,
                    const std::vector<WeightedExample>& examples,
                    const TrainConfig& cfg) {
  std::map<std::string, double> weight_of;
  for (const auto& ex : examples) weight_of[ex.doc_id] = ex.weight;
  std::vector<json> records;
  records.reserve(train_docs.size());
  for (const auto& d : train_docs) {
    auto it = weight_of.find(d.id);
    const bool included = it != weight_of.end() && it->second > 0.0;
    records.push_back({{"doc_id", d.id},
                       {"weight", included ? it->second : 0.0},
                       {"included", included},
                       {"tau", cfg.tau},
                       {"mode", to_string(cfg.mode)}});
  }
  write_jsonl(path, records);
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(buf, buf + sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    char buf[sizeof(T)];
    std::memcpy(buf, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(buf, buf + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }
  std::string get_string() {
    auto n = get<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    std::string_view v(data_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ParseError("truncated model file");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

constexpr char kModelMagic[8] = {'S', 'F', 'D', 'S', 'T', 'U', 'D', '1'};

}  // namespace

void save_model(const std::filesystem::path& path, const StudentModel& model) {
  std::string out(kModelMagic, sizeof(kModelMagic));
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, model.feature_dim());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.num_labels()));
  put<std::uint64_t>(out, model.seed());
  for (const auto& code : model.labels().codes()) put_string(out, code);
  put_string(out, model.config.is_null() ? "{}" : model.config.dump());
  out.reserve(out.size() + 8 * (model.bias().size() + model.weights().size()));
  for (double b : model.bias()) put<double>(out, b);
  for (double w : model.weights()) put<double>(out, w);
  write_file_atomic(path, out);
}

StudentModel load_model(const std::filesystem::path& path) {
  Reader in(read_file(path));
  if (in.raw(sizeof(kModelMagic)) != std::string_view(kModelMagic, sizeof(kModelMagic)))
    throw ParseError(path.string() + ": not a student model file");
  if (auto v = in.get<std::uint32_t>(); v != 1)
    throw ParseError(path.string() + ": unsupported model version " + std::to_string(v));
  const auto dim = in.get<std::uint64_t>();
  const auto num_labels = in.get<std::uint32_t>();
  const auto seed = in.get<std::uint64_t>();
  std::vector<std::string> codes;
  for (std::uint32_t i = 0; i < num_labels; ++i) codes.push_back(in.get_string());
  LabelSpace labels(codes);
  if (labels.codes() != codes)
    throw ParseError(path.string() + ": label map is not sorted and unique");
  StudentModel model(labels, dim, seed);
  model.config = json::parse(in.get_string(), nullptr, false);
  if (model.config.is_discarded()) throw ParseError(path.string() + ": bad config echo");
  for (auto& b : model.bias()) b = in.get<double>();
  for (auto& w : model.weights()) w = in.get<double>();
  if (!in.at_end()) throw ParseError(path.string() + ": trailing bytes in model file");
  return model;
}

std::map<std::string, TrustScores> index_scores(const std::vector<TrustScores>& scores) {
  std::map<std::string, TrustScores> out;
  for (const auto& s : scores) out.insert_or_assign(s.doc_id, s);
  return out;
}

std::string to_string(WeightingMode m) {
  switch (m) {
    case WeightingMode::kUnweighted:
      return "unweighted";
    case WeightingMode::kSoft:
      return "soft";
    case WeightingMode::kFiltered:
      return "filtered";
  }
  return "soft";
}

WeightingMode parse_weighting_mode(const std::string& s) {
  if (s == "unweighted") return WeightingMode::kUnweighted;
  if (s == "soft") return WeightingMode::kSoft;
  if (s == "filtered") return WeightingMode::kFiltered;
  throw ConfigError("unknown weighting mode \"" + s +
                    "\" (expected unweighted, soft or filtered)");
}

std::string to_string(TargetSource t) {
  return t == TargetSource::kTeacher ? "teacher" : "gold";
}

TargetSource parse_target_source(const std::string& s) {
  if (s == "gold") return TargetSource::kGold;
  if (s == "teacher") return TargetSource::kTeacher;
  throw ConfigError("unknown target source \"" + s + "\" (expected gold or teacher)");
}

}  // namespace sfd
