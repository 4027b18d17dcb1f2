// src/pipeline.cpp

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

#include "sfd/pipeline.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <set>

#include "sfd/error.hpp"
#include "sfd/synthetic.hpp"

namespace sfd {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kChatKinds = {"mock", "synthetic", "http"};
const std::set<std::string> kEmbedderKinds = {"mock", "http"};

// Collects field-level problems so a config reports all of them at once.
class FieldReader {
 public:
  void unknown_keys(const json& obj, const std::string& where,
                    std::initializer_list<const char*> known) {
    for (const auto& [key, value] : obj.items()) {
      bool ok = false;
      for (const char* k : known) ok = ok || key == k;
      if (!ok) fail(join(where, key), "unknown field");
    }
  }

  const json* section(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) return nullptr;
    if (!it->is_object()) {
      fail(join(where, key), "expected an object");
      return nullptr;
    }
    return &*it;
  }

  template <typename T>
  void read(const json* obj, const std::string& where, const char* key, T& out) {
    if (!obj) return;
    auto it = obj->find(key);
    if (it == obj->end()) return;
    const std::string field = join(where, key);
    if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) return fail(field, "expected a string");
      out = it->template get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) return fail(field, "expected true or false");
      out = it->template get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!it->is_number()) return fail(field, "expected a number");
      out = it->template get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!it->is_number_unsigned() && !(it->is_number_integer() && it->template get<std::int64_t>() >= 0))
        return fail(field, "expected a non-negative integer");
      out = it->template get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) return fail(field, "expected an integer");
      out = it->template get<T>();
    } else {
      if (!it->is_array()) return fail(field, "expected an array of numbers");
      T values{};
      std::vector<double> v;
      for (const auto& x : *it) {
        if (!x.is_number()) return fail(field, "expected an array of numbers");
        v.push_back(x.get<double>());
      }
      if constexpr (std::is_same_v<T, std::vector<double>>) {
        values = v;
      } else {
        if (v.size() != values.size())
          return fail(field, fmt::format("expected {} numbers", values.size()));
        std::copy(v.begin(), v.end(), values.begin());
      }
      out = values;
    }
  }

  void read_path(const json* obj, const std::string& where, const char* key,
                 const fs::path& base, fs::path& out) {
    std::string s;
    read(obj, where, key, s);
    if (s.empty()) return;
    fs::path p(s);
    out = p.is_absolute() ? p : (base / p).lexically_normal();
  }

  void fail(const std::string& field, const std::string& message) {
    errors_.push_back(field + ": " + message);
  }

  void check(bool ok, const std::string& field, const std::string& message) {
    if (!ok) fail(field, message);
  }

  void throw_if_failed() const {
    if (errors_.empty()) return;
    std::string msg = "invalid configuration";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw ConfigError(msg);
  }

 private:
  static std::string join(const std::string& where, const std::string& key) {
    return where.empty() ? key : where + "." + key;
  }

  std::vector<std::string> errors_;
};

void read_chat(FieldReader& r, const json* backends, const char* name, ChatSettings& out) {
  const std::string where = std::string("backends.") + name;
  const json* obj = backends ? r.section(*backends, "backends", name) : nullptr;
  if (obj) r.unknown_keys(*obj, where, {"backend", "model", "base_url", "temperature", "max_tokens"});
  r.read(obj, where, "backend", out.backend);
  r.read(obj, where, "model", out.model);
  r.read(obj, where, "base_url", out.base_url);
  r.read(obj, where, "temperature", out.temperature);
  r.read(obj, where, "max_tokens", out.max_tokens);
  r.check(kChatKinds.count(out.backend) > 0, where + ".backend",
          "must be one of mock, synthetic, http (got '" + out.backend + "')");
  r.check(out.backend != "http" || !out.base_url.empty(), where + ".base_url",
          "required when backend is http");
  r.check(out.temperature >= 0.0, where + ".temperature", "must be >= 0");
  r.check(out.max_tokens > 0, where + ".max_tokens", "must be positive");
}

template <typename Parse>
void read_enum(FieldReader& r, const json* obj, const std::string& where,
               const char* key, Parse parse) {
  std::string s;
  r.read(obj, where, key, s);
  if (s.empty()) return;
  try {
    parse(s);
  } catch (const Error& e) {
    r.fail(where + "." + key, e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ModelEndpoint ChatSettings::endpoint() const {
  return {backend_id(), model, temperature, max_tokens};
}

std::string ChatSettings::backend_id() const {
  return backend == "http" ? "http:" + base_url : backend;
}

std::string EmbedderSettings::backend_id() const {
  return backend == "http" ? "http:" + base_url + "#" + model : backend;
}

json PipelineConfig::to_json() const {
  auto chat = [](const ChatSettings& c) {
    return json{{"backend", c.backend},         {"model", c.model},
                {"base_url", c.base_url},       {"temperature", c.temperature},
                {"max_tokens", c.max_tokens}};
  };
  json train_json = train.to_json();
  train_json.erase("seed");
  return {
      {"paths",
       {{"corpus", corpus.string()},
        {"definitions", definitions.string()},
        {"annotations", annotations.string()},
        {"cache_dir", cache_dir.string()},
        {"output_dir", output_dir.string()}}},
      {"backends",
       {{"teacher", chat(teacher)},
        {"judge", chat(judge)},
        {"embedder",
         {{"backend", embedder.backend},
          {"model", embedder.model},
          {"base_url", embedder.base_url},
          {"dim", embedder.dim}}}}},
      {"trust",
       {{"k", trust.k},
        {"weights", trust.weights},
        {"las_mapping", to_string(trust.las_mapping)},
        {"clamp_negative", trust.clamp_negative},
        {"canonical", to_string(trust.canonical)}}},
      {"train", train_json},
      {"split", {{"ratios", split_ratios}}},
      {"sweep", {{"grid", sweep_grid}}},
      {"parallelism", parallelism},
      {"seed", seed}};
}

PipelineConfig parse_pipeline_config(const json& obj, const fs::path& base_dir) {
  if (!obj.is_object()) throw ConfigError("invalid configuration: top level must be an object");
  FieldReader r;
  PipelineConfig cfg;
  r.unknown_keys(obj, "", {"paths", "backends", "trust", "train", "split", "sweep",
                           "parallelism", "seed"});

  const json* paths = r.section(obj, "", "paths");
  if (paths) r.unknown_keys(*paths, "paths", {"corpus", "definitions", "annotations",
                                              "cache_dir", "output_dir"});
  r.read_path(paths, "paths", "corpus", base_dir, cfg.corpus);
  r.read_path(paths, "paths", "definitions", base_dir, cfg.definitions);
  r.read_path(paths, "paths", "annotations", base_dir, cfg.annotations);
  r.read_path(paths, "paths", "cache_dir", base_dir, cfg.cache_dir);
  r.read_path(paths, "paths", "output_dir", base_dir, cfg.output_dir);
  r.check(!cfg.corpus.empty(), "paths.corpus", "required");
  r.check(!cfg.output_dir.empty(), "paths.output_dir", "required");
  if (cfg.cache_dir.empty() && !cfg.output_dir.empty()) cfg.cache_dir = cfg.output_dir / "cache";

  cfg.teacher.model = "Qwen3-30B";
  cfg.teacher.temperature = 0.7;
  cfg.judge.model = "Qwen3-32B";
  const json* backends = r.section(obj, "", "backends");
  if (backends) r.unknown_keys(*backends, "backends", {"teacher", "judge", "embedder"});
  read_chat(r, backends, "teacher", cfg.teacher);
  read_chat(r, backends, "judge", cfg.judge);
  {
    const json* e = backends ? r.section(*backends, "backends", "embedder") : nullptr;
    const std::string where = "backends.embedder";
    if (e) r.unknown_keys(*e, where, {"backend", "model", "base_url", "dim"});
    r.read(e, where, "backend", cfg.embedder.backend);
    r.read(e, where, "model", cfg.embedder.model);
    r.read(e, where, "base_url", cfg.embedder.base_url);
    r.read(e, where, "dim", cfg.embedder.dim);
    r.check(kEmbedderKinds.count(cfg.embedder.backend) > 0, where + ".backend",
            "must be one of mock, http (got '" + cfg.embedder.backend + "')");
    r.check(cfg.embedder.backend != "http" || !cfg.embedder.base_url.empty(),
            where + ".base_url", "required when backend is http");
    r.check(cfg.embedder.backend != "mock" || cfg.embedder.dim >= 8, where + ".dim",
            "must be at least 8");
  }

  const json* trust = r.section(obj, "", "trust");
  if (trust) r.unknown_keys(*trust, "trust", {"k", "weights", "las_mapping", "clamp_negative", "canonical"});
  r.read(trust, "trust", "k", cfg.trust.k);
  r.read(trust, "trust", "weights", cfg.trust.weights);
  r.read(trust, "trust", "clamp_negative", cfg.trust.clamp_negative);
  read_enum(r, trust, "trust", "las_mapping",
            [&](const std::string& s) { cfg.trust.las_mapping = parse_las_mapping(s); });
  read_enum(r, trust, "trust", "canonical",
            [&](const std::string& s) { cfg.trust.canonical = parse_canonical_policy(s); });
  try {
    cfg.trust.validate();
  } catch (const Error& e) {
    r.fail("trust", e.what());
  }

  const json* train = r.section(obj, "", "train");
  if (train) r.unknown_keys(*train, "train", {"learning_rate", "epochs", "batch_size", "tau", "mode",
                                              "decision_threshold", "feature_dim", "targets"});
  r.read(train, "train", "learning_rate", cfg.train.learning_rate);
  r.read(train, "train", "epochs", cfg.train.epochs);
  r.read(train, "train", "batch_size", cfg.train.batch_size);
  r.read(train, "train", "tau", cfg.train.tau);
  r.read(train, "train", "decision_threshold", cfg.train.decision_threshold);
  r.read(train, "train", "feature_dim", cfg.train.feature_dim);
  read_enum(r, train, "train", "mode",
            [&](const std::string& s) { cfg.train.mode = parse_weighting_mode(s); });
  read_enum(r, train, "train", "targets",
            [&](const std::string& s) { cfg.train.targets = parse_target_source(s); });
  try {
    cfg.train.validate();
  } catch (const Error& e) {
    r.fail("train", e.what());
  }

  const json* split = r.section(obj, "", "split");
  if (split) r.unknown_keys(*split, "split", {"ratios"});
  r.read(split, "split", "ratios", cfg.split_ratios);
  {
    double sum = 0.0;
    bool positive = true;
    for (double x : cfg.split_ratios) {
      sum += x;
      positive = positive && x > 0.0;
    }
    r.check(positive && std::abs(sum - 1.0) <= 1e-9, "split.ratios",
            "must be three positive numbers summing to 1");
  }

  const json* sweep = r.section(obj, "", "sweep");
  if (sweep) r.unknown_keys(*sweep, "sweep", {"grid"});
  r.read(sweep, "sweep", "grid", cfg.sweep_grid);
  r.check(!cfg.sweep_grid.empty(), "sweep.grid", "must not be empty");
  for (double t : cfg.sweep_grid)
    if (!(t >= 0.0 && t <= 1.0)) {
      r.fail("sweep.grid", "values must lie in [0, 1]");
      break;
    }

  r.read(&obj, "", "parallelism", cfg.parallelism);
  r.check(cfg.parallelism >= 1, "parallelism", "must be at least 1");
  r.read(&obj, "", "seed", cfg.seed);
  cfg.train.seed = cfg.seed;

  r.throw_if_failed();
  return cfg;
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  json obj;
  try {
    obj = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_pipeline_config(obj, fs::absolute(path).parent_path());
}

void apply_overrides(PipelineConfig& cfg, const ConfigOverrides& o) {
  FieldReader r;
  if (o.tau) {
    r.check(*o.tau >= 0.0 && *o.tau <= 1.0, "--tau", "must lie in [0, 1]");
    cfg.train.tau = *o.tau;
    cfg.tau_overridden = true;
  }
  if (o.k) {
    r.check(*o.k >= 2, "--k", "must be at least 2");
    cfg.trust.k = *o.k;
  }
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.mode) cfg.train.mode = *o.mode;
  if (o.las_mapping) cfg.trust.las_mapping = *o.las_mapping;
  if (o.parallelism) {
    r.check(*o.parallelism >= 1, "--parallelism", "must be at least 1");
    cfg.parallelism = *o.parallelism;
  }
  r.throw_if_failed();
}

void apply_environment(PipelineConfig& cfg) {
  if (const char* dir = std::getenv("SFD_CACHE_DIR"); dir && *dir) cfg.cache_dir = dir;
}

void check_config(const PipelineConfig& cfg) {
  FieldReader r;
  r.check(fs::is_regular_file(cfg.corpus), "paths.corpus",
          "file not found: " + cfg.corpus.string());
  if (!cfg.definitions.empty())
    r.check(fs::is_regular_file(cfg.definitions), "paths.definitions",
            "file not found: " + cfg.definitions.string());
  if (!cfg.annotations.empty())
    r.check(fs::is_regular_file(cfg.annotations), "paths.annotations",
            "file not found: " + cfg.annotations.string());
  for (const auto& [field, dir] : {std::pair{"paths.output_dir", cfg.output_dir},
                                   std::pair{"paths.cache_dir", cfg.cache_dir}}) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    r.check(!ec && fs::is_directory(dir), field, "cannot create directory " + dir.string());
  }
  r.throw_if_failed();
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

std::shared_ptr<ChatBackend> make_chat_backend(const ChatSettings& s) {
  if (s.backend == "synthetic") return std::make_shared<SyntheticChatBackend>();
  if (s.backend == "http") {
    const char* token = std::getenv("SFD_API_TOKEN");
    return std::make_shared<HttpChatBackend>(s.base_url, token ? token : "");
  }
  return std::make_shared<MockChatBackend>();
}

std::shared_ptr<Embedder> make_embedder(const EmbedderSettings& s) {
  if (s.backend == "http") {
    const char* token = std::getenv("SFD_API_TOKEN");
    auto e = std::make_shared<HttpEmbedder>(s.base_url, s.model, token ? token : "");
    return e;
  }
  return std::make_shared<MockEmbedder>(s.dim);
}

void write_json(const fs::path& path, const json& obj) {
  write_file_atomic(path, obj.dump(2) + "\n");
}

json trust_settings(const TrustConfig& t, const EmbedderSettings& e,
                    const ChatSettings& teacher, const ChatSettings& judge) {
  return {{"k", t.k},
          {"weights", t.weights},
          {"las_mapping", to_string(t.las_mapping)},
          {"clamp_negative", t.clamp_negative},
          {"canonical", to_string(t.canonical)},
          {"embedder", e.backend_id()},
          {"teacher", teacher.endpoint().backend_id + "/" + teacher.model},
          {"judge", judge.endpoint().backend_id + "/" + judge.model}};
}

constexpr std::size_t kGenerateChunk = 64;

}  // namespace

Pipeline::Pipeline(PipelineConfig cfg, std::ostream& log)
    : cfg_(std::move(cfg)), log_(log) {
  std::error_code ec;
  fs::create_directories(cfg_.output_dir, ec);
  if (ec) throw ConfigError("paths.output_dir: cannot create " + cfg_.output_dir.string());
  gateway_ = std::make_unique<LlmGateway>(RetryPolicy{}, cfg_.cache_dir / "completions");
  embeddings_ = std::make_unique<EmbeddingService>(RetryPolicy{}, cfg_.cache_dir / "embeddings");
  gateway_->register_backend(cfg_.teacher.backend_id(), make_chat_backend(cfg_.teacher));
  if (!gateway_->has_backend(cfg_.judge.backend_id()))
    gateway_->register_backend(cfg_.judge.backend_id(), make_chat_backend(cfg_.judge));
  embeddings_->register_backend(cfg_.embedder.backend_id(), make_embedder(cfg_.embedder));
  echo_config();
}

std::size_t Pipeline::backend_calls() const {
  return gateway_->backend_calls() + embeddings_->backend_calls();
}

void Pipeline::echo_config() {
  write_json(out(outputs::kEffectiveConfig), cfg_.to_json());
}

const std::vector<Document>& Pipeline::corpus() {
  if (!corpus_) corpus_ = load_documents(cfg_.corpus);
  return *corpus_;
}

LabelCatalog& Pipeline::catalog() {
  if (!catalog_) {
    LabelCatalog c;
    if (!cfg_.definitions.empty()) c = load_label_definitions(cfg_.definitions);
    if (fs::exists(out(outputs::kGeneratedDefinitions)))
      for (const auto& [code, def] : load_label_definitions(out(outputs::kGeneratedDefinitions)))
        if (!c.contains(code)) c.put(def);
    catalog_ = std::move(c);
  }
  return *catalog_;
}

DefinitionResolver& Pipeline::resolver() {
  if (!resolver_)
    resolver_ = std::make_unique<DefinitionResolver>(
        catalog(), cfg_.teacher.endpoint(), *gateway_, out(outputs::kGeneratedDefinitions));
  return *resolver_;
}

const DatasetSplit& Pipeline::split() {
  if (!split_) {
    split_ = split_dataset(corpus(), cfg_.split_ratios, cfg_.seed);
    write_json(out(outputs::kSplit), {{"seed", split_->seed},
                                      {"ratios", cfg_.split_ratios},
                                      {"train", split_->train_ids},
                                      {"val", split_->val_ids},
                                      {"test", split_->test_ids}});
  }
  return *split_;
}

std::vector<Document> Pipeline::docs_of(const std::vector<std::string>& ids) {
  return select_documents(corpus(), ids);
}

std::map<std::string, TrustScores> Pipeline::load_scores() {
  if (!fs::exists(out(outputs::kScores)))
    throw ConfigError("no trust scores in " + cfg_.output_dir.string() + "; run score first");
  return index_scores(load_trust_scores(out(outputs::kScores)));
}

TeacherLabels Pipeline::teacher_labels() {
  if (!fs::exists(out(outputs::kRationales)))
    throw ConfigError("no rationales in " + cfg_.output_dir.string() + "; run generate or score first");
  return teacher_labels_from(load_rationales(out(outputs::kRationales)));
}

LabelSpace Pipeline::label_space() { return label_space_from(catalog(), corpus()); }

void Pipeline::validate() {
  check_config(cfg_);
  const auto report = validate_corpus(corpus(), catalog());
  log_ << fmt::format("corpus: {} documents, {} distinct labels\n", report.num_documents,
                      report.num_labels);
  log_ << fmt::format("definitions: {} labels defined\n", catalog().size());
  if (!report.undefined_codes.empty()) {
    std::string codes;
    for (const auto& c : report.undefined_codes) codes += " " + c;
    log_ << fmt::format("{} label codes have no definition and will be generated (run define):{}\n",
                        report.undefined_codes.size(), codes);
  }
  if (!cfg_.annotations.empty()) {
    const auto records = load_annotations(cfg_.annotations);
    log_ << fmt::format("annotations: {} records\n", records.size());
  }
  const auto& s = split();
  log_ << fmt::format("split: {} train, {} val, {} test\n", s.train_ids.size(),
                      s.val_ids.size(), s.test_ids.size());
}

StageStats Pipeline::generate(const std::string& which) {
  std::vector<Document> docs;
  if (which == "all") {
    docs = corpus();
  } else if (which == "train") {
    docs = docs_of(split().train_ids);
  } else if (which == "val") {
    docs = docs_of(split().val_ids);
  } else if (which == "test") {
    docs = docs_of(split().test_ids);
  } else {
    throw ConfigError("--split: must be one of all, train, val, test (got '" + which + "')");
  }
  const auto path = out(outputs::kRationales);
  const auto existing = load_rationales(path);
  std::vector<const Document*> todo;
  StageStats stats;
  for (const auto& d : docs) {
    auto it = existing.find(d.id);
    if (it != existing.end() && static_cast<int>(it->second.k()) == cfg_.trust.k)
      ++stats.skipped;
    else
      todo.push_back(&d);
  }
  const auto endpoint = cfg_.teacher.endpoint();
  for (std::size_t begin = 0; begin < todo.size(); begin += kGenerateChunk) {
    const std::size_t n = std::min(kGenerateChunk, todo.size() - begin);
    std::vector<std::optional<RationaleSet>> sets(n);
    std::vector<std::string> errors(n);
    parallel_for(n, cfg_.parallelism, [&](std::size_t i) {
      try {
        sets[i] = generate_rationales(*todo[begin + i], cfg_.trust.k, endpoint, *gateway_);
      } catch (const Error& e) {
        errors[i] = todo[begin + i]->id + ": " + e.what();
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (sets[i]) {
        append_rationales(path, *sets[i]);
        ++stats.processed;
      } else {
        ++stats.errors;
        log_ << "generate failed for " << errors[i] << "\n";
      }
    }
  }
  log_ << fmt::format("generate: {} new rationale sets, {} already present, {} failed\n",
                      stats.processed, stats.skipped, stats.errors);
  if (stats.errors) throw Error(fmt::format("{} documents failed rationale generation", stats.errors));
  return stats;
}

StageStats Pipeline::define() {
  StageStats stats;
  const auto report = validate_corpus(corpus(), catalog());
  for (const auto& code : report.undefined_codes) {
    const auto def = resolver().fetch(code);
    log_ << fmt::format("define: {} -> {}\n", code, def.definition);
    ++stats.processed;
  }
  stats.skipped = report.num_labels - report.undefined_codes.size();
  log_ << fmt::format("define: {} definitions generated, {} already defined\n", stats.processed,
                      stats.skipped);
  return stats;
}

StageStats Pipeline::score() {
  const json settings = trust_settings(cfg_.trust, cfg_.embedder, cfg_.teacher, cfg_.judge);
  const auto settings_path = out("trust_settings.json");
  if (fs::exists(out(outputs::kScores)) && fs::exists(settings_path)) {
    const json previous = json::parse(read_file(settings_path));
    if (previous != settings)
      throw ConfigError(fmt::format(
          "trust: {} was computed with different trust settings ({}); remove it to rescore",
          out(outputs::kScores).string(), previous.dump()));
  }
  write_json(settings_path, settings);

  ScoringContext ctx{*gateway_, *embeddings_, resolver(), cfg_.embedder.backend_id(),
                     cfg_.teacher.endpoint(), cfg_.judge.endpoint()};
  ScoreCorpusOptions options;
  options.scores_path = out(outputs::kScores);
  options.rationales_path = out(outputs::kRationales);
  options.parallelism = cfg_.parallelism;
  const auto result = score_corpus(corpus(), cfg_.trust, ctx, options);
  for (const auto& m : result.error_messages) log_ << "score failed for " << m << "\n";
  StageStats stats{result.scores.size() - result.reused, result.reused, result.errors};
  log_ << fmt::format("score: {} documents scored, {} already scored, {} rationale sets generated, {} failed\n",
                      stats.processed, stats.skipped, result.generated_rationales, stats.errors);
  if (stats.errors) throw Error(fmt::format("{} documents failed scoring; rerun to retry", stats.errors));
  return stats;
}

SweepResult Pipeline::sweep() {
  const auto scores = load_scores();
  std::optional<TeacherLabels> tl;
  if (cfg_.train.targets == TargetSource::kTeacher) tl = teacher_labels();
  const auto result = sweep_threshold(docs_of(split().train_ids), docs_of(split().val_ids), scores,
                                      cfg_.sweep_grid, cfg_.train, label_space(),
                                      tl ? &*tl : nullptr, cfg_.parallelism);
  ReportInputs in;
  in.sweep = result;
  write_json(out(outputs::kSweep), report_json(in));
  for (const auto& r : result.rows)
    log_ << (r.feasible ? fmt::format("sweep: tau {:.2f} retained {} micro-F1 {:.4f}\n", r.tau,
                                      r.retained, r.metrics.micro_f1)
                        : fmt::format("sweep: tau {:.2f} infeasible\n", r.tau));
  log_ << fmt::format("sweep: selected tau {:.2f}\n", result.tau_star);
  return result;
}

double Pipeline::resolve_tau() {
  if (cfg_.tau_overridden) return cfg_.train.tau;
  if (fs::exists(out(outputs::kSweep))) {
    const auto in = report_inputs_from_json(json::parse(read_file(out(outputs::kSweep))));
    if (in.sweep) return in.sweep->tau_star;
  }
  return cfg_.train.tau;
}

double Pipeline::train() {
  TrainConfig c = cfg_.train;
  c.tau = resolve_tau();
  const auto scores = c.mode == WeightingMode::kUnweighted ? std::map<std::string, TrustScores>{}
                                                           : load_scores();
  std::optional<TeacherLabels> tl;
  if (c.targets == TargetSource::kTeacher) tl = teacher_labels();
  const auto train_docs = docs_of(split().train_ids);
  const auto examples = build_training_set(train_docs, scores, c, label_space(), tl ? &*tl : nullptr);
  std::vector<double> losses;
  const auto model = sfd::train(examples, c, label_space(), &losses);
  save_model(out(outputs::kModel), model);
  write_manifest(out(outputs::kManifest), train_docs, examples, c);
  const auto retained = static_cast<std::size_t>(std::count_if(
      examples.begin(), examples.end(), [](const WeightedExample& e) { return e.weight > 0.0; }));
  write_json(out(outputs::kTrain), {{"tau", c.tau},
                                    {"retained", retained},
                                    {"train_documents", train_docs.size()},
                                    {"epoch_losses", losses},
                                    {"config", c.to_json()}});
  log_ << fmt::format("train: mode {} tau {:.2f}, {} of {} documents retained, final loss {:.4f}\n",
                      to_string(c.mode), c.tau, retained, train_docs.size(),
                      losses.empty() ? 0.0 : losses.back());
  return c.tau;
}

void Pipeline::eval() {
  if (!fs::exists(out(outputs::kModel)))
    throw ConfigError("no trained model in " + cfg_.output_dir.string() + "; run train first");
  const auto model = load_model(out(outputs::kModel));
  const auto test_docs = docs_of(split().test_ids);
  const auto golds = gold_label_sets(test_docs);
  ReportInputs in;
  in.test_metrics = evaluate(predict_all(model, test_docs, cfg_.train.decision_threshold), golds);

  TrainConfig b = cfg_.train;
  b.mode = WeightingMode::kUnweighted;
  std::optional<TeacherLabels> tl;
  if (b.targets == TargetSource::kTeacher) tl = teacher_labels();
  const auto baseline = sfd::train(build_training_set(docs_of(split().train_ids), {}, b,
                                                      label_space(), tl ? &*tl : nullptr),
                                   b, label_space());
  in.baseline_metrics = evaluate(predict_all(baseline, test_docs, b.decision_threshold), golds);
  json obj = report_json(in);
  obj["tau"] = model.config.value("tau", 0.0);
  write_json(out(outputs::kEval), obj);
  log_ << fmt::format("eval: student micro-F1 {:.4f} macro-F1 {:.4f} subset {:.4f}\n",
                      in.test_metrics->micro_f1, in.test_metrics->macro_f1,
                      in.test_metrics->subset_accuracy);
  log_ << fmt::format("eval: unweighted baseline micro-F1 {:.4f} macro-F1 {:.4f} subset {:.4f}\n",
                      in.baseline_metrics->micro_f1, in.baseline_metrics->macro_f1,
                      in.baseline_metrics->subset_accuracy);
}

void Pipeline::correlate() {
  if (cfg_.annotations.empty())
    throw ConfigError("paths.annotations: required for correlate");
  const auto records = load_annotations(cfg_.annotations);
  const auto human = aggregate_human_scores(records);
  std::vector<TrustScores> scores;
  for (auto& [id, s] : load_scores()) scores.push_back(s);
  ReportInputs in;
  for (auto m : {LasMapping::kCentered, LasMapping::kLiteral, LasMapping::kLinear})
    in.correlations.push_back(correlation_table(scores, human, default_ablation_specs(), m));
  in.agreement = agreement_summary(records);
  write_json(out(outputs::kCorrelation), report_json(in));
  for (const auto& r : in.correlations.front().rows)
    log_ << fmt::format("correlate: {} rho {:.3f}\n", r.name, r.rho);
  log_ << fmt::format("correlate: Krippendorff alpha (pooled, interval) {:.3f}\n",
                      in.agreement->pooled);
}

void Pipeline::ablate() {
  TrainConfig c = cfg_.train;
  c.tau = resolve_tau();
  if (fs::exists(out(outputs::kTrain)) && !cfg_.tau_overridden)
    c.tau = json::parse(read_file(out(outputs::kTrain))).at("tau").get<double>();
  std::vector<TrustScores> scores;
  for (auto& [id, s] : load_scores()) scores.push_back(s);
  std::optional<TeacherLabels> tl;
  if (c.targets == TargetSource::kTeacher) tl = teacher_labels();
  ReportInputs in;
  in.ablations = run_ablations(docs_of(split().train_ids), docs_of(split().test_ids), scores, c,
                               label_space(), default_ablation_specs(), tl ? &*tl : nullptr,
                               cfg_.parallelism);
  json obj = report_json(in);
  obj["tau"] = c.tau;
  write_json(out(outputs::kAblations), obj);
  for (const auto& r : *in.ablations)
    log_ << (r.feasible ? fmt::format("ablate: {} micro-F1 {:.4f}\n", r.name, r.metrics.micro_f1)
                        : fmt::format("ablate: {} infeasible ({})\n", r.name, r.error));
}

void Pipeline::report() {
  json merged = json::object();
  for (const char* name : {outputs::kEval, outputs::kSweep, outputs::kAblations, outputs::kCorrelation}) {
    if (!fs::exists(out(name))) continue;
    const json part = json::parse(read_file(out(name)));
    for (const auto& [k, v] : part.items()) merged[k] = v;
  }
  emit_report(report_inputs_from_json(merged), cfg_.output_dir);
  log_ << "report: wrote " << out("report.md").string() << " and " << out("report.json").string()
       << "\n";
}

// ---------------------------------------------------------------------------
// Demo and dispatch

PipelineConfig demo_config(const fs::path& output_dir) {
  PipelineConfig cfg;
  const fs::path data = output_dir / "data";
  cfg.corpus = data / "corpus.jsonl";
  cfg.definitions = data / "definitions.jsonl";
  cfg.annotations = data / "annotations.jsonl";
  cfg.cache_dir = output_dir / "cache";
  cfg.output_dir = output_dir;
  cfg.teacher = {"synthetic", "Qwen3-30B", "", 0.7, 512};
  cfg.judge = {"synthetic", "Qwen3-32B", "", 0.0, 16};
  cfg.train.learning_rate = 0.1;
  cfg.train.epochs = 10;
  cfg.train.batch_size = 64;
  cfg.train.feature_dim = std::size_t{1} << 16;
  cfg.train.mode = WeightingMode::kFiltered;
  cfg.train.targets = TargetSource::kTeacher;
  cfg.split_ratios = {0.7, 0.15, 0.15};
  return cfg;
}

namespace {

// Labels left out of the demo definitions file so the define stage has work.
const std::set<std::string> kDemoUndefined = {"B60L", "F16H", "H04W"};
constexpr std::size_t kDemoAnnotatedItems = 500;
constexpr std::size_t kDemoAnnotators = 3;

void write_demo_data(const PipelineConfig& cfg, std::size_t num_docs, std::ostream& log) {
  if (fs::exists(cfg.corpus) && fs::exists(cfg.definitions) && fs::exists(cfg.annotations)) return;
  SyntheticSpec spec;
  spec.num_docs = num_docs;
  spec.seed = cfg.seed;
  const auto corpus = generate_synthetic_corpus(spec);
  write_documents(cfg.corpus, corpus.documents);
  LabelCatalog partial;
  for (const auto& [code, def] : corpus.catalog)
    if (!kDemoUndefined.count(code)) partial.add(def);
  write_label_definitions(cfg.definitions, partial);
  write_annotations(cfg.annotations,
                    synthetic_annotations(corpus, kDemoAnnotatedItems, kDemoAnnotators, cfg.seed));
  log << fmt::format("demo: wrote synthetic corpus ({} documents, {} noisy) to {}\n",
                     corpus.documents.size(), corpus.noisy.size(), cfg.corpus.parent_path().string());
}

}  // namespace

void run_demo(const DemoOptions& options, std::ostream& log) {
  PipelineConfig cfg = demo_config(options.output_dir);
  apply_environment(cfg);
  apply_overrides(cfg, options.overrides);
  write_demo_data(cfg, options.num_docs, log);
  Pipeline p(cfg, log);
  p.validate();
  p.define();
  p.generate();
  p.score();
  p.sweep();
  p.train();
  p.eval();
  p.correlate();
  p.ablate();
  p.report();
  log << fmt::format("demo: done, {} backend calls\n", p.backend_calls());
}

int run_subcommand(const CliRequest& req, std::ostream& log, std::ostream& err) {
  try {
    if (req.subcommand == "demo") {
      DemoOptions opts;
      if (req.output_dir) opts.output_dir = *req.output_dir;
      if (req.num_docs) opts.num_docs = *req.num_docs;
      opts.overrides = req.overrides;
      run_demo(opts, log);
      return 0;
    }
    if (std::find(subcommands().begin(), subcommands().end(), req.subcommand) == subcommands().end())
      throw ConfigError("unknown subcommand '" + req.subcommand + "'");
    if (!req.config_path) throw ConfigError("--config: required for " + req.subcommand);
    PipelineConfig cfg = load_pipeline_config(*req.config_path);
    apply_environment(cfg);
    apply_overrides(cfg, req.overrides);
    check_config(cfg);
    Pipeline p(cfg, log);
    const std::string& s = req.subcommand;
    if (s == "validate") p.validate();
    else if (s == "generate") p.generate(req.split);
    else if (s == "define") p.define();
    else if (s == "score") p.score();
    else if (s == "sweep") p.sweep();
    else if (s == "train") p.train();
    else if (s == "eval") p.eval();
    else if (s == "correlate") p.correlate();
    else if (s == "ablate") p.ablate();
    else if (s == "report") p.report();
    log << fmt::format("{}: {} backend calls\n", s, p.backend_calls());
    return 0;
  } catch (const ConfigError& e) {
    err << "sfd " << req.subcommand << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "sfd " << req.subcommand << ": error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sfd
