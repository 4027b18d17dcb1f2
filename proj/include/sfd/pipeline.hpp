// include/sfd/pipeline.hpp

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

#ifndef SFD_PIPELINE_HPP_
#define SFD_PIPELINE_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/distill_train.hpp"
#include "sfd/embeddings.hpp"
#include "sfd/eval_analysis.hpp"
#include "sfd/llm_gateway.hpp"
#include "sfd/rationale.hpp"
#include "sfd/trust_metrics.hpp"
#include "sfd/util.hpp"

namespace sfd {

// Chat backend kinds: "mock", "synthetic" (offline demo corpus) or "http"
// (OpenAI-compatible endpoint at base_url).
struct ChatSettings {
  std::string backend = "mock";
  std::string model;
  std::string base_url;
  double temperature = 0.0;
  int max_tokens = 512;

  ModelEndpoint endpoint() const;
  std::string backend_id() const;
};

// Embedder kinds: "mock" or "http".
struct EmbedderSettings {
  std::string backend = "mock";
  std::string model;
  std::string base_url;
  std::size_t dim = kDefaultMockDim;

  std::string backend_id() const;
};

struct PipelineConfig {
  std::filesystem::path corpus;
  std::filesystem::path definitions;                 // optional
  std::filesystem::path annotations;                 // optional
  std::filesystem::path cache_dir;                   // default <output>/cache
  std::filesystem::path output_dir;

  ChatSettings teacher;
  ChatSettings judge;
  EmbedderSettings embedder;

  TrustConfig trust;
  TrainConfig train;
  std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
  std::vector<double> sweep_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                                    0.6, 0.7, 0.8, 0.9};
  int parallelism = 1;
  std::uint64_t seed = 0;
  bool tau_overridden = false;

  json to_json() const;
};

struct ConfigOverrides {
  std::optional<double> tau;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<WeightingMode> mode;
  std::optional<LasMapping> las_mapping;
  std::optional<int> parallelism;
};

// Parses a config object. Relative paths resolve against `base_dir`.
// Every problem is reported as one "field: message" line of a single
// ConfigError.
PipelineConfig parse_pipeline_config(const json& obj,
                                     const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Flags win over file values; SFD_CACHE_DIR wins over paths.cache_dir.
void apply_overrides(PipelineConfig& cfg, const ConfigOverrides& overrides);
void apply_environment(PipelineConfig& cfg);

// Path and value checks that need the filesystem. Throws ConfigError.
void check_config(const PipelineConfig& cfg);

// Output file names inside PipelineConfig::output_dir.
namespace outputs {
inline constexpr const char* kEffectiveConfig = "effective_config.json";
inline constexpr const char* kSplit = "split.json";
inline constexpr const char* kRationales = "rationales.jsonl";
inline constexpr const char* kScores = "trust_scores.jsonl";
inline constexpr const char* kGeneratedDefinitions = "definitions.generated.jsonl";
inline constexpr const char* kSweep = "sweep.json";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kManifest = "manifest.jsonl";
inline constexpr const char* kTrain = "train.json";
inline constexpr const char* kEval = "eval.json";
inline constexpr const char* kCorrelation = "correlation.json";
inline constexpr const char* kAblations = "ablations.json";
}  // namespace outputs

struct StageStats {
  std::size_t processed = 0;
  std::size_t skipped = 0;
  std::size_t errors = 0;
};

class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::ostream& log);

  const PipelineConfig& config() const { return cfg_; }
  LlmGateway& gateway() { return *gateway_; }
  EmbeddingService& embeddings() { return *embeddings_; }
  // Chat plus embedding requests that reached a backend.
  std::size_t backend_calls() const;

  void validate();
  StageStats generate(const std::string& split = "all");
  StageStats define();
  StageStats score();
  SweepResult sweep();
  double train();  // returns the tau used
  void eval();
  void correlate();
  void ablate();
  void report();

  // Splits the corpus once and stores the split in the output directory.
  const DatasetSplit& split();
  const std::vector<Document>& corpus();
  LabelCatalog& catalog();

 private:
  void echo_config();
  DefinitionResolver& resolver();
  std::vector<Document> docs_of(const std::vector<std::string>& ids);
  std::map<std::string, TrustScores> load_scores();
  TeacherLabels teacher_labels();
  LabelSpace label_space();
  double resolve_tau();
  std::filesystem::path out(const char* name) const { return cfg_.output_dir / name; }

  PipelineConfig cfg_;
  std::ostream& log_;
  std::unique_ptr<LlmGateway> gateway_;
  std::unique_ptr<EmbeddingService> embeddings_;
  std::optional<std::vector<Document>> corpus_;
  std::optional<LabelCatalog> catalog_;
  std::optional<DatasetSplit> split_;
  std::unique_ptr<DefinitionResolver> resolver_;
};

struct DemoOptions {
  std::filesystem::path output_dir = "sfd-demo";
  std::size_t num_docs = 2000;
  ConfigOverrides overrides;
};

// Config used by the demo: synthetic backends, mock embedder and training
// settings sized for the synthetic corpus.
PipelineConfig demo_config(const std::filesystem::path& output_dir);

// Writes the synthetic corpus (when absent) and runs every stage.
void run_demo(const DemoOptions& options, std::ostream& log);

struct CliRequest {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  ConfigOverrides overrides;
  std::string split = "all";                          // generate
  std::optional<std::filesystem::path> output_dir;    // demo
  std::optional<std::size_t> num_docs;                // demo
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {
      "validate", "generate", "define", "score",  "sweep", "train",
      "eval",     "correlate", "ablate", "report", "demo"};
  return names;
}

// Runs one subcommand. Returns the process exit status: 0 on success, 2 for
// configuration problems, 1 for any other failure. Diagnostics go to `err`.
int run_subcommand(const CliRequest& request, std::ostream& log, std::ostream& err);

}  // namespace sfd

#endif  // SFD_PIPELINE_HPP_
