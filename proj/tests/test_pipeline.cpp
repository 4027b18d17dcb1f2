// tests/test_pipeline.cpp

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

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sfd/error.hpp"
#include "sfd/pipeline.hpp"
#include "sfd/synthetic.hpp"
#include "test_helpers.hpp"

using namespace sfd;
using sfd::testing::TempDir;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const json& obj, const fs::path& base = "/tmp") {
  try {
    parse_pipeline_config(obj, base);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

struct CliResult {
  int status = 0;
  std::string output;
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SFD_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// A small synthetic corpus plus a config file pointing at it.
fs::path write_small_project(const TempDir& dir, std::size_t num_docs = 120) {
  SyntheticSpec spec;
  spec.num_docs = num_docs;
  const auto corpus = generate_synthetic_corpus(spec);
  write_documents(dir / "corpus.jsonl", corpus.documents);
  write_label_definitions(dir / "defs.jsonl", corpus.catalog);
  write_annotations(dir / "ann.jsonl", synthetic_annotations(corpus, 40, 2, 0));
  const json cfg = {
      {"paths",
       {{"corpus", "corpus.jsonl"},
        {"definitions", "defs.jsonl"},
        {"annotations", "ann.jsonl"},
        {"output_dir", "out"}}},
      {"backends", {{"teacher", {{"backend", "synthetic"}}}, {"judge", {{"backend", "synthetic"}}}}},
      {"train", {{"epochs", 3}, {"feature_dim", 4096}, {"learning_rate", 0.1}, {"targets", "teacher"}}},
      {"sweep", {{"grid", {0.0, 0.3, 0.6}}}}};
  std::ofstream(dir / "sfd.json") << cfg.dump(2);
  return dir / "sfd.json";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config diagnostics name the field") {
    const auto missing = config_error(json{{"paths", {{"output_dir", "o"}}}});
    CHECK(missing.find("paths.corpus") != std::string::npos);

    const auto several = config_error(json{{"paths", {{"corpus", "c"}}},
                                           {"bogus", 1},
                                           {"parallelism", 0},
                                           {"backends", {{"teacher", {{"backend", "http"}}}}}});
    CHECK(several.find("paths.output_dir") != std::string::npos);
    CHECK(several.find("bogus") != std::string::npos);
    CHECK(several.find("parallelism") != std::string::npos);
    CHECK(several.find("backends.teacher.base_url") != std::string::npos);

    const auto types = config_error(json{{"paths", {{"corpus", "c"}, {"output_dir", "o"}}},
                                         {"train", {{"mode", "sometimes"}, {"epochs", "many"}}}});
    CHECK(types.find("train.mode") != std::string::npos);
    CHECK(types.find("train.epochs") != std::string::npos);

    CHECK(config_error(json{{"paths", {{"corpus", "c"}, {"output_dir", "o"}}}}).empty());
  }

  TEST_CASE("relative paths, defaults and environment") {
    const auto cfg = parse_pipeline_config(json{{"paths", {{"corpus", "c.jsonl"}, {"output_dir", "o"}}}},
                                           "/base");
    CHECK(cfg.corpus == fs::path("/base/c.jsonl"));
    CHECK(cfg.cache_dir == fs::path("/base/o/cache"));
    CHECK(cfg.trust.k == 3);
    CHECK(cfg.trust.weights == kEqualWeights);

    PipelineConfig env = cfg;
    setenv("SFD_CACHE_DIR", "/elsewhere", 1);
    apply_environment(env);
    unsetenv("SFD_CACHE_DIR");
    CHECK(env.cache_dir == fs::path("/elsewhere"));

    // The effective configuration parses back to itself.
    const auto back = parse_pipeline_config(cfg.to_json(), "/unused");
    CHECK(back.to_json() == cfg.to_json());
  }

  TEST_CASE("flags win over file values") {
    auto cfg = parse_pipeline_config(
        json{{"paths", {{"corpus", "c"}, {"output_dir", "o"}}},
             {"trust", {{"k", 5}, {"las_mapping", "linear"}}},
             {"train", {{"tau", 0.2}, {"mode", "soft"}}},
             {"seed", 4}},
        "/b");
    ConfigOverrides o;
    o.tau = 0.7;
    o.k = 4;
    o.seed = 11;
    o.mode = WeightingMode::kUnweighted;
    o.las_mapping = LasMapping::kLiteral;
    o.parallelism = 3;
    apply_overrides(cfg, o);
    CHECK(cfg.train.tau == 0.7);
    CHECK(cfg.tau_overridden);
    CHECK(cfg.trust.k == 4);
    CHECK(cfg.seed == 11);
    CHECK(cfg.train.mode == WeightingMode::kUnweighted);
    CHECK(cfg.trust.las_mapping == LasMapping::kLiteral);
    CHECK(cfg.parallelism == 3);
    o = {};
    o.k = 1;
    CHECK_THROWS_AS(apply_overrides(cfg, o), ConfigError);
  }

  TEST_CASE("check_config reports missing files") {
    TempDir dir;
    auto cfg = parse_pipeline_config(json{{"paths", {{"corpus", "nope.jsonl"}, {"output_dir", "o"}}}},
                                     dir.path());
    try {
      check_config(cfg);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("paths.corpus") != std::string::npos);
    }
  }

  TEST_CASE("binary exit codes and diagnostics") {
    TempDir dir;
    std::ofstream(dir / "bad.json") << R"({"paths": {"output_dir": "o"}})";
    auto r = run_cli("validate --config " + (dir / "bad.json").string());
    CHECK(r.status == 2);
    CHECK(r.output.find("paths.corpus") != std::string::npos);

    r = run_cli("validate --config " + (dir / "absent.json").string());
    CHECK(r.status != 0);

    r = run_cli("score");
    CHECK(r.status != 0);

    r = run_cli("train --config " + (dir / "bad.json").string() + " --mode sometimes");
    CHECK(r.status != 0);

    const auto cfg = write_small_project(dir);
    r = run_cli("validate --config " + cfg.string());
    CHECK(r.status == 0);
    CHECK(r.output.find("120 documents") != std::string::npos);
  }

  TEST_CASE("stages run from a config and are resumable") {
    TempDir dir;
    const auto cfg = write_small_project(dir);
    const auto out = dir / "out";
    auto r = run_cli("score --config " + cfg.string());
    REQUIRE(r.status == 0);
    CHECK(r.output.find("score: 0 backend calls") == std::string::npos);
    const auto scores = slurp(out / "trust_scores.jsonl");

    r = run_cli("score --config " + cfg.string());
    CHECK(r.status == 0);
    CHECK(r.output.find("score: 0 backend calls") != std::string::npos);
    r = run_cli("generate --config " + cfg.string());
    CHECK(r.output.find("generate: 0 backend calls") != std::string::npos);
    CHECK(slurp(out / "trust_scores.jsonl") == scores);

    for (const char* stage : {"sweep", "train", "eval", "correlate", "ablate", "report"}) {
      r = run_cli(std::string(stage) + " --config " + cfg.string());
      CHECK_MESSAGE(r.status == 0, stage << ": " << r.output);
    }
    CHECK(fs::exists(out / "report.md"));
    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "model.bin"));

    // Flag overrides reach the stage and are echoed in the effective config.
    r = run_cli("train --config " + cfg.string() + " --tau 0.25 --mode soft");
    CHECK(r.status == 0);
    const json effective = json::parse(slurp(out / "effective_config.json"));
    CHECK(effective.at("train").at("tau").get<double>() == 0.25);
    CHECK(effective.at("train").at("mode").get<std::string>() == "soft");
    const json train_out = json::parse(slurp(out / "train.json"));
    CHECK(train_out.at("tau").get<double>() == 0.25);
  }

  TEST_CASE("changing trust settings over existing scores is refused") {
    TempDir dir;
    const auto cfg = write_small_project(dir, 40);
    REQUIRE(run_cli("score --config " + cfg.string()).status == 0);
    const auto r = run_cli("score --config " + cfg.string() + " --las-mapping linear");
    CHECK(r.status != 0);
  }

  TEST_CASE("demo is deterministic across parallelism") {
    TempDir dir;
    std::ostringstream log;
    CliRequest req;
    req.subcommand = "demo";
    req.output_dir = dir / "a";
    req.num_docs = 200;
    CHECK(run_subcommand(req, log, log) == 0);
    req.output_dir = dir / "b";
    req.overrides.parallelism = 4;
    CHECK(run_subcommand(req, log, log) == 0);
    CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
    CHECK(slurp(dir / "a" / "report.md") == slurp(dir / "b" / "report.md"));
    CHECK(slurp(dir / "a" / "trust_scores.jsonl") == slurp(dir / "b" / "trust_scores.jsonl"));
    CHECK(slurp(dir / "a" / "definitions.generated.jsonl") ==
          slurp(dir / "b" / "definitions.generated.jsonl"));

    std::ostringstream again;
    req.output_dir = dir / "a";
    req.overrides = {};
    CHECK(run_subcommand(req, again, again) == 0);
    CHECK(again.str().find("demo: done, 0 backend calls") != std::string::npos);
  }
}
