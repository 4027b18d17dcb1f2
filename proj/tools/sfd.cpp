// tools/sfd.cpp

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

// Command-line driver: sfd <subcommand> --config <path> [overrides].

#include <CLI11.hpp>

#include <iostream>
#include <map>

#include "sfd/pipeline.hpp"

namespace {

const std::map<std::string, std::string> kDescriptions = {
    {"validate", "Check the config, corpus, definitions and annotations"},
    {"generate", "Generate teacher rationales"},
    {"define", "Fill in missing label definitions with the teacher model"},
    {"score", "Compute trust scores for every document"},
    {"sweep", "Select the filtering threshold on the validation split"},
    {"train", "Train the student model at the selected threshold"},
    {"eval", "Evaluate the student and an unweighted baseline on the test split"},
    {"correlate", "Correlate trust scores with human ratings"},
    {"ablate", "Run the trust-metric ablation matrix"},
    {"report", "Write report.md and report.json"},
    {"demo", "Run every stage on a synthetic corpus with offline backends"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-weighted rationale distillation for multi-label classification"};
  app.require_subcommand(1, 1);

  sfd::CliRequest req;
  std::string config, mode, las_mapping, output;
  double tau = 0.0;
  int k = 0, parallelism = 0;
  std::uint64_t seed = 0;
  std::size_t docs = 0;

  std::map<std::string, CLI::App*> subs;
  for (const auto& name : sfd::subcommands()) {
    CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
    sub->add_option("--config", config, "Pipeline configuration file (JSON)")
        ->required(name != "demo");
    sub->add_option("--tau", tau, "Trust threshold, overrides sweep selection")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--k", k, "Rationale samples per document")->check(CLI::Range(2, 1000));
    sub->add_option("--seed", seed, "Global seed");
    sub->add_option("--mode", mode, "Loss weighting")
        ->check(CLI::IsMember({"soft", "filtered", "unweighted"}));
    sub->add_option("--las-mapping", las_mapping, "Judge score to [0,1] mapping")
        ->check(CLI::IsMember({"centered", "literal", "linear"}));
    sub->add_option("--parallelism", parallelism, "Maximum concurrent workers")
        ->check(CLI::PositiveNumber);
    if (name == "generate")
      sub->add_option("--split", req.split, "Documents to process")
          ->check(CLI::IsMember({"all", "train", "val", "test"}));
    if (name == "demo") {
      sub->add_option("--output", output, "Output directory (default sfd-demo)");
      sub->add_option("--docs", docs, "Synthetic corpus size")->check(CLI::Range(3, 1000000));
    }
    subs[name] = sub;
  }

  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    req.subcommand = name;
    if (!config.empty()) req.config_path = config;
    if (sub->count("--tau")) req.overrides.tau = tau;
    if (sub->count("--k")) req.overrides.k = k;
    if (sub->count("--seed")) req.overrides.seed = seed;
    if (sub->count("--mode")) req.overrides.mode = sfd::parse_weighting_mode(mode);
    if (sub->count("--las-mapping"))
      req.overrides.las_mapping = sfd::parse_las_mapping(las_mapping);
    if (sub->count("--parallelism")) req.overrides.parallelism = parallelism;
    if (!output.empty()) req.output_dir = output;
    if (docs) req.num_docs = docs;
  }
  return sfd::run_subcommand(req, std::cout, std::cerr);
}
