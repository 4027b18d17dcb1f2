// src/rationale.cpp

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

#include "sfd/rationale.hpp"

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

bool RationaleSet::all_degenerate() const {
  for (const auto& s : samples)
    if (!s.degenerate) return false;
  return true;
}

std::size_t first_non_degenerate(const std::vector<RationaleSample>& samples) {
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (!samples[i].degenerate) return i;
  return 0;
}

std::map<std::string, RationaleSet> load_rationales(
    const std::filesystem::path& path) {
  std::map<std::string, RationaleSet> out;
  if (!std::filesystem::exists(path)) return out;
  read_jsonl(path, [&](const json& obj, std::size_t lineno) {
    const auto loc = path.string() + ":" + std::to_string(lineno);
    try {
      RationaleSet rset;
      rset.doc_id = obj.at("doc_id").get<std::string>();
      for (const auto& s : obj.at("samples")) {
        RationaleSample sample;
        sample.predicted_labels =
            s.at("predicted_labels").get<std::vector<std::string>>();
        sample.reasoning = s.at("reasoning").get<std::string>();
        sample.degenerate = s.value("degenerate", false);
        rset.samples.push_back(std::move(sample));
      }
      rset.canonical_index = first_non_degenerate(rset.samples);
      std::string id = rset.doc_id;
      out.insert_or_assign(std::move(id), std::move(rset));
    } catch (const json::exception& e) {
      throw ParseError(loc + ": bad rationale record: " + e.what());
    }
  });
  return out;
}

void append_rationales(const std::filesystem::path& path,
                       const RationaleSet& rset) {
  json samples = json::array();
  for (const auto& s : rset.samples)
    samples.push_back({{"predicted_labels", s.predicted_labels},
                       {"reasoning", s.reasoning},
                       {"degenerate", s.degenerate}});
  append_jsonl(path, {{"doc_id", rset.doc_id}, {"samples", samples}});
}

}  // namespace sfd
