// include/sfd/rationale.hpp

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

#ifndef SFD_RATIONALE_HPP_
#define SFD_RATIONALE_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sfd {

// One teacher generation. A degenerate sample could not be parsed after
// retries and carries empty labels and reasoning.
struct RationaleSample {
  std::vector<std::string> predicted_labels;
  std::string reasoning;
  bool degenerate = false;

  bool operator==(const RationaleSample&) const = default;
};

// The k samples generated for one document. canonical_index names the
// sample whose reasoning and label set feed alignment and judging; it
// points at a non-degenerate sample whenever one exists.
struct RationaleSet {
  std::string doc_id;
  std::vector<RationaleSample> samples;
  std::size_t canonical_index = 0;

  std::size_t k() const { return samples.size(); }
  bool all_degenerate() const;
  const RationaleSample& canonical() const { return samples.at(canonical_index); }

  bool operator==(const RationaleSet&) const = default;
};

// Index of the first non-degenerate sample, or 0 if all are degenerate.
std::size_t first_non_degenerate(const std::vector<RationaleSample>& samples);

// rationales.jsonl: {"doc_id", "samples": [{"predicted_labels", "reasoning",
// "degenerate"}, ...]}. canonical_index is recomputed on load as the first
// non-degenerate sample.
std::map<std::string, RationaleSet> load_rationales(
    const std::filesystem::path& path);
void append_rationales(const std::filesystem::path& path,
                       const RationaleSet& rset);

}  // namespace sfd

#endif  // SFD_RATIONALE_HPP_
