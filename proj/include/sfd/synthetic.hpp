// include/sfd/synthetic.hpp

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

#ifndef SFD_SYNTHETIC_HPP_
#define SFD_SYNTHETIC_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sfd/corpus.hpp"
#include "sfd/llm_gateway.hpp"

// Offline stand-in for a patent corpus and its teacher/judge models. Documents
// are drawn from per-label keyword pools; a fixed fraction is marked noisy and
// the synthetic teacher corrupts exactly those documents.

namespace sfd {

struct SyntheticLabel {
  std::string code;
  std::string definition;
  std::vector<std::string> keywords;
};

const std::vector<SyntheticLabel>& synthetic_labels();

struct SyntheticSpec {
  std::size_t num_docs = 2000;
  double noise_rate = 0.3;
  double second_label_prob = 0.3;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  std::vector<Document> documents;
  LabelCatalog catalog;           // every label defined
  std::set<std::string> noisy;    // doc ids the teacher corrupts
};

// Noise membership is a function of the text alone so the backend can
// recover it. The generator redraws filler until the predicate agrees with
// the assigned flag, which keeps the noisy fraction exact.
bool synthetic_is_noisy(std::string_view text);

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec);

// Annotation records from `num_annotators` raters on `num_items` documents.
// Each criterion score is round(5 - 4 * noisy + jitter) clamped to [1, 5]
// with jitter in [-1, 1]; the last annotator skips every third item.
std::vector<AnnotationRecord> synthetic_annotations(
    const SyntheticCorpus& corpus, std::size_t num_items,
    std::size_t num_annotators, std::uint64_t seed);

// Chat backend that answers teacher, definition and judge prompts for the
// synthetic corpus. Responses depend only on the request.
class SyntheticChatBackend : public ChatBackend {
 public:
  std::string complete(const CompletionRequest& req) override;

  // Labels whose keywords occur at least `min_hits` times, strongest first;
  // never empty.
  static std::vector<std::string> vote_labels(std::string_view text);
  // Label the teacher confuses `code` with on noisy documents.
  static std::string confusion_partner(const std::string& code);
};

}  // namespace sfd

#endif  // SFD_SYNTHETIC_HPP_
