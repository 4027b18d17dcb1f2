// include/sfd/corpus.hpp

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

#ifndef SFD_CORPUS_HPP_
#define SFD_CORPUS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sfd {

// Subclass-level code: at least 4 characters, starting letter-digit-digit-
// letter ("G06F", "H04L"). Anything after the fourth character must be
// printable ASCII without spaces.
bool is_valid_label_code(std::string_view code);

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> gold_labels;  // sorted, unique

  bool operator==(const Document&) const = default;
};

enum class DefinitionSource { kLlmGenerated, kFileProvided };

struct LabelDefinition {
  std::string code;
  std::string definition;
  DefinitionSource source = DefinitionSource::kFileProvided;

  bool operator==(const LabelDefinition&) const = default;
};

// Exactly one definition per code; iteration is in code order.
class LabelCatalog {
 public:
  // Throws ValidationError on duplicate code, invalid code or empty text.
  void add(LabelDefinition def);
  // Inserts or replaces.
  void put(LabelDefinition def);

  const LabelDefinition* find(std::string_view code) const;
  bool contains(std::string_view code) const { return find(code) != nullptr; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::vector<std::string> codes() const;

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

 private:
  std::map<std::string, LabelDefinition, std::less<>> entries_;
};

struct DatasetSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
  std::uint64_t seed = 0;

  bool operator==(const DatasetSplit&) const = default;
};

enum class Criterion { kLogicalConsistency, kTaskAlignment, kPlausibility };

struct AnnotationRecord {
  std::string doc_id;
  std::string annotator_id;
  int logical_consistency = 0;
  int task_alignment = 0;
  int plausibility = 0;

  int score(Criterion c) const;
  bool operator==(const AnnotationRecord&) const = default;
};

// documents.jsonl: {"id", "text", "labels"} per line. Errors name the line
// number or the offending id.
std::vector<Document> load_documents(const std::filesystem::path& path);
void write_documents(const std::filesystem::path& path,
                     const std::vector<Document>& docs);

// label_defs.jsonl: {"code", "definition"} per line; an optional "source"
// field ("llm-generated" / "file-provided") round-trips generated entries.
LabelCatalog load_label_definitions(const std::filesystem::path& path);
void write_label_definitions(const std::filesystem::path& path,
                             const LabelCatalog& catalog);

// Seeded permutation of the corpus ids, cut by ratio. The cut points are
// rounded so that each split size is within 1 of ratio * N and non-empty.
DatasetSplit split_dataset(const std::vector<Document>& corpus,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path);
void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records);

// Gold codes missing from the catalog, sorted. Loading never fails on these;
// they are reported so that definitions can be generated.
struct ValidationReport {
  std::vector<std::string> undefined_codes;
  std::size_t num_documents = 0;
  std::size_t num_labels = 0;
};
ValidationReport validate_corpus(const std::vector<Document>& corpus,
                                 const LabelCatalog& catalog);

// Selects documents by id in the order of `ids`. Throws ValidationError for
// unknown ids.
std::vector<Document> select_documents(const std::vector<Document>& corpus,
                                       const std::vector<std::string>& ids);

std::string to_string(DefinitionSource s);

}  // namespace sfd

#endif  // SFD_CORPUS_HPP_
