// src/corpus.cpp

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

#include "sfd/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

namespace {

std::string where(const std::filesystem::path& path, std::size_t lineno) {
  return path.string() + ":" + std::to_string(lineno);
}

std::string require_string(const json& obj, const char* key,
                           const std::string& loc) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ParseError(loc + ": missing or non-string field \"" + key + "\"");
  return it->get<std::string>();
}

int require_score(const json& obj, const char* key, const std::string& loc) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_integer())
    throw ParseError(loc + ": missing or non-integer field \"" + key + "\"");
  auto v = it->get<std::int64_t>();
  if (v < 1 || v > 5)
    throw ValidationError(loc + ": " + key + " = " + std::to_string(v) +
                          " outside 1-5");
  return static_cast<int>(v);
}

}  // namespace

bool is_valid_label_code(std::string_view code) {
  if (code.size() < 4) return false;
  auto upper = [](char c) { return c >= 'A' && c <= 'Z'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!upper(code[0]) || !digit(code[1]) || !digit(code[2]) || !upper(code[3]))
    return false;
  for (std::size_t i = 4; i < code.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(code[i]);
    if (c <= ' ' || c >= 0x7f) return false;
  }
  return true;
}

std::string to_string(DefinitionSource s) {
  return s == DefinitionSource::kLlmGenerated ? "llm-generated"
                                              : "file-provided";
}

void LabelCatalog::add(LabelDefinition def) {
  if (!is_valid_label_code(def.code))
    throw ValidationError("invalid label code \"" + def.code + "\"");
  if (def.definition.empty())
    throw ValidationError("empty definition for " + def.code);
  if (entries_.count(def.code))
    throw ValidationError("duplicate definition for " + def.code);
  std::string key = def.code;
  entries_.emplace(std::move(key), std::move(def));
}

void LabelCatalog::put(LabelDefinition def) {
  if (!is_valid_label_code(def.code))
    throw ValidationError("invalid label code \"" + def.code + "\"");
  if (def.definition.empty())
    throw ValidationError("empty definition for " + def.code);
  std::string key = def.code;
  entries_.insert_or_assign(std::move(key), std::move(def));
}

const LabelDefinition* LabelCatalog::find(std::string_view code) const {
  auto it = entries_.find(code);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> LabelCatalog::codes() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [code, def] : entries_) out.push_back(code);
  return out;
}

int AnnotationRecord::score(Criterion c) const {
  switch (c) {
    case Criterion::kLogicalConsistency:
      return logical_consistency;
    case Criterion::kTaskAlignment:
      return task_alignment;
    case Criterion::kPlausibility:
      return plausibility;
  }
  return 0;
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  read_jsonl(path, [&](const json& obj, std::size_t lineno) {
    const auto loc = where(path, lineno);
    Document doc;
    doc.id = require_string(obj, "id", loc);
    doc.text = require_string(obj, "text", loc);
    if (doc.id.empty()) throw ValidationError(loc + ": empty id");
    if (doc.text.empty())
      throw ValidationError(loc + ": empty text for document " + doc.id);
    auto labels = obj.find("labels");
    if (labels == obj.end() || !labels->is_array())
      throw ParseError(loc + ": missing or non-array field \"labels\"");
    std::set<std::string> codes;
    for (const auto& l : *labels) {
      if (!l.is_string())
        throw ParseError(loc + ": non-string label in document " + doc.id);
      auto code = l.get<std::string>();
      if (!is_valid_label_code(code))
        throw ValidationError(loc + ": invalid label code \"" + code +
                              "\" in document " + doc.id);
      codes.insert(std::move(code));
    }
    if (codes.empty())
      throw ValidationError(loc + ": empty gold label set for document " +
                            doc.id);
    doc.gold_labels.assign(codes.begin(), codes.end());
    if (!seen.insert(doc.id).second)
      throw ValidationError(loc + ": duplicate document id \"" + doc.id + "\"");
    docs.push_back(std::move(doc));
  });
  return docs;
}

void write_documents(const std::filesystem::path& path,
                     const std::vector<Document>& docs) {
  std::vector<json> records;
  records.reserve(docs.size());
  for (const auto& d : docs)
    records.push_back({{"id", d.id}, {"text", d.text}, {"labels", d.gold_labels}});
  write_jsonl(path, records);
}

LabelCatalog load_label_definitions(const std::filesystem::path& path) {
  LabelCatalog catalog;
  read_jsonl(path, [&](const json& obj, std::size_t lineno) {
    const auto loc = where(path, lineno);
    LabelDefinition def;
    def.code = require_string(obj, "code", loc);
    def.definition = require_string(obj, "definition", loc);
    if (auto it = obj.find("source"); it != obj.end() && it->is_string() &&
                                      it->get<std::string>() == "llm-generated")
      def.source = DefinitionSource::kLlmGenerated;
    try {
      catalog.add(std::move(def));
    } catch (const ValidationError& e) {
      throw ValidationError(loc + ": " + e.what());
    }
  });
  return catalog;
}

void write_label_definitions(const std::filesystem::path& path,
                             const LabelCatalog& catalog) {
  std::vector<json> records;
  for (const auto& [code, def] : catalog) {
    json r = {{"code", code}, {"definition", def.definition}};
    if (def.source == DefinitionSource::kLlmGenerated)
      r["source"] = to_string(def.source);
    records.push_back(std::move(r));
  }
  write_jsonl(path, records);
}

DatasetSplit split_dataset(const std::vector<Document>& corpus,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw ValidationError("split ratios must be positive");
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");
  const std::size_t n = corpus.size();
  if (n < 3)
    throw ValidationError("corpus too small to split: " + std::to_string(n) +
                          " documents, need at least 3");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (const auto& d : corpus) ids.push_back(d.id);
  std::sort(ids.begin(), ids.end());

  std::mt19937_64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }

  std::array<std::size_t, 3> sizes{};
  sizes[0] = static_cast<std::size_t>(std::llround(ratios[0] * n));
  sizes[1] = static_cast<std::size_t>(std::llround(ratios[1] * n));
  sizes[0] = std::min(sizes[0], n);
  sizes[1] = std::min(sizes[1], n - sizes[0]);
  sizes[2] = n - sizes[0] - sizes[1];
  // Every split non-empty: borrow from the largest.
  for (auto& s : sizes) {
    if (s == 0) {
      auto largest = std::max_element(sizes.begin(), sizes.end());
      --*largest;
      s = 1;
    }
  }

  DatasetSplit split;
  split.seed = seed;
  auto first = ids.begin();
  split.train_ids.assign(first, first + sizes[0]);
  first += sizes[0];
  split.val_ids.assign(first, first + sizes[1]);
  first += sizes[1];
  split.test_ids.assign(first, ids.end());
  return split;
}

std::vector<AnnotationRecord> load_annotations(
    const std::filesystem::path& path) {
  std::vector<AnnotationRecord> records;
  std::set<std::pair<std::string, std::string>> seen;
  read_jsonl(path, [&](const json& obj, std::size_t lineno) {
    const auto loc = where(path, lineno);
    AnnotationRecord r;
    r.doc_id = require_string(obj, "doc_id", loc);
    r.annotator_id = require_string(obj, "annotator_id", loc);
    r.logical_consistency = require_score(obj, "logical_consistency", loc);
    r.task_alignment = require_score(obj, "task_alignment", loc);
    r.plausibility = require_score(obj, "plausibility", loc);
    if (!seen.emplace(r.doc_id, r.annotator_id).second)
      throw ValidationError(loc + ": duplicate annotation for (" + r.doc_id +
                            ", " + r.annotator_id + ")");
    records.push_back(std::move(r));
  });
  return records;
}

void write_annotations(const std::filesystem::path& path,
                       const std::vector<AnnotationRecord>& records) {
  std::vector<json> out;
  out.reserve(records.size());
  for (const auto& r : records)
    out.push_back({{"doc_id", r.doc_id},
                   {"annotator_id", r.annotator_id},
                   {"logical_consistency", r.logical_consistency},
                   {"task_alignment", r.task_alignment},
                   {"plausibility", r.plausibility}});
  write_jsonl(path, out);
}

ValidationReport validate_corpus(const std::vector<Document>& corpus,
                                 const LabelCatalog& catalog) {
  std::set<std::string> labels, undefined;
  for (const auto& d : corpus)
    for (const auto& code : d.gold_labels) {
      labels.insert(code);
      if (!catalog.contains(code)) undefined.insert(code);
    }
  ValidationReport report;
  report.undefined_codes.assign(undefined.begin(), undefined.end());
  report.num_documents = corpus.size();
  report.num_labels = labels.size();
  return report;
}

std::vector<Document> select_documents(const std::vector<Document>& corpus,
                                       const std::vector<std::string>& ids) {
  std::unordered_map<std::string_view, const Document*> by_id;
  by_id.reserve(corpus.size());
  for (const auto& d : corpus) by_id.emplace(d.id, &d);
  std::vector<Document> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw ValidationError("unknown document id \"" + id + "\"");
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace sfd
