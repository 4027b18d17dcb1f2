// src/synthetic.cpp

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

#include "sfd/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <random>

#include <fmt/format.h>

#include "sfd/error.hpp"
#include "sfd/util.hpp"

namespace sfd {

namespace {

constexpr std::uint64_t kNoiseSalt = 0x6e6f697365d15717ULL;
constexpr std::size_t kPrimaryHits = 5;
constexpr std::size_t kSecondHits = 3;
constexpr std::size_t kDistractors = 3;
constexpr std::size_t kFiller = 24;
constexpr std::size_t kMinVoteHits = 3;

const std::vector<std::string> kFillerWords = {
    "a",          "the",       "said",       "wherein",    "comprising",
    "first",      "second",    "portion",    "configured", "method",
    "system",     "apparatus", "device",     "unit",       "plurality",
    "element",    "member",    "provided",   "coupled",    "arranged",
    "according",  "embodiment", "least",     "one",        "having",
    "includes",   "respective", "thereof",   "predetermined", "housing",
    "surface",    "position",  "operation",  "control",    "output",
    "input",      "assembly",  "structure",  "body",       "means"};

const std::vector<std::string> kOffTopicWords = {
    "weather",  "garden",   "holiday",   "music",     "painting", "river",
    "mountain", "recipe",   "kitchen",   "football",  "poetry",   "history",
    "village",  "forest",   "ocean",     "festival",  "theatre",  "novel",
    "castle",   "bicycle",  "coffee",    "library",   "museum",   "harvest",
    "journey",  "orchestra", "sunset",   "island",    "desert",   "marathon",
    "tourism",  "costume",  "folklore",  "gossip",    "picnic",   "ballet",
    "meadow",   "lantern",  "saga",      "umbrella",  "vineyard", "anthem"};

const std::vector<std::string> kConnectives = {
    "This assignment follows directly.", "The classification is therefore clear.",
    "Hence these subclasses apply.", "Accordingly the labels fit."};

double unit(std::uint64_t x) { return double(x >> 11) * 0x1.0p-53; }

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::map<std::string, std::size_t>& keyword_index() {
  static const auto index = [] {
    std::map<std::string, std::size_t> m;
    const auto& labels = synthetic_labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (const auto& w : labels[i].keywords) m.emplace(w, i);
    return m;
  }();
  return index;
}

std::vector<std::size_t> keyword_hits(std::string_view text) {
  std::vector<std::size_t> hits(synthetic_labels().size(), 0);
  const auto& index = keyword_index();
  for (const auto& w : words_of(text))
    if (auto it = index.find(w); it != index.end()) ++hits[it->second];
  return hits;
}

std::size_t label_position(const std::string& code) {
  const auto& labels = synthetic_labels();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].code == code) return i;
  return labels.size();
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[rng() % v.size()];
}

std::string between(std::string_view s, std::string_view open,
                    std::string_view close) {
  auto b = s.find(open);
  if (b == std::string_view::npos) return {};
  b += open.size();
  auto e = s.find(close, b);
  if (e == std::string_view::npos) e = s.size();
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> parse_label_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == '[' || c == ']' || c == ' ') continue;
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string teacher_response(const std::string& text,
                             const CompletionRequest& req) {
  const std::uint64_t h = fnv1a64(text);
  const std::uint64_t draw =
      splitmix64(h ^ (std::uint64_t(req.sample_index) * 0x9e3779b97f4a7c15ULL) ^
                 (std::uint64_t(req.retry + 1) << 48));
  if (draw % 100 < 4)
    return "The most fitting subclass is probably one of the listed ones.";

  const bool noisy = synthetic_is_noisy(text);
  auto labels = SyntheticChatBackend::vote_labels(text);
  if (noisy) {
    for (auto& code : labels) code = SyntheticChatBackend::confusion_partner(code);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  }
  const bool consistent = unit(splitmix64(h ^ 0xa1)) < (noisy ? 0.25 : 0.85);
  const bool on_topic = unit(splitmix64(h ^ 0xb2)) < (noisy ? 0.25 : 0.85);

  std::mt19937_64 core_rng(h ^ 0xc3);
  std::string core;
  if (on_topic) {
    for (const auto& code : labels) {
      const auto& kw = synthetic_labels()[label_position(code)].keywords;
      std::vector<std::string> picked;
      for (int i = 0; i < 4; ++i) picked.push_back(pick(kw, core_rng));
      core += fmt::format("The text describes {} which fits {}. ", join(picked), code);
    }
  } else {
    std::vector<std::string> picked;
    for (int i = 0; i < 8; ++i) picked.push_back(pick(kOffTopicWords, core_rng));
    core = fmt::format("The text mentions {}. ", join(picked));
  }

  std::string reasoning = core;
  if (consistent) {
    reasoning += kConnectives[std::size_t(req.sample_index) % kConnectives.size()];
  } else {
    std::mt19937_64 rng(h ^ splitmix64(std::uint64_t(req.sample_index) + 17));
    std::vector<std::string> picked;
    for (int i = 0; i < 12; ++i) picked.push_back(pick(kOffTopicWords, rng));
    reasoning = fmt::format("Considering {}, {}", join(picked), core);
  }
  reasoning.erase(reasoning.find_last_not_of(' ') + 1);

  json out = {{"predicted_labels", labels}, {"reasoning", reasoning}};
  return out.dump(2);
}

std::string judge_response(const std::string& prompt) {
  const std::string text = between(prompt, "Original Text:\n---\n", "\n---\n");
  const auto labels =
      parse_label_list(between(prompt, "Predicted Labels: ", "\n"));
  const auto hits = keyword_hits(text);
  std::size_t supported = 0;
  for (const auto& code : labels) {
    const std::size_t pos = label_position(code);
    if (pos < hits.size() && hits[pos] >= kMinVoteHits) ++supported;
  }
  int base = 3;
  if (!labels.empty() && supported == labels.size()) base = 5;
  if (supported == 0) base = 1;

  const std::uint64_t h = fnv1a64(prompt, 0x4a554447ULL);
  const double u = unit(splitmix64(h));
  int score = base;
  const int toward_middle = base >= 3 ? -1 : 1;
  if (u >= 0.85)
    score = base + 3 * toward_middle;
  else if (u >= 0.7)
    score = base + toward_middle;
  score = std::clamp(score, 1, 5);

  switch (splitmix64(h ^ 0x77) % 3) {
    case 0:
      return std::to_string(score);
    case 1:
      return fmt::format("Score: {}", score);
    default:
      return fmt::format("{}\nThe labels are judged against the text.", score);
  }
}

std::string definition_response(const std::string& prompt) {
  const std::string code = between(prompt, "CPC Code: ", "\n");
  const std::size_t pos = label_position(code);
  if (pos < synthetic_labels().size()) return synthetic_labels()[pos].definition + "\n";
  return fmt::format("Technical subject matter classified under {}.\n", code);
}

}  // namespace

const std::vector<SyntheticLabel>& synthetic_labels() {
  static const std::vector<SyntheticLabel> labels = {
      {"A61B",
       "Diagnosis, surgery and identification: diagnostic imaging, patient "
       "monitoring sensors, endoscope, ultrasound, biopsy, catheter and surgical probe.",
       {"diagnostic", "imaging", "patient", "sensor", "endoscope", "ultrasound",
        "biopsy", "catheter", "probe", "electrode", "monitoring", "surgical"}},
      {"A61K",
       "Preparations for medical purposes: pharmaceutical compound formulation, "
       "dosage, tablet, capsule, drug, vaccine and antibody therapeutic injection.",
       {"pharmaceutical", "compound", "dosage", "tablet", "formulation", "drug",
        "excipient", "capsule", "therapeutic", "injection", "vaccine", "antibody"}},
      {"B25B",
       "Tools for fastening or holding: wrench, spanner, clamp, vise, pliers, "
       "ratchet, socket and screwdriver gripping jaws applying torque.",
       {"wrench", "clamp", "vise", "spanner", "socket", "jaws", "torque",
        "pliers", "ratchet", "gripping", "handle", "screwdriver"}},
      {"B60L",
       "Propulsion of electrically propelled vehicles: electric vehicle battery "
       "charging, traction motor, inverter, regenerative braking and charger.",
       {"electric", "vehicle", "battery", "charging", "traction", "motor",
        "regenerative", "braking", "inverter", "propulsion", "charger", "pantograph"}},
      {"C07D",
       "Heterocyclic compounds: synthesis of heterocyclic ring derivative with "
       "nitrogen or oxygen, pyridine, piperidine, indole, lactam and alkyl substituent.",
       {"heterocyclic", "ring", "pyridine", "synthesis", "nitrogen", "oxygen",
        "derivative", "substituent", "alkyl", "lactam", "piperidine", "indole"}},
      {"F16H",
       "Gearing: gear, gearbox, pinion, shaft, differential, clutch, planetary "
       "gearing, sprocket, pulley, spline, crank and lever mechanisms.",
       {"gear", "gearbox", "shaft", "pinion", "differential", "clutch",
        "planetary", "sprocket", "pulley", "spline", "crank", "lever"}},
      {"G06F",
       "Electric digital data processing: computer processor, memory, cache, "
       "storage, software program instruction, file and operating interface.",
       {"computer", "processor", "memory", "software", "data", "storage",
        "instruction", "interface", "program", "cache", "file", "operating"}},
      {"G06N",
       "Computing based on specific computational models: neural network "
       "learning, model training, inference, layer weights, classifier and tensor prediction.",
       {"neural", "learning", "model", "training", "inference", "layer",
        "weights", "classifier", "prediction", "tensor", "reasoning", "knowledge"}},
      {"H04L",
       "Transmission of digital information: packet protocol, router, routing, "
       "encryption, server, client, bandwidth, ethernet, handshake and datagram.",
       {"packet", "protocol", "router", "transmission", "encryption", "server",
        "client", "bandwidth", "ethernet", "routing", "handshake", "datagram"}},
      {"H04W",
       "Wireless communication networks: wireless cellular radio, antenna, "
       "handover, spectrum, beamforming, subscriber roaming, uplink and downlink carrier.",
       {"wireless", "cellular", "antenna", "handover", "spectrum", "radio",
        "beamforming", "subscriber", "roaming", "uplink", "downlink", "carrier"}},
  };
  return labels;
}

bool synthetic_is_noisy(std::string_view text) {
  return fnv1a64(text, kNoiseSalt) % 1000 < 300;
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.num_docs < 3) throw ValidationError("synthetic corpus needs at least 3 documents");
  if (!(spec.noise_rate >= 0.0 && spec.noise_rate <= 1.0))
    throw ValidationError("noise_rate must lie in [0, 1]");
  const auto& labels = synthetic_labels();
  std::mt19937_64 rng(spec.seed);

  const auto num_noisy =
      static_cast<std::size_t>(std::llround(double(spec.num_docs) * spec.noise_rate));
  std::vector<bool> flags(spec.num_docs, false);
  for (std::size_t i = 0; i < num_noisy; ++i) flags[i] = true;
  for (std::size_t i = flags.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(flags[i - 1], flags[j]);
  }

  SyntheticCorpus out;
  for (const auto& l : labels) out.catalog.add({l.code, l.definition, DefinitionSource::kFileProvided});
  for (std::size_t d = 0; d < spec.num_docs; ++d) {
    const std::size_t primary = rng() % labels.size();
    std::optional<std::size_t> second;
    if (unit(rng()) < spec.second_label_prob) {
      std::size_t s = rng() % (labels.size() - 1);
      second = s >= primary ? s + 1 : s;
    }
    Document doc;
    doc.id = fmt::format("doc-{:05d}", d);
    doc.gold_labels.push_back(labels[primary].code);
    if (second) doc.gold_labels.push_back(labels[*second].code);
    std::sort(doc.gold_labels.begin(), doc.gold_labels.end());

    while (true) {
      std::vector<std::string> words;
      for (std::size_t i = 0; i < kPrimaryHits; ++i) words.push_back(pick(labels[primary].keywords, rng));
      if (second)
        for (std::size_t i = 0; i < kSecondHits; ++i) words.push_back(pick(labels[*second].keywords, rng));
      for (std::size_t i = 0; i < kDistractors; ++i) {
        std::size_t l = rng() % labels.size();
        if (l == primary || (second && l == *second)) continue;
        words.push_back(pick(labels[l].keywords, rng));
      }
      for (std::size_t i = 0; i < kFiller; ++i) words.push_back(pick(kFillerWords, rng));
      for (std::size_t i = words.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(words[i - 1], words[j]);
      }
      std::string text = join(words) + ".";
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      if (synthetic_is_noisy(text) == flags[d]) {
        doc.text = std::move(text);
        break;
      }
    }
    if (flags[d]) out.noisy.insert(doc.id);
    out.documents.push_back(std::move(doc));
  }
  return out;
}

std::vector<AnnotationRecord> synthetic_annotations(
    const SyntheticCorpus& corpus, std::size_t num_items,
    std::size_t num_annotators, std::uint64_t seed) {
  if (num_annotators < 2) throw ValidationError("need at least two annotators");
  std::vector<std::size_t> order(corpus.documents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed ^ 0xa5a5a5a5ULL);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  order.resize(std::min(num_items, order.size()));
  std::sort(order.begin(), order.end());

  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<AnnotationRecord> out;
  for (std::size_t item = 0; item < order.size(); ++item) {
    const auto& doc = corpus.documents[order[item]];
    const double base = corpus.noisy.count(doc.id) ? 1.0 : 5.0;
    for (std::size_t a = 0; a < num_annotators; ++a) {
      if (a + 1 == num_annotators && item % 3 == 2) continue;
      auto rate = [&] {
        return std::clamp(static_cast<int>(std::lround(base + jitter(rng))), 1, 5);
      };
      AnnotationRecord r;
      r.doc_id = doc.id;
      r.annotator_id = fmt::format("annotator-{}", a + 1);
      r.logical_consistency = rate();
      r.task_alignment = rate();
      r.plausibility = rate();
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<std::string> SyntheticChatBackend::vote_labels(std::string_view text) {
  const auto hits = keyword_hits(text);
  const auto& labels = synthetic_labels();
  std::vector<std::size_t> order(hits.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return hits[a] > hits[b]; });
  std::vector<std::string> out;
  for (std::size_t i : order)
    if (hits[i] >= kMinVoteHits) out.push_back(labels[i].code);
  if (out.empty()) out.push_back(labels[order.front()].code);
  std::sort(out.begin(), out.end());
  return out;
}

std::string SyntheticChatBackend::confusion_partner(const std::string& code) {
  const auto& labels = synthetic_labels();
  const std::size_t pos = label_position(code);
  if (pos >= labels.size()) return code;
  return labels[(pos + 3) % labels.size()].code;
}

std::string SyntheticChatBackend::complete(const CompletionRequest& req) {
  const std::string& p = req.prompt;
  constexpr std::string_view kTextMarker = "Patent text:\n---\n";
  if (auto pos = p.find(kTextMarker); pos != std::string::npos) {
    std::string text = p.substr(pos + kTextMarker.size());
    text.erase(text.find_last_not_of(" \n\r\t") + 1);
    return teacher_response(text, req);
  }
  if (p.find("CPC Code: ") != std::string::npos) return definition_response(p);
  if (p.find("Predicted Labels: ") != std::string::npos) return judge_response(p);
  return "unrecognized prompt";
}

}  // namespace sfd
