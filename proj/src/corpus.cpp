// Copyright 2026 The mecpe Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mecpe/corpus.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "mecpe/errors.hpp"

namespace mecpe {

using nlohmann::json;

namespace {

// Convert nlohmann's byte offset into a 1-based line/column pair.
std::pair<std::size_t, std::size_t> line_and_column(std::string_view raw, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < byte && i < raw.size(); ++i) {
    if (raw[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json parse_json(std::string_view raw) {
  try {
    return json::parse(raw);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    auto [line, column] = line_and_column(raw, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(std::string("malformed JSON: ") + e.what(), line, column);
  }
}

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

const json& require(const json& object, const char* key, const std::string& where) {
  if (!object.is_object()) schema_error(where, "expected an object");
  auto it = object.find(key);
  if (it == object.end()) schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

int as_index(const json& j, const std::string& where) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      int value = std::stoi(s, &used);
      if (used == s.size()) return value;
    } catch (const std::exception&) {
    }
  }
  schema_error(where, "expected an utterance index, got " + j.dump());
}

std::string as_string(const json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  schema_error(where, "expected a string, got " + j.dump());
}

Emotion as_emotion(const json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected an emotion string");
  try {
    return parse_emotion(j.get_ref<const std::string&>());
  } catch (const ParseError& e) {
    schema_error(where, e.what());
  }
}

// Canonical schema ----------------------------------------------------------

Conversation canonical_conversation(const json& j, std::size_t position) {
  const std::string where = "conversation #" + std::to_string(position);
  Conversation conv;
  conv.id = as_string(require(j, "id", where), where);
  const std::string cwhere = "conversation '" + conv.id + "'";

  const json& utterances = require(j, "utterances", cwhere);
  if (!utterances.is_array()) schema_error(cwhere, "'utterances' must be a list");
  for (const auto& u : utterances) {
    Utterance utt;
    utt.index = as_index(require(u, "index", cwhere), cwhere);
    const std::string uwhere = cwhere + " utterance " + std::to_string(utt.index);
    utt.speaker = as_string(require(u, "speaker", uwhere), uwhere);
    utt.text = as_string(require(u, "text", uwhere), uwhere);
    if (auto it = u.find("emotion"); it != u.end() && !it->is_null()) {
      utt.gold_emotion = as_emotion(*it, uwhere);
    }
    if (auto it = u.find("media"); it != u.end() && !it->is_null()) {
      if (!it->is_object()) schema_error(uwhere, "'media' must be an object");
      for (const auto& [modality, ref] : it->items()) utt.media[modality] = as_string(ref, uwhere);
    }
    conv.utterances.push_back(std::move(utt));
  }

  if (auto it = j.find("pairs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_error(cwhere, "'pairs' must be a list");
    for (const auto& p : *it) {
      try {
        conv.gold_pairs.push_back(pair_from_json(p));
      } catch (const ParseError& e) {
        schema_error(cwhere, e.what());
      }
    }
  }
  return conv;
}

// ECF release schema -------------------------------------------------------
//
//   {"conversation_ID": 1,
//    "conversation": [{"utterance_ID": 1, "text": ..., "speaker": ...,
//                      "emotion": ..., "video_name": ...}, ...],
//    "emotion-cause_pairs": [["3_surprise", "1"], ...]}
//
// Cause entries may also carry a span suffix ("1_some text"); only the index
// before the first underscore is kept.

int leading_index(const std::string& field, const std::string& where) {
  auto cut = field.find('_');
  return as_index(json(field.substr(0, cut)), where);
}

Conversation ecf_conversation(const json& j, std::size_t position) {
  const std::string where = "ECF conversation #" + std::to_string(position);
  Conversation conv;
  conv.id = as_string(require(j, "conversation_ID", where), where);
  const std::string cwhere = "ECF conversation '" + conv.id + "'";

  const json& utterances = require(j, "conversation", cwhere);
  if (!utterances.is_array()) schema_error(cwhere, "'conversation' must be a list");
  for (const auto& u : utterances) {
    Utterance utt;
    utt.index = as_index(require(u, "utterance_ID", cwhere), cwhere);
    const std::string uwhere = cwhere + " utterance " + std::to_string(utt.index);
    utt.speaker = as_string(require(u, "speaker", uwhere), uwhere);
    utt.text = as_string(require(u, "text", uwhere), uwhere);
    if (auto it = u.find("emotion"); it != u.end() && !it->is_null()) {
      utt.gold_emotion = as_emotion(*it, uwhere);
    }
    if (auto it = u.find("video_name"); it != u.end() && it->is_string()) {
      utt.media["video"] = it->get<std::string>();
    }
    conv.utterances.push_back(std::move(utt));
  }

  if (auto it = j.find("emotion-cause_pairs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_error(cwhere, "'emotion-cause_pairs' must be a list");
    for (const auto& p : *it) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string()) {
        schema_error(cwhere, "pair must be [\"<eu>_<emotion>\", \"<cu>\"], got " + p.dump());
      }
      const auto& head = p[0].get_ref<const std::string&>();
      auto cut = head.find('_');
      if (cut == std::string::npos) schema_error(cwhere, "pair head lacks '_': " + head);
      EmotionCausePair pair;
      pair.emotion_utterance = as_index(json(head.substr(0, cut)), cwhere);
      pair.emotion = as_emotion(json(head.substr(cut + 1)), cwhere);
      pair.cause_utterance =
          p[1].is_string() ? leading_index(p[1].get<std::string>(), cwhere) : as_index(p[1], cwhere);
      conv.gold_pairs.push_back(pair);
    }
  }
  return conv;
}

Corpus corpus_from_json(const json& j, CorpusFormat format) {
  if (!j.is_array()) throw ParseError("expected a top-level list of conversations");
  Corpus corpus;
  corpus.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    corpus.push_back(format == CorpusFormat::canonical_json ? canonical_conversation(j[i], i)
                                                            : ecf_conversation(j[i], i));
  }
  return corpus;
}

void check_conversation(const Conversation& conv, std::vector<Violation>& out) {
  auto report = [&](std::string_view rule, std::string message) {
    out.push_back({conv.id, std::string(rule), std::move(message)});
  };
  if (conv.id.empty()) report(rules::kEmptyId, "conversation id is empty");

  for (std::size_t i = 0; i < conv.utterances.size(); ++i) {
    const auto& u = conv.utterances[i];
    if (u.index != static_cast<int>(i) + 1) {
      report(rules::kIndexSequence, "utterance at position " + std::to_string(i + 1) +
                                        " has index " + std::to_string(u.index));
    }
    if (u.speaker.empty()) {
      report(rules::kEmptySpeaker, "utterance " + std::to_string(u.index) + " has no speaker");
    }
  }

  auto find = [&](int index) -> const Utterance* {
    for (const auto& u : conv.utterances) {
      if (u.index == index) return &u;
    }
    return nullptr;
  };

  for (const auto& p : conv.gold_pairs) {
    const std::string tag = "pair (" + std::to_string(p.emotion_utterance) + ", " +
                            std::string(to_string(p.emotion)) + ", " +
                            std::to_string(p.cause_utterance) + ")";
    const Utterance* eu = find(p.emotion_utterance);
    if (eu == nullptr || find(p.cause_utterance) == nullptr) {
      report(rules::kPairRange, tag + " references a missing utterance");
    }
    if (is_neutral(p.emotion)) report(rules::kNeutralPair, tag + " carries the neutral label");
    if (eu != nullptr && eu->gold_emotion && *eu->gold_emotion != p.emotion) {
      report(rules::kEmotionMismatch, tag + " disagrees with utterance emotion '" +
                                          std::string(to_string(*eu->gold_emotion)) + "'");
    }
  }
}

void check_unique_ids(const std::vector<const Corpus*>& parts, std::vector<Violation>& out) {
  std::set<std::string> seen;
  for (const Corpus* corpus : parts) {
    for (const auto& conv : *corpus) {
      if (!seen.insert(conv.id).second) {
        out.push_back({conv.id, std::string(rules::kDuplicateId),
                       "conversation id '" + conv.id + "' appears more than once"});
      }
    }
  }
}

[[noreturn]] void raise(const std::vector<Violation>& violations) {
  std::ostringstream msg;
  msg << violations.size() << " validation violation(s); first: conversation '"
      << violations.front().conversation_id << "' [" << violations.front().rule << "] "
      << violations.front().message;
  throw ValidationError(msg.str());
}

}  // namespace

const Utterance& Conversation::at(int index) const {
  if (!contains(index)) {
    throw LookupError("utterance " + std::to_string(index) + " not in conversation '" + id + "'");
  }
  return utterances[static_cast<std::size_t>(index - 1)];
}

const Corpus& CorpusSplit::split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "dev") return dev;
  if (name == "test") return test;
  throw LookupError("unknown split '" + std::string(name) + "'");
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "canonical-json") return CorpusFormat::canonical_json;
  if (name == "ecf-json") return CorpusFormat::ecf_json;
  throw ParseError("unknown corpus format '" + std::string(name) + "'");
}

std::vector<Violation> validate(const Corpus& corpus) {
  std::vector<Violation> out;
  for (const auto& conv : corpus) check_conversation(conv, out);
  check_unique_ids({&corpus}, out);
  return out;
}

std::vector<Violation> validate(const CorpusSplit& split) {
  std::vector<Violation> out;
  for (const Corpus* part : {&split.train, &split.dev, &split.test}) {
    for (const auto& conv : *part) check_conversation(conv, out);
  }
  check_unique_ids({&split.train, &split.dev, &split.test}, out);
  return out;
}

std::vector<Violation> check_manifest(const CorpusSplit& split, const json& manifest) {
  std::vector<Violation> out;
  for (const char* name : {"train", "dev", "test"}) {
    auto it = manifest.find(name);
    if (it == manifest.end()) continue;
    const auto expected = it->get<std::size_t>();
    const auto actual = split.split(name).size();
    if (expected != actual) {
      out.push_back({"", std::string(rules::kManifestCount),
                     std::string(name) + " split has " + std::to_string(actual) +
                         " conversations, manifest declares " + std::to_string(expected)});
    }
  }
  return out;
}

Corpus parse_corpus_unchecked(std::string_view raw, CorpusFormat format) {
  return corpus_from_json(parse_json(raw), format);
}

CorpusSplit parse_corpus_split_unchecked(std::string_view raw, CorpusFormat format) {
  json j = parse_json(raw);
  if (!j.is_object()) throw ParseError("expected an object with train/dev/test splits");
  CorpusSplit split;
  for (const auto& [name, value] : j.items()) {
    if (name == "train") {
      split.train = corpus_from_json(value, format);
    } else if (name == "dev") {
      split.dev = corpus_from_json(value, format);
    } else if (name == "test") {
      split.test = corpus_from_json(value, format);
    } else {
      throw ParseError("unknown split '" + name + "'");
    }
  }
  return split;
}

Corpus parse_corpus(std::string_view raw, CorpusFormat format) {
  Corpus corpus = parse_corpus_unchecked(raw, format);
  if (auto v = validate(corpus); !v.empty()) raise(v);
  return corpus;
}

CorpusSplit parse_corpus_split(std::string_view raw, CorpusFormat format) {
  CorpusSplit split = parse_corpus_split_unchecked(raw, format);
  if (auto v = validate(split); !v.empty()) raise(v);
  return split;
}

bool is_split_document(std::string_view raw) {
  for (char c : raw) {
    if (c == ' ' || c == '\n' || c == '\r' || c == '\t') continue;
    return c == '{';
  }
  return false;
}

json to_json(const EmotionCausePair& pair) {
  return json::array({pair.emotion_utterance, std::string(to_string(pair.emotion)),
                      pair.cause_utterance});
}

EmotionCausePair pair_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw ParseError("pair must be [eu, \"emotion\", cu], got " + j.dump());
  }
  return {as_index(j[0], "pair"), as_emotion(j[1], "pair"), as_index(j[2], "pair")};
}

json to_json(const Conversation& conversation) {
  json utterances = json::array();
  for (const auto& u : conversation.utterances) {
    json ju = {{"index", u.index}, {"speaker", u.speaker}, {"text", u.text}};
    if (u.gold_emotion) ju["emotion"] = std::string(to_string(*u.gold_emotion));
    if (!u.media.empty()) ju["media"] = u.media;
    utterances.push_back(std::move(ju));
  }
  json pairs = json::array();
  for (const auto& p : conversation.gold_pairs) pairs.push_back(to_json(p));
  return {{"id", conversation.id}, {"utterances", std::move(utterances)}, {"pairs", std::move(pairs)}};
}

json to_json(const Corpus& corpus) {
  json out = json::array();
  for (const auto& conv : corpus) out.push_back(to_json(conv));
  return out;
}

json to_json(const CorpusSplit& split) {
  return {{"train", to_json(split.train)}, {"dev", to_json(split.dev)}, {"test", to_json(split.test)}};
}

json to_json(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const auto& v : violations) {
    out.push_back({{"conversation_id", v.conversation_id}, {"rule", v.rule}, {"message", v.message}});
  }
  return out;
}

std::string serialize(const Corpus& corpus) { return to_json(corpus).dump(2) + "\n"; }

std::string serialize(const CorpusSplit& split) { return to_json(split).dump(2) + "\n"; }

std::span<const Utterance> history_window(const Conversation& conversation, int target,
                                          int window) {
  if (window < 0) throw std::invalid_argument("history window must be non-negative");
  if (!conversation.contains(target)) {
    throw LookupError("target utterance " + std::to_string(target) + " not in conversation '" +
                      conversation.id + "'");
  }
  const int first = std::max(1, target - window);
  return std::span<const Utterance>(conversation.utterances)
      .subspan(static_cast<std::size_t>(first - 1), static_cast<std::size_t>(target - first + 1));
}

const Conversation& find_conversation(const Corpus& corpus, std::string_view id) {
  for (const auto& conv : corpus) {
    if (conv.id == id) return conv;
  }
  throw LookupError("conversation '" + std::string(id) + "' not found");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, std::string_view contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace mecpe
