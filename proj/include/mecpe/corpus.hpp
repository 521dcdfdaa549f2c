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

#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecpe/emotion.hpp"

namespace mecpe {

struct Utterance {
  int index = 0;  // 1-based position within the conversation
  std::string speaker;
  std::string text;
  std::optional<Emotion> gold_emotion;
  std::map<std::string, std::string> media;  // modality -> opaque clip reference

  bool operator==(const Utterance&) const = default;
};

/// (emotion utterance, emotion category, cause utterance). The cause may
/// precede, equal, or follow the emotion utterance.
struct EmotionCausePair {
  int emotion_utterance = 0;
  Emotion emotion = Emotion::neutral;
  int cause_utterance = 0;

  auto operator<=>(const EmotionCausePair&) const = default;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<EmotionCausePair> gold_pairs;

  bool operator==(const Conversation&) const = default;

  bool contains(int index) const {
    return index >= 1 && index <= static_cast<int>(utterances.size());
  }
  /// Throws LookupError when the index is outside the conversation.
  const Utterance& at(int index) const;
};

using Corpus = std::vector<Conversation>;

struct CorpusSplit {
  Corpus train;
  Corpus dev;
  Corpus test;

  bool operator==(const CorpusSplit&) const = default;

  /// "train", "dev" or "test"; anything else is a LookupError.
  const Corpus& split(std::string_view name) const;
};

enum class CorpusFormat { canonical_json, ecf_json };

CorpusFormat parse_corpus_format(std::string_view name);

struct Violation {
  std::string conversation_id;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// Rule identifiers reported by validate().
namespace rules {
inline constexpr std::string_view kEmptyId = "empty-id";
inline constexpr std::string_view kDuplicateId = "duplicate-id";
inline constexpr std::string_view kIndexSequence = "index-sequence";
inline constexpr std::string_view kEmptySpeaker = "empty-speaker";
inline constexpr std::string_view kPairRange = "pair-range";
inline constexpr std::string_view kNeutralPair = "neutral-pair";
inline constexpr std::string_view kEmotionMismatch = "emotion-mismatch";
inline constexpr std::string_view kManifestCount = "manifest-count";
}  // namespace rules

/// Empty iff every conversation invariant holds and ids are unique.
std::vector<Violation> validate(const Corpus& corpus);
std::vector<Violation> validate(const CorpusSplit& split);

/// Compares split sizes against a release manifest {"train": n, "dev": n, "test": n}.
std::vector<Violation> check_manifest(const CorpusSplit& split, const nlohmann::json& manifest);

/// Parses without enforcing invariants, so that validate() can report them.
/// Syntax problems raise ParseError with line/column.
Corpus parse_corpus_unchecked(std::string_view raw, CorpusFormat format);
CorpusSplit parse_corpus_split_unchecked(std::string_view raw, CorpusFormat format);

/// Parse and validate a flat list of conversations. Invariant violations
/// raise ValidationError naming the conversation and rule.
Corpus parse_corpus(std::string_view raw, CorpusFormat format);

/// Parse and validate a {"train": [...], "dev": [...], "test": [...]} document.
CorpusSplit parse_corpus_split(std::string_view raw, CorpusFormat format);

/// True when the document's top level is an object of splits rather than a list.
bool is_split_document(std::string_view raw);

nlohmann::json to_json(const Conversation& conversation);
nlohmann::json to_json(const Corpus& corpus);
nlohmann::json to_json(const CorpusSplit& split);
nlohmann::json to_json(const std::vector<Violation>& violations);

/// Canonical pair encoding [eu, "emotion", cu].
nlohmann::json to_json(const EmotionCausePair& pair);
EmotionCausePair pair_from_json(const nlohmann::json& j);

std::string serialize(const Corpus& corpus);
std::string serialize(const CorpusSplit& split);

/// Up to `window` utterances immediately preceding `target`, followed by the
/// target itself. Requires consecutive 1-based indices (a validated corpus).
std::span<const Utterance> history_window(const Conversation& conversation, int target,
                                          int window);

/// Throws LookupError when absent.
const Conversation& find_conversation(const Corpus& corpus, std::string_view id);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace mecpe
