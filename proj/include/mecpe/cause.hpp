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

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mecpe/corpus.hpp"
#include "mecpe/feature_store.hpp"
#include "mecpe/metrics.hpp"

namespace mecpe {

class GenerativeClient;
struct EmotionPrediction;

inline constexpr std::string_view kDefaultTemplate = "cause-v1";
inline constexpr double kDefaultMatchThreshold = 0.3;

struct PromptConfig {
  int window = 5;
  std::string template_id{kDefaultTemplate};
  bool include_image = false;
};

struct Prompt {
  std::string text;
  std::optional<std::string> image_ref;
  UtteranceKey target;
  std::vector<int> candidates;  // history window indices, target last
};

/// Renders the history window and the question about the target. Neutral
/// emotions are rejected with std::invalid_argument; an unknown target is a
/// LookupError; an unknown template id is a ValidationError.
Prompt build_prompt(const Conversation& conversation, int target, Emotion predicted_emotion,
                    const PromptConfig& config);

struct GeneratedResponse {
  std::string text;
  std::chrono::nanoseconds latency{0};
  std::string client_id;
};

struct Candidate {
  int index = 0;
  std::string text;
};

struct CauseDecision {
  UtteranceKey target;
  std::optional<int> cause;
  double score = 0.0;
  std::optional<std::string> matched_text;
  std::optional<std::string> error;  // generation failure, if any
};

/// Lowercased, punctuation-free, de-duplicated and sorted tokens.
std::vector<std::string> normalized_tokens(std::string_view text);

/// Harmonic mean of token precision and recall between two normalized token sets.
double token_f1(std::string_view response, std::string_view candidate);

/// True when the response normalizes to nothing or to "none".
bool is_no_cause(std::string_view response);

/// Picks the candidate with the highest token F1; ties go to the later
/// candidate (closest to the target). Abstains below `threshold`, at score 0,
/// or on the no-cause sentinel.
CauseDecision match_cause(const GeneratedResponse& response, const std::vector<Candidate>& candidates,
                          double threshold);

using EmotionMap = std::map<UtteranceKey, Emotion>;

EmotionMap emotion_map(const std::vector<EmotionPrediction>& predictions);
EmotionMap gold_emotion_map(const Corpus& corpus);

/// One pair per non-neutral prediction with a present cause. A decision whose
/// target has no prediction is a ConsistencyError.
PairSet assemble_pairs(const EmotionMap& predictions, const std::vector<CauseDecision>& decisions);

enum class HeuristicStrategy { self, previous };

HeuristicStrategy parse_heuristic(std::string_view name);

std::vector<EmotionCausePair> heuristic_causes(const Conversation& conversation,
                                               const EmotionMap& predictions,
                                               HeuristicStrategy strategy);

struct ExtractionConfig {
  PromptConfig prompt;
  double threshold = kDefaultMatchThreshold;
  std::size_t max_in_flight = 4;
};

struct ExtractionResult {
  std::vector<CauseDecision> decisions;  // corpus order
  PairSet pairs;                         // every conversation id present, possibly empty
  std::size_t targets = 0;
  std::size_t failures = 0;
  std::size_t empty_responses = 0;  // replies with no text, e.g. a stub without an entry
};

/// prompt -> generate -> match -> assemble over every non-neutral target of
/// the corpus. Client failures become abstaining decisions and are counted.
ExtractionResult extract_causes(const Corpus& corpus, const EmotionMap& emotions,
                                const GenerativeClient& client, const ExtractionConfig& config);

/// The same shape of result from a heuristic baseline.
ExtractionResult heuristic_extraction(const Corpus& corpus, const EmotionMap& emotions,
                                      HeuristicStrategy strategy);

nlohmann::json to_json(const CauseDecision& decision);
CauseDecision decision_from_json(const nlohmann::json& j);
std::string decisions_jsonl(const std::vector<CauseDecision>& decisions);

}  // namespace mecpe
