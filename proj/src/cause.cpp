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

#include "mecpe/cause.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mecpe/client.hpp"
#include "mecpe/errors.hpp"
#include "mecpe/fusion.hpp"

namespace mecpe {

using nlohmann::json;

namespace {

constexpr std::string_view kTaskLine =
    "Below is part of a conversation. Identify the utterance that caused the emotion of the "
    "target utterance.";

std::optional<std::string> image_reference(const Utterance& u) {
  for (const char* key : {"image", "video"}) {
    if (auto it = u.media.find(key); it != u.media.end()) return it->second;
  }
  if (!u.media.empty()) return u.media.begin()->second;
  return std::nullopt;
}

}  // namespace

Prompt build_prompt(const Conversation& conversation, int target, Emotion predicted_emotion,
                    const PromptConfig& config) {
  if (is_neutral(predicted_emotion)) {
    throw std::invalid_argument("neutral targets are not sent to cause extraction");
  }
  if (config.template_id != kDefaultTemplate) {
    throw ValidationError("unknown prompt template '" + config.template_id + "'");
  }
  const auto window = history_window(conversation, target, config.window);
  const Utterance& focus = window.back();

  Prompt prompt;
  prompt.target = {conversation.id, target};
  prompt.text = std::string(kTaskLine) + "\n";
  for (const auto& u : window.first(window.size() - 1)) {
    prompt.text += "U" + std::to_string(u.index) + " (" + u.speaker + "): " + u.text + "\n";
  }
  prompt.text += "The speaker " + focus.speaker + " expressed " +
                 std::string(to_string(predicted_emotion)) + " in utterance U" +
                 std::to_string(target) + ": \"" + focus.text +
                 "\". Which earlier utterance caused this emotion? Reply with that utterance's "
                 "text, or 'none'.";
  for (const auto& u : window) prompt.candidates.push_back(u.index);
  if (config.include_image) prompt.image_ref = image_reference(focus);
  return prompt;
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::set<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.insert(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    }
  }
  flush();
  return {tokens.begin(), tokens.end()};
}

namespace {

double token_f1(const std::vector<std::string>& response, const std::vector<std::string>& candidate) {
  if (response.empty() || candidate.empty()) return 0.0;
  std::vector<std::string> common;
  std::set_intersection(response.begin(), response.end(), candidate.begin(), candidate.end(),
                        std::back_inserter(common));
  if (common.empty()) return 0.0;
  const double precision = static_cast<double>(common.size()) / static_cast<double>(response.size());
  const double recall = static_cast<double>(common.size()) / static_cast<double>(candidate.size());
  return 2.0 * precision * recall / (precision + recall);
}

bool is_no_cause(const std::vector<std::string>& tokens) {
  return tokens.empty() || (tokens.size() == 1 && tokens.front() == "none");
}

}  // namespace

double token_f1(std::string_view response, std::string_view candidate) {
  return token_f1(normalized_tokens(response), normalized_tokens(candidate));
}

bool is_no_cause(std::string_view response) { return is_no_cause(normalized_tokens(response)); }

CauseDecision match_cause(const GeneratedResponse& response, const std::vector<Candidate>& candidates,
                          double threshold) {
  if (candidates.empty()) throw std::invalid_argument("match_cause needs at least one candidate");
  CauseDecision decision;
  const auto tokens = normalized_tokens(response.text);
  if (is_no_cause(tokens)) return decision;

  const Candidate* best = nullptr;
  double best_score = -1.0;
  for (const auto& c : candidates) {
    const double score = token_f1(tokens, normalized_tokens(c.text));
    if (score >= best_score) {
      best = &c;
      best_score = score;
    }
  }
  decision.score = best_score;
  if (best_score > 0.0 && best_score >= threshold) {
    decision.cause = best->index;
    decision.matched_text = best->text;
  }
  return decision;
}

EmotionMap emotion_map(const std::vector<EmotionPrediction>& predictions) {
  EmotionMap out;
  for (const auto& p : predictions) {
    if (!out.emplace(p.key, p.predicted).second) {
      throw ConsistencyError("duplicate prediction for " + to_string(p.key));
    }
  }
  return out;
}

EmotionMap gold_emotion_map(const Corpus& corpus) {
  EmotionMap out;
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      if (u.gold_emotion) out.emplace(UtteranceKey{conv.id, u.index}, *u.gold_emotion);
    }
  }
  return out;
}

PairSet assemble_pairs(const EmotionMap& predictions, const std::vector<CauseDecision>& decisions) {
  PairSet out;
  for (const auto& d : decisions) {
    auto it = predictions.find(d.target);
    if (it == predictions.end()) {
      throw ConsistencyError("cause decision for " + to_string(d.target) +
                             " has no emotion prediction");
    }
    if (is_neutral(it->second) || !d.cause) continue;
    out[d.target.conversation_id].push_back({d.target.utterance_index, it->second, *d.cause});
  }
  return out;
}

HeuristicStrategy parse_heuristic(std::string_view name) {
  if (name == "self") return HeuristicStrategy::self;
  if (name == "previous") return HeuristicStrategy::previous;
  throw ParseError("unknown heuristic '" + std::string(name) + "'");
}

std::vector<EmotionCausePair> heuristic_causes(const Conversation& conversation,
                                               const EmotionMap& predictions,
                                               HeuristicStrategy strategy) {
  std::vector<EmotionCausePair> out;
  for (const auto& u : conversation.utterances) {
    auto it = predictions.find({conversation.id, u.index});
    if (it == predictions.end() || is_neutral(it->second)) continue;
    int cause = u.index;
    if (strategy == HeuristicStrategy::previous && conversation.contains(u.index - 1)) {
      cause = u.index - 1;
    }
    out.push_back({u.index, it->second, cause});
  }
  return out;
}

ExtractionResult extract_causes(const Corpus& corpus, const EmotionMap& emotions,
                                const GenerativeClient& client, const ExtractionConfig& config) {
  if (config.prompt.window < 0) throw ValidationError("history window must be non-negative");
  ExtractionResult result;
  std::vector<Prompt> prompts;
  std::vector<const Conversation*> owners;
  for (const auto& conv : corpus) {
    result.pairs[conv.id];
    for (const auto& u : conv.utterances) {
      auto it = emotions.find({conv.id, u.index});
      if (it == emotions.end() || is_neutral(it->second)) continue;
      prompts.push_back(build_prompt(conv, u.index, it->second, config.prompt));
      owners.push_back(&conv);
    }
  }
  result.targets = prompts.size();

  const auto outcomes = generate_all(client, prompts, config.max_in_flight);
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const Prompt& prompt = prompts[i];
    CauseDecision decision;
    if (const auto* response = std::get_if<GeneratedResponse>(&outcomes[i])) {
      std::vector<Candidate> candidates;
      for (int index : prompt.candidates) candidates.push_back({index, owners[i]->at(index).text});
      decision = match_cause(*response, candidates, config.threshold);
      if (response->text.empty()) ++result.empty_responses;
    } else {
      decision.error = std::get<std::string>(outcomes[i]);
      ++result.failures;
    }
    decision.target = prompt.target;
    result.decisions.push_back(std::move(decision));
  }

  for (auto& [id, pairs] : assemble_pairs(emotions, result.decisions)) {
    result.pairs[id] = std::move(pairs);
  }
  return result;
}

ExtractionResult heuristic_extraction(const Corpus& corpus, const EmotionMap& emotions,
                                      HeuristicStrategy strategy) {
  ExtractionResult result;
  for (const auto& conv : corpus) {
    auto pairs = heuristic_causes(conv, emotions, strategy);
    for (const auto& p : pairs) {
      result.decisions.push_back({{conv.id, p.emotion_utterance}, p.cause_utterance, 1.0,
                                  conv.at(p.cause_utterance).text, std::nullopt});
    }
    result.targets += pairs.size();
    result.pairs[conv.id] = std::move(pairs);
  }
  return result;
}

json to_json(const CauseDecision& d) {
  json out = {{"conversation_id", d.target.conversation_id},
              {"target", d.target.utterance_index},
              {"cause", d.cause ? json(*d.cause) : json(nullptr)},
              {"score", d.score},
              {"matched_text", d.matched_text ? json(*d.matched_text) : json(nullptr)}};
  if (d.error) out["error"] = *d.error;
  return out;
}

CauseDecision decision_from_json(const json& j) {
  try {
    CauseDecision d;
    d.target = {j.at("conversation_id").get<std::string>(), j.at("target").get<int>()};
    if (!j.at("cause").is_null()) d.cause = j.at("cause").get<int>();
    d.score = j.at("score").get<double>();
    if (auto it = j.find("matched_text"); it != j.end() && !it->is_null()) {
      d.matched_text = it->get<std::string>();
    }
    if (auto it = j.find("error"); it != j.end()) d.error = it->get<std::string>();
    return d;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed cause decision: ") + e.what());
  }
}

std::string decisions_jsonl(const std::vector<CauseDecision>& decisions) {
  std::string out;
  for (const auto& d : decisions) out += to_json(d).dump() + "\n";
  return out;
}

}  // namespace mecpe
