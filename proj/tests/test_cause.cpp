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

#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "mecpe/cause.hpp"
#include "mecpe/client.hpp"
#include "mecpe/errors.hpp"
#include "mecpe/fusion.hpp"
#include "mecpe/random.hpp"
#include "mecpe/synthetic.hpp"

namespace mecpe {
namespace {

std::size_t occurrences(const std::string& haystack, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

const Conversation& love_scene(const testing::QualitativeFixture& f) { return f.corpus[0]; }

TEST(BuildPrompt, RendersWindowSpeakerAndEmotion) {
  const auto f = testing::qualitative_samples();
  const Prompt p = build_prompt(love_scene(f), 6, Emotion::joy, {2, "cause-v1", false});
  EXPECT_NE(p.text.find("U4 (Chandler): Cat."), std::string::npos) << p.text;
  EXPECT_NE(p.text.find("U5 (Monica): Yes! You are so smart! I love you."), std::string::npos);
  EXPECT_NE(p.text.find("U6: \"I love you too.\""), std::string::npos);
  EXPECT_NE(p.text.find("The speaker Chandler expressed joy"), std::string::npos);
  EXPECT_EQ(p.text.find("U3"), std::string::npos);
  EXPECT_EQ(p.candidates, (std::vector<int>{4, 5, 6}));
  EXPECT_EQ(p.target, (UtteranceKey{"qs-1", 6}));
  EXPECT_FALSE(p.image_ref.has_value());
}

TEST(BuildPrompt, ZeroWindowOffersOnlyTheTarget) {
  const auto f = testing::qualitative_samples();
  const Prompt p = build_prompt(love_scene(f), 6, Emotion::joy, {0, "cause-v1", false});
  EXPECT_EQ(p.candidates, std::vector<int>{6});
  EXPECT_EQ(p.text.find("U5"), std::string::npos);
}

TEST(BuildPrompt, Deterministic) {
  const auto f = testing::qualitative_samples();
  const PromptConfig c{5, "cause-v1", true};
  EXPECT_EQ(build_prompt(love_scene(f), 6, Emotion::joy, c).text,
            build_prompt(love_scene(f), 6, Emotion::joy, c).text);
}

TEST(BuildPrompt, ImageReferenceWhenRequested) {
  const auto f = testing::qualitative_samples();
  const Prompt p = build_prompt(love_scene(f), 6, Emotion::joy, {5, "cause-v1", true});
  EXPECT_EQ(p.image_ref, "clip6");
  Conversation bare = love_scene(f);
  bare.utterances[5].media.clear();
  EXPECT_FALSE(build_prompt(bare, 6, Emotion::joy, {5, "cause-v1", true}).image_ref.has_value());
}

TEST(BuildPrompt, Errors) {
  const auto f = testing::qualitative_samples();
  EXPECT_THROW(build_prompt(love_scene(f), 6, Emotion::neutral, {}), std::invalid_argument);
  EXPECT_THROW(build_prompt(love_scene(f), 6, Emotion::joy, {5, "cause-v9", false}),
               ValidationError);
  EXPECT_THROW(build_prompt(love_scene(f), 9, Emotion::joy, {}), LookupError);
}

TEST(BuildPrompt, EveryCandidateTextAppearsExactlyOnce) {
  Rng rng(21);
  const Corpus corpus = synthetic_corpus({30, 12, 4, "c"});
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      const Emotion e = kScoredEmotions[rng.below(kScoredEmotions.size())];
      const int w = static_cast<int>(rng.below(9));
      const Prompt p = build_prompt(conv, u.index, e, {w, "cause-v1", false});
      std::vector<int> expected;
      for (const auto& h : history_window(conv, u.index, w)) expected.push_back(h.index);
      ASSERT_EQ(p.candidates, expected);
      for (int c : p.candidates) EXPECT_EQ(occurrences(p.text, conv.at(c).text), 1u);
      EXPECT_NE(p.text.find(u.speaker), std::string::npos);
      EXPECT_NE(p.text.find(std::string(to_string(e))), std::string::npos);
    }
  }
}

std::vector<Candidate> candidates_of(const Conversation& conv, std::vector<int> indices) {
  std::vector<Candidate> out;
  for (int i : indices) out.push_back({i, conv.at(i).text});
  return out;
}

TEST(TokenF1, NormalisesCasePunctuationAndRepeats) {
  EXPECT_EQ(normalized_tokens("Yes! You are so smart! I love you."),
            (std::vector<std::string>{"are", "i", "love", "smart", "so", "yes", "you"}));
  EXPECT_EQ(normalized_tokens("  ...  "), std::vector<std::string>{});
  EXPECT_EQ(token_f1("I love you", "I LOVE you!!"), 1.0);
  EXPECT_EQ(token_f1("", "anything"), 0.0);
  EXPECT_EQ(token_f1("abc", "xyz"), 0.0);
}

TEST(TokenF1, HandComputedValues) {
  // 3 shared tokens out of 3 and 7: 2 * (1 * 3/7) / (1 + 3/7) = 6/10.
  EXPECT_NEAR(token_f1("I love you", "Yes! You are so smart! I love you."), 0.6, 1e-15);
  // 3 shared tokens out of 3 and 4: 2 * (3/4) / (7/4) = 6/7.
  EXPECT_NEAR(token_f1("I love you", "I love you too."), 6.0 / 7.0, 1e-15);
}

TEST(TokenF1, BoundedSymmetricAndOneOnlyForEqualSets) {
  Rng rng(5);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string x, y;
    for (std::uint64_t i = 0, n = rng.below(5); i < n; ++i) x += vocab[rng.below(6)] + " ";
    for (std::uint64_t i = 0, n = rng.below(5); i < n; ++i) y += vocab[rng.below(6)] + ", ";
    const double s = token_f1(x, y);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_EQ(s, token_f1(y, x));
    const bool same = normalized_tokens(x) == normalized_tokens(y) && !normalized_tokens(x).empty();
    EXPECT_EQ(s == 1.0, same) << "'" << x << "' vs '" << y << "'";
  }
}

TEST(MatchCause, ExactQuotePicksThatUtterance) {
  const auto f = testing::qualitative_samples();
  const auto d = match_cause({"Yes! You are so smart! I love you.", {}, "t"},
                             candidates_of(love_scene(f), {4, 5, 6}), 0.3);
  EXPECT_EQ(d.cause, 5);
  EXPECT_EQ(d.score, 1.0);
  EXPECT_EQ(d.matched_text, "Yes! You are so smart! I love you.");
}

TEST(MatchCause, NoneSentinelAbstains) {
  const auto f = testing::qualitative_samples();
  for (const char* reply : {"none", "None.", "  NONE  ", ""}) {
    const auto d = match_cause({reply, {}, "t"}, candidates_of(love_scene(f), {4, 5, 6}), 0.0);
    EXPECT_FALSE(d.cause.has_value()) << reply;
    EXPECT_EQ(d.score, 0.0);
  }
  // "none" inside a longer reply is ordinary text.
  EXPECT_FALSE(is_no_cause("none of these"));
}

TEST(MatchCause, HigherOverlapWins) {
  const auto f = testing::qualitative_samples();
  const auto d = match_cause({"I love you", {}, "t"}, candidates_of(love_scene(f), {5, 6}), 0.3);
  EXPECT_EQ(d.cause, 6);
  EXPECT_NEAR(d.score, 6.0 / 7.0, 1e-15);
}

TEST(MatchCause, TiesGoToTheMostRecentCandidate) {
  const std::vector<Candidate> c = {{1, "red apple"}, {2, "green pear"}, {3, "red apple"}};
  EXPECT_EQ(match_cause({"red apple", {}, "t"}, c, 0.3).cause, 3);
}

TEST(MatchCause, ThresholdAndZeroOverlapAbstain) {
  const std::vector<Candidate> c = {{1, "alpha beta gamma delta"}};
  const auto low = match_cause({"alpha zeta eta theta", {}, "t"}, c, 0.3);
  EXPECT_FALSE(low.cause.has_value());
  EXPECT_NEAR(low.score, 0.25, 1e-15);
  EXPECT_EQ(match_cause({"alpha zeta eta theta", {}, "t"}, c, 0.25).cause, 1);
  EXPECT_FALSE(match_cause({"omega", {}, "t"}, c, 0.0).cause.has_value());
  EXPECT_THROW(match_cause({"x", {}, "t"}, {}, 0.3), std::invalid_argument);
}

TEST(MatchCause, RaisingThresholdNeverAddsCauses) {
  Rng rng(8);
  const std::vector<std::string> vocab = {"a", "b", "c", "d", "e", "f", "g"};
  auto phrase = [&] {
    std::string s;
    for (std::uint64_t i = 0, n = 1 + rng.below(4); i < n; ++i) s += vocab[rng.below(7)] + " ";
    return s;
  };
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Candidate> c;
    for (int i = 1; i <= 4; ++i) c.push_back({i, phrase()});
    const GeneratedResponse r{phrase(), {}, "t"};
    bool had_cause = true;
    for (double tau : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
      const auto d = match_cause(r, c, tau);
      EXPECT_TRUE(!d.cause || had_cause);
      had_cause = d.cause.has_value();
      if (d.cause) {
        EXPECT_GE(d.score, tau);
        EXPECT_TRUE(std::any_of(c.begin(), c.end(), [&](const Candidate& x) { return x.index == *d.cause; }));
      }
    }
  }
}

TEST(AssemblePairs, Examples) {
  const EmotionMap predictions = {
      {{"c1", 6}, Emotion::joy}, {{"c1", 2}, Emotion::anger}, {{"c1", 3}, Emotion::neutral}};
  const std::vector<CauseDecision> decisions = {
      {{"c1", 6}, 5, 1.0, "x", std::nullopt},
      {{"c1", 2}, std::nullopt, 0.0, std::nullopt, std::nullopt},
      {{"c1", 3}, 1, 1.0, "y", std::nullopt},
  };
  const PairSet pairs = assemble_pairs(predictions, decisions);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(pairs.at("c1"), (std::vector<EmotionCausePair>{{6, Emotion::joy, 5}}));
  EXPECT_THROW(assemble_pairs(predictions, {{{"c9", 1}, 1, 1.0, "z", std::nullopt}}),
               ConsistencyError);
}

TEST(EmotionMaps, FromPredictionsAndGold) {
  EmotionPrediction a;
  a.key = {"c1", 1};
  a.predicted = Emotion::fear;
  EXPECT_EQ(emotion_map({a}).at({"c1", 1}), Emotion::fear);
  EXPECT_THROW(emotion_map({a, a}), ConsistencyError);
  const Corpus corpus = synthetic_corpus({2, 3, 1, "c"});
  EXPECT_EQ(gold_emotion_map(corpus).size(), 6u);
}

TEST(Heuristics, Examples) {
  const Conversation conv = synthetic_corpus({1, 6, 1, "c"})[0];
  const EmotionMap predictions = {{{"c1", 1}, Emotion::anger},
                                  {{"c1", 4}, Emotion::joy},
                                  {{"c1", 5}, Emotion::neutral},
                                  {{"c1", 6}, Emotion::joy}};
  EXPECT_EQ(heuristic_causes(conv, predictions, HeuristicStrategy::self),
            (std::vector<EmotionCausePair>{{1, Emotion::anger, 1}, {4, Emotion::joy, 4}, {6, Emotion::joy, 6}}));
  EXPECT_EQ(heuristic_causes(conv, predictions, HeuristicStrategy::previous),
            (std::vector<EmotionCausePair>{{1, Emotion::anger, 1}, {4, Emotion::joy, 3}, {6, Emotion::joy, 5}}));
  EXPECT_EQ(parse_heuristic("previous"), HeuristicStrategy::previous);
  EXPECT_THROW(parse_heuristic("random"), ParseError);
}

TEST(ExtractCauses, QualitativeSamples) {
  const auto f = testing::qualitative_samples();
  const ScriptedStubClient stub(f.responses);
  const auto r = extract_causes(f.corpus, f.predictions, stub, {});
  EXPECT_EQ(r.targets, 4u);
  EXPECT_EQ(r.failures, 0u);
  EXPECT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs.at("qs-1"), (std::vector<EmotionCausePair>{{6, Emotion::joy, 5}}));
  EXPECT_TRUE(r.pairs.at("qs-2").empty());
  EXPECT_EQ(r.pairs.at("qs-3"), (std::vector<EmotionCausePair>{{4, Emotion::joy, 4}}));
  EXPECT_EQ(r.pairs.at("qs-4"), (std::vector<EmotionCausePair>{{11, Emotion::joy, 11}}));
}

TEST(ExtractCauses, DecisionInvariantsHold) {
  const Corpus corpus = synthetic_corpus({12, 10, 6, "c"});
  std::map<std::string, std::string> responses;
  Rng rng(3);
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      // Quote a random utterance, sometimes one outside the window or in the future.
      const int pick = 1 + static_cast<int>(rng.below(conv.utterances.size()));
      responses[fixture_key({conv.id, u.index})] = conv.at(pick).text;
    }
  }
  const ScriptedStubClient stub(responses);
  const EmotionMap emotions = gold_emotion_map(corpus);
  for (int w : {0, 2, 5}) {
    ExtractionConfig config;
    config.prompt.window = w;
    const auto r = extract_causes(corpus, emotions, stub, config);
    for (const auto& d : r.decisions) {
      EXPECT_FALSE(is_neutral(emotions.at(d.target)));
      if (!d.cause) continue;
      EXPECT_GE(d.score, config.threshold);
      EXPECT_LE(*d.cause, d.target.utterance_index);
      EXPECT_GE(*d.cause, d.target.utterance_index - w);
    }
    for (const auto& [id, pairs] : r.pairs) {
      for (const auto& p : pairs) EXPECT_FALSE(is_neutral(p.emotion));
    }
    EXPECT_EQ(decisions_jsonl(r.decisions),
              decisions_jsonl(extract_causes(corpus, emotions, stub, config).decisions));
  }
}

TEST(ExtractCauses, HeuristicExtraction) {
  const Corpus corpus = synthetic_corpus({3, 5, 2, "c"});
  const auto r = heuristic_extraction(corpus, gold_emotion_map(corpus), HeuristicStrategy::previous);
  // The synthetic gold causes are exactly the previous-utterance heuristic.
  EXPECT_EQ(r.pairs, gold_pairs(corpus));
  EXPECT_EQ(r.decisions.size(), r.targets);
}

TEST(Decisions, JsonRoundTrip) {
  const CauseDecision d{{"c1", 4}, 2, 0.75, "some text", std::nullopt};
  const CauseDecision back = decision_from_json(to_json(d));
  EXPECT_EQ(back.target, d.target);
  EXPECT_EQ(back.cause, d.cause);
  EXPECT_EQ(back.score, d.score);
  EXPECT_EQ(back.matched_text, d.matched_text);
  const CauseDecision failed{{"c1", 5}, std::nullopt, 0.0, std::nullopt, "timeout"};
  EXPECT_EQ(decision_from_json(to_json(failed)).error, "timeout");
}

}  // namespace
}  // namespace mecpe
