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

#include "mecpe/synthetic.hpp"

#include <vector>

#include "mecpe/random.hpp"

namespace mecpe {

Corpus synthetic_corpus(const SyntheticCorpusOptions& options) {
  const std::size_t total = options.conversations * options.utterances_per_conversation;
  std::vector<Emotion> labels;
  labels.reserve(total);
  for (std::size_t i = 0; i < total; ++i) labels.push_back(emotion_at(i % kEmotionCount));
  Rng rng(options.seed);
  rng.shuffle(labels.begin(), labels.end());

  Corpus corpus;
  std::size_t next = 0;
  for (std::size_t c = 0; c < options.conversations; ++c) {
    Conversation conv;
    conv.id = options.id_prefix + std::to_string(c + 1);
    for (std::size_t i = 0; i < options.utterances_per_conversation; ++i) {
      const int index = static_cast<int>(i) + 1;
      const std::string stem = conv.id + "u" + std::to_string(index);
      Utterance u;
      u.index = index;
      u.speaker = i % 2 == 0 ? "Alex" : "Blake";
      u.text = stem + "a " + stem + "b " + stem + "c.";
      u.gold_emotion = labels[next++];
      u.media["video"] = "dia" + conv.id + "utt" + std::to_string(index) + ".mp4";
      if (!is_neutral(*u.gold_emotion)) {
        conv.gold_pairs.push_back({index, *u.gold_emotion, index > 1 ? index - 1 : index});
      }
      conv.utterances.push_back(std::move(u));
    }
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

CorpusSplit synthetic_split(std::size_t train, std::size_t dev, std::size_t test,
                            std::size_t utterances_per_conversation, std::uint64_t seed) {
  return {synthetic_corpus({train, utterances_per_conversation, seed, "train"}),
          synthetic_corpus({dev, utterances_per_conversation, seed + 1, "dev"}),
          synthetic_corpus({test, utterances_per_conversation, seed + 2, "test"})};
}

}  // namespace mecpe
