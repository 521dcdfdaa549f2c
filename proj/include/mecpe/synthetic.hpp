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

#include <cstddef>
#include <cstdint>
#include <string>

#include "mecpe/corpus.hpp"

namespace mecpe {

struct SyntheticCorpusOptions {
  std::size_t conversations = 10;
  std::size_t utterances_per_conversation = 7;
  std::uint64_t seed = 1;
  std::string id_prefix = "c";
};

/// Conversations whose gold emotions cycle through all seven classes (so the
/// label counts differ by at most one) in a seeded shuffled order. Every
/// utterance text is made of tokens unique to it. Each non-neutral utterance
/// gets one gold pair whose cause is the preceding utterance, or itself when
/// it opens the conversation.
Corpus synthetic_corpus(const SyntheticCorpusOptions& options);

/// train/dev/test built from disjoint id prefixes.
CorpusSplit synthetic_split(std::size_t train, std::size_t dev, std::size_t test,
                            std::size_t utterances_per_conversation, std::uint64_t seed);

}  // namespace mecpe
