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

#include "mecpe/emotion.hpp"

#include <algorithm>
#include <cctype>

#include "mecpe/errors.hpp"

namespace mecpe {

namespace {
constexpr std::array<std::string_view, kEmotionCount> kNames = {
    "anger", "disgust", "fear", "joy", "neutral", "sadness", "surprise",
};
}  // namespace

std::string_view to_string(Emotion e) { return kNames.at(index_of(e)); }

Emotion parse_emotion(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == lowered) return emotion_at(i);
  }
  throw ParseError("unknown emotion label '" + std::string(name) + "'");
}

}  // namespace mecpe
