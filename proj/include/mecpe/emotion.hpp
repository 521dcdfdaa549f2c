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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>

namespace mecpe {

/// The seven emotion classes. Enumerator order is the class index used by the
/// classifier and is also the argmax tie-break precedence.
enum class Emotion : int {
  anger = 0,
  disgust,
  fear,
  joy,
  neutral,
  sadness,
  surprise,
};

inline constexpr std::size_t kEmotionCount = 7;

inline constexpr std::array<Emotion, kEmotionCount> kAllEmotions = {
    Emotion::anger,   Emotion::disgust, Emotion::fear,     Emotion::joy,
    Emotion::neutral, Emotion::sadness, Emotion::surprise,
};

/// The six scored categories of the pair task.
inline constexpr std::array<Emotion, 6> kScoredEmotions = {
    Emotion::anger, Emotion::disgust, Emotion::fear,
    Emotion::joy,   Emotion::sadness, Emotion::surprise,
};

constexpr std::size_t index_of(Emotion e) { return static_cast<std::size_t>(e); }

constexpr Emotion emotion_at(std::size_t i) { return kAllEmotions.at(i); }

constexpr bool is_neutral(Emotion e) { return e == Emotion::neutral; }

std::string_view to_string(Emotion e);

/// Case-insensitive. Throws ParseError on anything but the seven names.
Emotion parse_emotion(std::string_view name);

}  // namespace mecpe
