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
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mecpe/corpus.hpp"
#include "mecpe/feature_store.hpp"

namespace mecpe {

/// Emotion-cause pairs keyed by conversation id.
using PairSet = std::map<std::string, std::vector<EmotionCausePair>>;

PairSet gold_pairs(const Corpus& corpus);

/// {"<conversation id>": [[eu, "emotion", cu], ...], ...}
nlohmann::json to_json(const PairSet& pairs);
PairSet pairs_from_json(const nlohmann::json& j);

struct CategoryScore {
  Emotion category = Emotion::anger;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t n = 0;  // gold pairs of this category, tp + fn
};

struct MetricsReport {
  std::array<CategoryScore, kScoredEmotions.size()> per_category{};
  double weighted_f1 = 0.0;  // sum n_j F1_j / sum n_j
  double macro_f1 = 0.0;     // unweighted mean over the six categories
  std::int64_t gold_pairs = 0;
  std::int64_t predicted_pairs = 0;

  const CategoryScore& category(Emotion e) const;
};

/// A predicted pair is a true positive when an unconsumed gold pair of the same
/// conversation is identical; each gold pair is consumed at most once. Pairs
/// are credited to their own emotion category. Neutral-labelled pairs are not
/// scored.
MetricsReport score_pairs(const PairSet& gold, const PairSet& predicted);

/// Precision, recall and F1 from raw counts, with every 0/0 taken as 0.
CategoryScore category_score(Emotion category, std::int64_t tp, std::int64_t fp, std::int64_t fn);

nlohmann::json to_json(const MetricsReport& report);

/// Rows are gold emotion, columns predicted emotion, both in enum order.
struct ConfusionMatrix {
  using Counts = Eigen::Matrix<std::int64_t, static_cast<int>(kEmotionCount),
                               static_cast<int>(kEmotionCount)>;
  Counts counts = Counts::Zero();
  std::int64_t skipped_unlabelled = 0;
  std::int64_t skipped_unpredicted = 0;

  void add(Emotion gold, Emotion predicted) { ++counts(index_of(gold), index_of(predicted)); }
};

ConfusionMatrix emotion_confusion(const Corpus& gold,
                                  const std::map<UtteranceKey, Emotion>& predicted);

/// Share of gold non-neutral utterances predicted neutral; 0 when there are none.
double neutral_leakage(const ConfusionMatrix& matrix);

/// Support-weighted F1 over all seven emotion classes.
double emotion_weighted_f1(const ConfusionMatrix& matrix);

double accuracy(const ConfusionMatrix& matrix);

std::string confusion_csv(const ConfusionMatrix& matrix);
nlohmann::json to_json(const ConfusionMatrix& matrix);

struct AblationRow {
  int window = 0;
  double weighted_f1 = 0.0;
};

/// Sorted by window. Empty input or a repeated window is an error.
std::vector<AblationRow> ablation_curve(const std::vector<std::pair<int, MetricsReport>>& results);

/// "w,weighted_f1" header, one row per window.
std::string ablation_csv(const std::vector<AblationRow>& rows);

enum class MismatchKind { missed_cause, wrong_cause, spurious_pair };

std::string_view to_string(MismatchKind kind);

struct PairMismatch {
  MismatchKind kind = MismatchKind::missed_cause;
  std::optional<EmotionCausePair> gold;
  std::optional<EmotionCausePair> predicted;
};

struct ConversationMismatch {
  std::string conversation_id;
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::vector<PairMismatch> details;
};

/// Conversations with at least one fp or fn, worst (fp + fn) first, ties by
/// id; at most `limit` entries. An unmatched prediction that shares its
/// emotion utterance with an unmatched gold pair is a wrong cause; other
/// unmatched predictions are spurious; remaining unmatched gold pairs are
/// missed causes.
std::vector<ConversationMismatch> mismatches(const PairSet& gold, const PairSet& predicted,
                                             std::size_t limit);

}  // namespace mecpe
