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
#include <bitset>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mecpe/corpus.hpp"

namespace mecpe {

enum class Modality : int { text = 0, audio, visual };

inline constexpr std::size_t kModalityCount = 3;
inline constexpr std::array<Modality, kModalityCount> kAllModalities = {
    Modality::text, Modality::audio, Modality::visual};

constexpr std::size_t index_of(Modality m) { return static_cast<std::size_t>(m); }

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);

using ModalityMask = std::bitset<kModalityCount>;

/// Default synthetic dimensions per modality (text, audio, visual).
inline constexpr std::array<Eigen::Index, kModalityCount> kDefaultFeatureDims = {256, 128, 160};

struct UtteranceKey {
  std::string conversation_id;
  int utterance_index = 0;

  auto operator<=>(const UtteranceKey&) const = default;
  bool operator==(const UtteranceKey&) const = default;
};

/// "(c1,2)" rendering used in error messages.
std::string to_string(const UtteranceKey& key);

/// One dense vector per utterance for a single modality.
class FeatureTable {
 public:
  FeatureTable(Modality modality, Eigen::Index dim);

  Modality modality() const { return modality_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  const std::map<UtteranceKey, Eigen::VectorXd>& rows() const { return rows_; }

  /// Rejects wrong length, non-finite entries, and duplicate keys (ValidationError).
  void insert(UtteranceKey key, Eigen::VectorXd vector);

  const Eigen::VectorXd* find(const UtteranceKey& key) const;

  bool operator==(const FeatureTable&) const;

 private:
  Modality modality_;
  Eigen::Index dim_;
  std::map<UtteranceKey, Eigen::VectorXd> rows_;
};

/// Interchange text: header "modality,dim", then "conversation_id,index,v1,...,v_dim".
/// Values are written in shortest round-trip form, so parse(format(t)) == t bit for bit.
std::string format_features(const FeatureTable& table);
FeatureTable parse_features(std::string_view text);

/// Throws IoError if unreadable; ParseError/ValidationError for bad content.
/// When `expected` is set, a header naming another modality is rejected.
FeatureTable load_features(const std::string& path,
                           std::optional<Modality> expected = std::nullopt);
void save_features(const FeatureTable& table, const std::string& path);

/// The class one-hot tiled across `dim` entries; the tail that does not fill
/// a whole block of seven stays zero.
Eigen::VectorXd emotion_embedding(Emotion emotion, Eigen::Index dim);

struct SynthOptions {
  Modality modality = Modality::text;
  Eigen::Index dim = 0;  // 0 selects the modality default
  double signal = 1.0;   // in [0, 1]
  std::uint64_t seed = 0;
  /// Classes this modality can tell apart; others share the zero embedding.
  /// Empty means every class is visible.
  std::vector<Emotion> visible_classes;
};

/// vector = signal * embedding(gold) + (1 - signal) * N(0, I). Deterministic in
/// (corpus, options). Every utterance must carry a gold emotion.
FeatureTable synth_features(const Corpus& corpus, const SynthOptions& options);

enum class AlignPolicy { strict, mask_missing };

AlignPolicy parse_align_policy(std::string_view name);

struct AlignedExample {
  UtteranceKey key;
  std::array<Eigen::VectorXd, kModalityCount> features;  // empty when masked out
  ModalityMask mask;
  std::optional<Emotion> label;
};

struct AlignedDataset {
  std::vector<AlignedExample> examples;
  std::array<Eigen::Index, kModalityCount> dims{};  // 0 when no table was supplied
  std::size_t dropped = 0;  // utterances absent from every table
};

/// Joins feature tables onto corpus utterances in corpus order.
AlignedDataset align(const Corpus& corpus, const std::vector<FeatureTable>& tables,
                     AlignPolicy policy);

}  // namespace mecpe
