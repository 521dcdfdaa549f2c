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

#include "mecpe/feature_store.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mecpe/errors.hpp"
#include "mecpe/format.hpp"
#include "mecpe/random.hpp"

namespace mecpe {

namespace {

constexpr std::array<std::string_view, kModalityCount> kModalityNames = {"text", "audio", "visual"};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
bool parse_number(std::string_view field, T& out) {
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string_view to_string(Modality m) { return kModalityNames.at(index_of(m)); }

Modality parse_modality(std::string_view name) {
  for (std::size_t i = 0; i < kModalityNames.size(); ++i) {
    if (kModalityNames[i] == name) return kAllModalities[i];
  }
  throw ParseError("unknown modality '" + std::string(name) + "'");
}

std::string to_string(const UtteranceKey& key) {
  return "(" + key.conversation_id + "," + std::to_string(key.utterance_index) + ")";
}

FeatureTable::FeatureTable(Modality modality, Eigen::Index dim) : modality_(modality), dim_(dim) {
  if (dim <= 0) throw ValidationError("feature dimension must be positive");
}

void FeatureTable::insert(UtteranceKey key, Eigen::VectorXd vector) {
  const std::string where = std::string(to_string(modality_)) + " row " + to_string(key);
  if (vector.size() != dim_) {
    throw ValidationError(where + " has " + std::to_string(vector.size()) + " values, expected " +
                          std::to_string(dim_));
  }
  if (!vector.allFinite()) throw ValidationError(where + " contains a non-finite value");
  if (rows_.contains(key)) throw ValidationError(where + " is a duplicate key");
  rows_.emplace(std::move(key), std::move(vector));
}

const Eigen::VectorXd* FeatureTable::find(const UtteranceKey& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

bool FeatureTable::operator==(const FeatureTable& other) const {
  if (modality_ != other.modality_ || dim_ != other.dim_ || rows_.size() != other.rows_.size()) {
    return false;
  }
  auto a = rows_.begin();
  for (auto b = other.rows_.begin(); b != other.rows_.end(); ++a, ++b) {
    if (a->first != b->first || a->second != b->second) return false;
  }
  return true;
}

std::string format_features(const FeatureTable& table) {
  std::string out;
  out += to_string(table.modality());
  out += ',';
  out += std::to_string(table.dim());
  out += '\n';
  for (const auto& [key, vector] : table.rows()) {
    if (key.conversation_id.find_first_of(",\n") != std::string::npos) {
      throw ValidationError("conversation id '" + key.conversation_id +
                            "' cannot be written to the interchange format");
    }
    out += key.conversation_id;
    out += ',';
    out += std::to_string(key.utterance_index);
    for (Eigen::Index i = 0; i < vector.size(); ++i) {
      out += ',';
      out += format_double(vector[i]);
    }
    out += '\n';
  }
  return out;
}

FeatureTable parse_features(std::string_view text) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& line) {
    while (pos < text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (!line.empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) throw ParseError("feature file is empty");
  auto header = split_commas(line);
  Eigen::Index dim = 0;
  if (header.size() != 2 || !parse_number(header[1], dim) || dim <= 0) {
    throw ParseError("header must be 'modality,dim'", line_no, 1);
  }
  Modality modality;
  try {
    modality = parse_modality(header[0]);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no, 1);
  }

  FeatureTable table(modality, dim);
  while (next_line(line)) {
    auto fields = split_commas(line);
    if (fields.size() < 2) throw ParseError("row needs a conversation id and index", line_no, 1);
    UtteranceKey key{std::string(fields[0]), 0};
    if (!parse_number(fields[1], key.utterance_index)) {
      throw ParseError("bad utterance index '" + std::string(fields[1]) + "'", line_no, 1);
    }
    const auto values = static_cast<Eigen::Index>(fields.size() - 2);
    if (values != dim) {
      throw ValidationError("row " + to_string(key) + " has " + std::to_string(values) +
                            " values, header declares dim=" + std::to_string(dim) + " (line " +
                            std::to_string(line_no) + ")");
    }
    Eigen::VectorXd vector(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto field = fields[static_cast<std::size_t>(i) + 2];
      if (!parse_number(field, vector[i])) {
        // from_chars accepts "nan"/"inf"; anything it rejects is malformed.
        throw ParseError("row " + to_string(key) + ": bad value '" + std::string(field) + "'",
                         line_no, 1);
      }
    }
    table.insert(std::move(key), std::move(vector));
  }
  return table;
}

FeatureTable load_features(const std::string& path, std::optional<Modality> expected) {
  FeatureTable table = parse_features(read_file(path));
  if (expected && table.modality() != *expected) {
    throw ValidationError("'" + path + "' holds " + std::string(to_string(table.modality())) +
                          " features, expected " + std::string(to_string(*expected)));
  }
  return table;
}

void save_features(const FeatureTable& table, const std::string& path) {
  write_file(path, format_features(table));
}

Eigen::VectorXd emotion_embedding(Emotion emotion, Eigen::Index dim) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
  const auto classes = static_cast<Eigen::Index>(kEmotionCount);
  const Eigen::Index filled = (dim / classes) * classes;
  for (Eigen::Index j = static_cast<Eigen::Index>(index_of(emotion)); j < filled; j += classes) {
    out[j] = 1.0;
  }
  return out;
}

FeatureTable synth_features(const Corpus& corpus, const SynthOptions& options) {
  const Eigen::Index dim = options.dim == 0 ? kDefaultFeatureDims[index_of(options.modality)]
                                            : options.dim;
  if (dim < static_cast<Eigen::Index>(kEmotionCount)) {
    throw ValidationError("synthetic feature dim must be at least 7");
  }
  if (!(options.signal >= 0.0 && options.signal <= 1.0)) {
    throw ValidationError("signal must lie in [0, 1]");
  }
  std::array<bool, kEmotionCount> visible{};
  if (options.visible_classes.empty()) {
    visible.fill(true);
  } else {
    for (Emotion e : options.visible_classes) visible[index_of(e)] = true;
  }

  // Distinct streams per modality under a shared seed.
  Rng rng(options.seed ^ (0x9E3779B97F4A7C15ULL * (index_of(options.modality) + 1)));
  FeatureTable table(options.modality, dim);
  const double noise_scale = 1.0 - options.signal;
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      if (!u.gold_emotion) {
        throw ValidationError("utterance " + to_string(UtteranceKey{conv.id, u.index}) +
                              " has no gold emotion to synthesize from");
      }
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      if (visible[index_of(*u.gold_emotion)]) v = options.signal * emotion_embedding(*u.gold_emotion, dim);
      for (Eigen::Index i = 0; i < dim; ++i) v[i] += noise_scale * rng.normal();
      table.insert({conv.id, u.index}, std::move(v));
    }
  }
  return table;
}

AlignPolicy parse_align_policy(std::string_view name) {
  if (name == "strict") return AlignPolicy::strict;
  if (name == "mask-missing") return AlignPolicy::mask_missing;
  throw ParseError("unknown alignment policy '" + std::string(name) + "'");
}

AlignedDataset align(const Corpus& corpus, const std::vector<FeatureTable>& tables,
                     AlignPolicy policy) {
  if (tables.empty()) throw ValidationError("align needs at least one feature table");
  std::array<const FeatureTable*, kModalityCount> by_modality{};
  AlignedDataset out;
  for (const auto& table : tables) {
    auto& slot = by_modality[index_of(table.modality())];
    if (slot != nullptr) {
      throw ValidationError("two feature tables for modality " +
                            std::string(to_string(table.modality())));
    }
    slot = &table;
    out.dims[index_of(table.modality())] = table.dim();
  }

  std::vector<std::string> missing;
  for (const auto& conv : corpus) {
    for (const auto& u : conv.utterances) {
      AlignedExample example{{conv.id, u.index}, {}, {}, u.gold_emotion};
      for (std::size_t m = 0; m < kModalityCount; ++m) {
        if (by_modality[m] == nullptr) continue;
        if (const auto* v = by_modality[m]->find(example.key)) {
          example.features[m] = *v;
          example.mask.set(m);
        } else {
          missing.push_back(to_string(example.key) + "/" + std::string(kModalityNames[m]));
        }
      }
      if (example.mask.none()) {
        ++out.dropped;
        continue;
      }
      out.examples.push_back(std::move(example));
    }
  }

  if (policy == AlignPolicy::strict && !missing.empty()) {
    std::ostringstream msg;
    msg << "strict alignment failed; missing:";
    for (const auto& m : missing) msg << ' ' << m;
    throw ValidationError(msg.str());
  }
  return out;
}

}  // namespace mecpe
