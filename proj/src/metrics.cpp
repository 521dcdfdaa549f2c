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

#include "mecpe/metrics.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mecpe/errors.hpp"
#include "mecpe/format.hpp"

namespace mecpe {

using nlohmann::json;

namespace {

constexpr std::size_t scored_slot(Emotion e) {
  // Scored categories are the enum minus neutral, in enum order.
  const auto i = index_of(e);
  return i < index_of(Emotion::neutral) ? i : i - 1;
}

// Splits one conversation's pairs into matched and unmatched multisets.
struct Matching {
  std::vector<EmotionCausePair> matched;
  std::vector<EmotionCausePair> unmatched_gold;
  std::vector<EmotionCausePair> unmatched_pred;
};

Matching match_conversation(const std::vector<EmotionCausePair>& gold,
                            const std::vector<EmotionCausePair>& pred) {
  Matching out;
  std::multiset<EmotionCausePair> pool;
  for (const auto& g : gold) {
    if (!is_neutral(g.emotion)) pool.insert(g);
  }
  for (const auto& p : pred) {
    if (is_neutral(p.emotion)) continue;
    if (auto it = pool.find(p); it != pool.end()) {
      out.matched.push_back(p);
      pool.erase(it);
    } else {
      out.unmatched_pred.push_back(p);
    }
  }
  out.unmatched_gold.assign(pool.begin(), pool.end());
  return out;
}

const std::vector<EmotionCausePair>& pairs_of(const PairSet& set, const std::string& id) {
  static const std::vector<EmotionCausePair> kNone;
  auto it = set.find(id);
  return it == set.end() ? kNone : it->second;
}

std::set<std::string> all_ids(const PairSet& a, const PairSet& b) {
  std::set<std::string> ids;
  for (const auto& [id, _] : a) ids.insert(id);
  for (const auto& [id, _] : b) ids.insert(id);
  return ids;
}

}  // namespace

PairSet gold_pairs(const Corpus& corpus) {
  PairSet out;
  for (const auto& conv : corpus) out[conv.id] = conv.gold_pairs;
  return out;
}

json to_json(const PairSet& pairs) {
  json out = json::object();
  for (const auto& [id, list] : pairs) {
    json arr = json::array();
    for (const auto& p : list) arr.push_back(to_json(p));
    out[id] = std::move(arr);
  }
  return out;
}

PairSet pairs_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("pair file must be an object keyed by conversation id");
  PairSet out;
  for (const auto& [id, list] : j.items()) {
    if (!list.is_array()) throw ParseError("pairs for '" + id + "' must be a list");
    auto& dest = out[id];
    for (const auto& p : list) dest.push_back(pair_from_json(p));
  }
  return out;
}

const CategoryScore& MetricsReport::category(Emotion e) const {
  if (is_neutral(e)) throw LookupError("neutral is not a scored category");
  return per_category[scored_slot(e)];
}

CategoryScore category_score(Emotion category, std::int64_t tp, std::int64_t fp, std::int64_t fn) {
  CategoryScore s{category, tp, fp, fn, 0.0, 0.0, 0.0, tp + fn};
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / denom;
  return s;
}

MetricsReport score_pairs(const PairSet& gold, const PairSet& predicted) {
  std::array<std::int64_t, 6> tp{}, fp{}, fn{};
  MetricsReport report;
  for (const auto& id : all_ids(gold, predicted)) {
    const auto& g = pairs_of(gold, id);
    const auto& p = pairs_of(predicted, id);
    for (const auto& pair : g) report.gold_pairs += is_neutral(pair.emotion) ? 0 : 1;
    for (const auto& pair : p) report.predicted_pairs += is_neutral(pair.emotion) ? 0 : 1;
    const Matching m = match_conversation(g, p);
    for (const auto& pair : m.matched) ++tp[scored_slot(pair.emotion)];
    for (const auto& pair : m.unmatched_pred) ++fp[scored_slot(pair.emotion)];
    for (const auto& pair : m.unmatched_gold) ++fn[scored_slot(pair.emotion)];
  }

  double weighted = 0.0;
  double macro = 0.0;
  std::int64_t support = 0;
  for (std::size_t j = 0; j < kScoredEmotions.size(); ++j) {
    report.per_category[j] = category_score(kScoredEmotions[j], tp[j], fp[j], fn[j]);
    weighted += static_cast<double>(report.per_category[j].n) * report.per_category[j].f1;
    macro += report.per_category[j].f1;
    support += report.per_category[j].n;
  }
  report.weighted_f1 = support == 0 ? 0.0 : weighted / static_cast<double>(support);
  report.macro_f1 = macro / static_cast<double>(kScoredEmotions.size());
  return report;
}

json to_json(const MetricsReport& report) {
  json categories = json::array();
  for (const auto& c : report.per_category) {
    categories.push_back({{"category", std::string(to_string(c.category))},
                          {"tp", c.tp},
                          {"fp", c.fp},
                          {"fn", c.fn},
                          {"n", c.n},
                          {"precision", c.precision},
                          {"recall", c.recall},
                          {"f1", c.f1}});
  }
  return {{"per_category", std::move(categories)},
          {"weighted_f1", report.weighted_f1},
          {"macro_f1", report.macro_f1},
          {"gold_pairs", report.gold_pairs},
          {"predicted_pairs", report.predicted_pairs}};
}

ConfusionMatrix emotion_confusion(const Corpus& gold,
                                  const std::map<UtteranceKey, Emotion>& predicted) {
  ConfusionMatrix out;
  for (const auto& conv : gold) {
    for (const auto& u : conv.utterances) {
      if (!u.gold_emotion) {
        ++out.skipped_unlabelled;
        continue;
      }
      auto it = predicted.find({conv.id, u.index});
      if (it == predicted.end()) {
        ++out.skipped_unpredicted;
        continue;
      }
      out.add(*u.gold_emotion, it->second);
    }
  }
  return out;
}

double neutral_leakage(const ConfusionMatrix& matrix) {
  const auto neutral = static_cast<Eigen::Index>(index_of(Emotion::neutral));
  std::int64_t leaked = 0;
  std::int64_t total = 0;
  for (Emotion e : kScoredEmotions) {
    const auto row = static_cast<Eigen::Index>(index_of(e));
    leaked += matrix.counts(row, neutral);
    total += matrix.counts.row(row).sum();
  }
  return total == 0 ? 0.0 : static_cast<double>(leaked) / static_cast<double>(total);
}

double emotion_weighted_f1(const ConfusionMatrix& matrix) {
  const auto& c = matrix.counts;
  const std::int64_t total = c.sum();
  if (total == 0) return 0.0;
  double weighted = 0.0;
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    const std::int64_t tp = c(k, k);
    const auto s = category_score(emotion_at(static_cast<std::size_t>(k)), tp,
                                  c.col(k).sum() - tp, c.row(k).sum() - tp);
    weighted += static_cast<double>(s.n) * s.f1;
  }
  return weighted / static_cast<double>(total);
}

double accuracy(const ConfusionMatrix& matrix) {
  const std::int64_t total = matrix.counts.sum();
  return total == 0 ? 0.0
                    : static_cast<double>(matrix.counts.trace()) / static_cast<double>(total);
}

std::string confusion_csv(const ConfusionMatrix& matrix) {
  std::ostringstream out;
  out << "gold\\predicted";
  for (Emotion e : kAllEmotions) out << ',' << to_string(e);
  out << '\n';
  for (Emotion g : kAllEmotions) {
    out << to_string(g);
    for (Emotion p : kAllEmotions) out << ',' << matrix.counts(index_of(g), index_of(p));
    out << '\n';
  }
  return out.str();
}

json to_json(const ConfusionMatrix& matrix) {
  json rows = json::array();
  for (Emotion g : kAllEmotions) {
    json row = json::array();
    for (Emotion p : kAllEmotions) row.push_back(matrix.counts(index_of(g), index_of(p)));
    rows.push_back(std::move(row));
  }
  json labels = json::array();
  for (Emotion e : kAllEmotions) labels.push_back(std::string(to_string(e)));
  return {{"labels", std::move(labels)},
          {"counts", std::move(rows)},
          {"skipped_unlabelled", matrix.skipped_unlabelled},
          {"skipped_unpredicted", matrix.skipped_unpredicted}};
}

std::vector<AblationRow> ablation_curve(const std::vector<std::pair<int, MetricsReport>>& results) {
  if (results.empty()) throw ValidationError("ablation curve needs at least one result");
  std::vector<AblationRow> rows;
  rows.reserve(results.size());
  for (const auto& [window, report] : results) rows.push_back({window, report.weighted_f1});
  std::sort(rows.begin(), rows.end(),
            [](const AblationRow& a, const AblationRow& b) { return a.window < b.window; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].window == rows[i - 1].window) {
      throw ValidationError("window " + std::to_string(rows[i].window) + " appears twice");
    }
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "w,weighted_f1\n";
  for (const auto& r : rows) out += std::to_string(r.window) + "," + format_double(r.weighted_f1) + "\n";
  return out;
}

std::string_view to_string(MismatchKind kind) {
  switch (kind) {
    case MismatchKind::missed_cause:
      return "missed-cause";
    case MismatchKind::wrong_cause:
      return "wrong-cause";
    case MismatchKind::spurious_pair:
      return "spurious-pair";
  }
  return "unknown";
}

std::vector<ConversationMismatch> mismatches(const PairSet& gold, const PairSet& predicted,
                                             std::size_t limit) {
  std::vector<ConversationMismatch> out;
  for (const auto& id : all_ids(gold, predicted)) {
    Matching m = match_conversation(pairs_of(gold, id), pairs_of(predicted, id));
    if (m.unmatched_gold.empty() && m.unmatched_pred.empty()) continue;

    ConversationMismatch conv{id,
                              static_cast<std::int64_t>(m.matched.size()),
                              static_cast<std::int64_t>(m.unmatched_pred.size()),
                              static_cast<std::int64_t>(m.unmatched_gold.size()),
                              {}};
    std::vector<bool> gold_used(m.unmatched_gold.size(), false);
    for (const auto& p : m.unmatched_pred) {
      std::optional<std::size_t> partner;
      for (std::size_t g = 0; g < m.unmatched_gold.size(); ++g) {
        if (!gold_used[g] && m.unmatched_gold[g].emotion_utterance == p.emotion_utterance) {
          partner = g;
          break;
        }
      }
      if (partner) {
        gold_used[*partner] = true;
        conv.details.push_back({MismatchKind::wrong_cause, m.unmatched_gold[*partner], p});
      } else {
        conv.details.push_back({MismatchKind::spurious_pair, std::nullopt, p});
      }
    }
    for (std::size_t g = 0; g < m.unmatched_gold.size(); ++g) {
      if (!gold_used[g]) conv.details.push_back({MismatchKind::missed_cause, m.unmatched_gold[g], std::nullopt});
    }
    out.push_back(std::move(conv));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.fp + a.fn > b.fp + b.fn;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

}  // namespace mecpe
