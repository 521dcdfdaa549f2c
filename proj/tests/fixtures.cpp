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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include "mecpe/cli.hpp"
#include "mecpe/client.hpp"
#include "mecpe/random.hpp"
#include "mecpe/synthetic.hpp"

namespace mecpe::testing {

namespace {

Utterance utt(int index, std::string speaker, std::string text, Emotion emotion) {
  return {index, std::move(speaker), std::move(text), emotion, {{"video", "clip" + std::to_string(index)}}};
}

}  // namespace

QualitativeFixture qualitative_samples() {
  QualitativeFixture f;

  Conversation love{"qs-1", {}, {}};
  love.utterances = {
      utt(1, "Monica", "What is in the box?", Emotion::neutral),
      utt(2, "Chandler", "Guess.", Emotion::neutral),
      utt(3, "Monica", "A hat?", Emotion::neutral),
      utt(4, "Chandler", "Cat.", Emotion::neutral),
      utt(5, "Monica", "Yes! You are so smart! I love you.", Emotion::neutral),
      utt(6, "Chandler", "I love you too.", Emotion::joy),
  };
  love.gold_pairs = {{6, Emotion::joy, 5}};

  Conversation phone{"qs-2", {}, {}};
  phone.utterances = {
      utt(1, "Ross", "I have no idea what you just said.", Emotion::neutral),
      utt(2, "Rachel", "Put Joey on the phone.", Emotion::anger),
  };
  phone.gold_pairs = {{2, Emotion::anger, 1}};

  Conversation vegas{"qs-3", {}, {}};
  vegas.utterances = {
      utt(1, "Joey", "Hey.", Emotion::neutral),
      utt(2, "Phoebe", "You know what? It really creeps me out ...", Emotion::neutral),
      utt(3, "Joey", "Sorry.", Emotion::neutral),
      utt(4, "Phoebe", "I am so exited!", Emotion::joy),
      utt(5, "Joey", "We are going to Vegas tonight!", Emotion::neutral),
  };
  vegas.gold_pairs = {{4, Emotion::joy, 5}};

  Conversation distractor{"qs-4", {}, {}};
  for (int i = 1; i <= 8; ++i) {
    distractor.utterances.push_back(utt(i, i % 2 ? "Ross" : "Monica",
                                        "Filler line number " + std::to_string(i) + ".",
                                        Emotion::neutral));
  }
  distractor.utterances.push_back(utt(9, "Ross", "Sure. Okay.", Emotion::neutral));
  distractor.utterances.push_back(
      utt(10, "Monica", "Uh , are you crazy? Are you insane? ...", Emotion::neutral));
  distractor.utterances.push_back(
      utt(11, "Ross", "Yeah, I ..., I just know it would make me happy.", Emotion::neutral));

  f.corpus = {love, phone, vegas, distractor};
  f.predictions = gold_emotion_map(f.corpus);
  // Row 4: the neutral target is predicted as joy.
  f.predictions[{"qs-4", 11}] = Emotion::joy;

  f.responses = {
      {"qs-1:6", "Yes! You are so smart! I love you."},
      {"qs-2:2", "none"},
      {"qs-3:4", "I am so exited!"},
      {"qs-4:11", "Yeah, I ..., I just know it would make me happy."},
  };
  return f;
}

PlantedWindowFixture planted_window(std::size_t conversations) {
  constexpr int kLength = 14;
  PlantedWindowFixture f;
  for (std::size_t c = 0; c < conversations; ++c) {
    Conversation conv;
    conv.id = "pw" + std::to_string(c + 1);
    const int cause = kLength - (c % 2 == 0 ? 4 : 5);
    const int distractor = kLength - (c % 4 < 2 ? 6 + static_cast<int>(c % 2) : 8 + static_cast<int>(c % 2));
    const std::string k = "k" + std::to_string(c + 1);
    const std::string cause_text = k + "a " + k + "b " + k + "c " + k + "d";
    const std::string response = cause_text + " " + k + "e " + k + "f";
    const Emotion emotion = kScoredEmotions[c % kScoredEmotions.size()];
    for (int i = 1; i <= kLength; ++i) {
      std::string text = "filler " + k + "x" + std::to_string(i);
      if (i == cause) text = cause_text;
      if (i == distractor) text = response;
      if (i == kLength) text = "target " + k + "t";
      conv.utterances.push_back(
          {i, i % 2 ? "Alex" : "Blake", text, i == kLength ? emotion : Emotion::neutral, {}});
    }
    conv.gold_pairs = {{kLength, emotion, cause}};
    f.responses[conv.id + ":" + std::to_string(kLength)] = response;
    f.corpus.push_back(std::move(conv));
  }
  return f;
}

std::map<std::string, std::string> oracle_responses(const Corpus& corpus) {
  std::map<std::string, std::string> out;
  for (const auto& conv : corpus) {
    for (const auto& p : conv.gold_pairs) {
      out.emplace(fixture_key({conv.id, p.emotion_utterance}), conv.at(p.cause_utterance).text);
    }
  }
  return out;
}

AlignedDataset random_dataset(std::uint64_t seed, std::size_t examples,
                              const std::array<Eigen::Index, kModalityCount>& dims,
                              bool random_masks) {
  Rng rng(seed);
  AlignedDataset data;
  data.dims = dims;
  for (std::size_t i = 0; i < examples; ++i) {
    AlignedExample e;
    e.key = {"r" + std::to_string(seed), static_cast<int>(i) + 1};
    e.label = emotion_at(i % kEmotionCount);
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (dims[m] == 0) continue;
      if (random_masks && rng.bernoulli(0.3)) continue;
      e.features[m].resize(dims[m]);
      for (Eigen::Index j = 0; j < dims[m]; ++j) e.features[m][j] = rng.normal();
      e.mask.set(m);
    }
    if (e.mask.none()) {
      for (std::size_t m = 0; m < kModalityCount; ++m) {
        if (dims[m] == 0) continue;
        e.features[m].resize(dims[m]);
        for (Eigen::Index j = 0; j < dims[m]; ++j) e.features[m][j] = rng.normal();
        e.mask.set(m);
        break;
      }
    }
    data.examples.push_back(std::move(e));
  }
  return data;
}

// Central differences over every parameter entry, compared with the analytic
// gradient. Denominator floor keeps near-zero entries on an absolute scale.
double max_relative_gradient_error(const FusionModelD& model,
                                   const std::vector<AlignedExample>& batch) {
  const auto analytic = loss_and_grads(model, batch, Mode::eval).grads.flattened();
  FusionModelD probe = model;
  constexpr double eps = 1e-5;
  double worst = 0.0;
  std::size_t tensor = 0;
  probe.params.for_each([&](const std::string&, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + eps;
      const double up = loss_and_grads(probe, batch, Mode::eval).loss;
      t.data()[i] = saved - eps;
      const double down = loss_and_grads(probe, batch, Mode::eval).loss;
      t.data()[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double exact = analytic[tensor].data()[i];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-6});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
    ++tensor;
  });
  return worst;
}

Corpus balanced_corpus(std::size_t utterances, std::uint64_t seed, const std::string& prefix) {
  constexpr std::size_t kPerConversation = 10;
  Corpus corpus = synthetic_corpus({(utterances + kPerConversation - 1) / kPerConversation,
                                    kPerConversation, seed, prefix});
  // Trim the last conversation down to the requested total.
  std::size_t extra = corpus.size() * kPerConversation - utterances;
  auto& last = corpus.back();
  while (extra-- > 0) {
    const int removed = last.utterances.back().index;
    last.utterances.pop_back();
    std::erase_if(last.gold_pairs, [&](const EmotionCausePair& p) {
      return p.emotion_utterance == removed || p.cause_utterance == removed;
    });
  }
  return corpus;
}

namespace {

// Largest number of gold items that can be paired with distinct equal predictions.
std::size_t best_matching(const std::vector<EmotionCausePair>& gold,
                          const std::vector<EmotionCausePair>& predicted, std::size_t g,
                          std::vector<bool>& used, std::vector<int>& assignment,
                          std::vector<int>& best_assignment, std::size_t so_far,
                          std::size_t& best) {
  if (g == gold.size()) {
    if (so_far > best || best_assignment.empty()) {
      best = so_far;
      best_assignment = assignment;
    }
    return best;
  }
  assignment[g] = -1;
  best_matching(gold, predicted, g + 1, used, assignment, best_assignment, so_far, best);
  for (std::size_t p = 0; p < predicted.size(); ++p) {
    if (used[p] || !(predicted[p] == gold[g])) continue;
    used[p] = true;
    assignment[g] = static_cast<int>(p);
    best_matching(gold, predicted, g + 1, used, assignment, best_assignment, so_far + 1, best);
    used[p] = false;
    assignment[g] = -1;
  }
  return best;
}

}  // namespace

double brute_force_weighted_f1(const PairSet& gold, const PairSet& predicted) {
  std::map<Emotion, double> tp, gold_count, pred_count;
  std::set<std::string> ids;
  for (const auto& [id, _] : gold) ids.insert(id);
  for (const auto& [id, _] : predicted) ids.insert(id);
  for (const auto& id : ids) {
    std::vector<EmotionCausePair> g, p;
    if (auto it = gold.find(id); it != gold.end()) {
      for (const auto& x : it->second) if (!is_neutral(x.emotion)) g.push_back(x);
    }
    if (auto it = predicted.find(id); it != predicted.end()) {
      for (const auto& x : it->second) if (!is_neutral(x.emotion)) p.push_back(x);
    }
    std::vector<bool> used(p.size(), false);
    std::vector<int> assignment(g.size(), -1), best_assignment;
    std::size_t best = 0;
    best_matching(g, p, 0, used, assignment, best_assignment, 0, best);
    for (std::size_t i = 0; i < g.size(); ++i) {
      gold_count[g[i].emotion] += 1;
      if (best_assignment[i] >= 0) tp[g[i].emotion] += 1;
    }
    for (const auto& x : p) pred_count[x.emotion] += 1;
  }
  double weighted = 0.0;
  double support = 0.0;
  for (Emotion e : kScoredEmotions) {
    const double t = tp[e];
    const double precision = pred_count[e] > 0 ? t / pred_count[e] : 0.0;
    const double recall = gold_count[e] > 0 ? t / gold_count[e] : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    weighted += gold_count[e] * f1;
    support += gold_count[e];
  }
  return support > 0 ? weighted / support : 0.0;
}

std::pair<PairSet, PairSet> random_pair_instance(std::uint64_t seed, std::size_t max_pairs) {
  Rng rng(seed);
  const std::array<Emotion, 4> emotions = {Emotion::joy, Emotion::anger, Emotion::sadness,
                                           Emotion::neutral};
  auto draw = [&](std::size_t count) {
    PairSet out;
    for (std::size_t i = 0; i < count; ++i) {
      const std::string id = "c" + std::to_string(rng.below(2));
      out[id].push_back({1 + static_cast<int>(rng.below(3)), emotions[rng.below(4)],
                         1 + static_cast<int>(rng.below(3))});
    }
    return out;
  };
  PairSet gold = draw(rng.below(max_pairs + 1));
  PairSet predicted = draw(rng.below(max_pairs + 1));
  // Plant copies of gold pairs among the predictions so matches are common.
  for (const auto& [id, list] : gold) {
    for (const auto& p : list) {
      if (rng.bernoulli(0.5)) predicted[id].push_back(p);
    }
  }
  for (auto& [id, list] : predicted) {
    rng.shuffle(list.begin(), list.end());
    if (list.size() > max_pairs) list.resize(max_pairs);
  }
  return {gold, predicted};
}

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"mecpe"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> snapshot(const std::string& dir) {
  namespace fs = std::filesystem;
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      out[fs::relative(entry.path(), dir).string()] = read_file(entry.path().string());
    }
  }
  return out;
}

void write_stub(const std::string& path, const std::map<std::string, std::string>& responses) {
  write_file(path, nlohmann::json(responses).dump(2));
}

std::vector<std::vector<std::string>> quickstart_commands(const std::string& dir) {
  const CorpusSplit split = synthetic_split(20, 6, 6, 7, 3);
  write_stub(dir + "/stub.json", oracle_responses(split.test));
  const std::string corpus = dir + "/corpus.json";
  const std::vector<std::string> features = {"--text", dir + "/features/text.csv", "--audio",
                                             dir + "/features/audio.csv", "--visual",
                                             dir + "/features/visual.csv"};
  auto with_features = [&](std::vector<std::string> args) {
    args.insert(args.end(), features.begin(), features.end());
    return args;
  };
  const std::string predictions = dir + "/eval/predictions.jsonl";
  return {
      {"synth-corpus", "--train", "20", "--dev", "6", "--test", "6", "--utterances", "7", "--seed",
       "3", "--out", corpus},
      {"synth-features", "--corpus", corpus, "--modality", "text", "--dim", "14", "--signal", "0.6",
       "--seed", "1", "--out", dir + "/features/text.csv"},
      {"synth-features", "--corpus", corpus, "--modality", "audio", "--dim", "14", "--signal", "0.6",
       "--seed", "1", "--out", dir + "/features/audio.csv"},
      {"synth-features", "--corpus", corpus, "--modality", "visual", "--dim", "14", "--signal",
       "0.6", "--seed", "1", "--out", dir + "/features/visual.csv"},
      with_features({"train-mer", "--corpus", corpus, "--common-dim", "16", "--epochs", "8",
                     "--batch-size", "8", "--seed", "2", "--out", dir + "/mer"}),
      with_features({"eval-mer", "--corpus", corpus, "--split", "test", "--model",
                     dir + "/mer/model.json", "--out", dir + "/eval"}),
      {"extract-causes", "--corpus", corpus, "--split", "test", "--predictions", predictions,
       "--stub", dir + "/stub.json", "--out", dir + "/mce"},
      {"extract-causes", "--corpus", corpus, "--split", "test", "--gold-emotions", "--heuristic",
       "previous", "--out", dir + "/heuristic"},
      {"eval-pairs", "--corpus", corpus, "--split", "test", "--pairs", dir + "/mce/pairs.json",
       "--out", dir + "/pairs"},
      {"ablate-window", "--corpus", corpus, "--split", "test", "--predictions", predictions,
       "--stub", dir + "/stub.json", "--windows", "0,1,3", "--out", dir + "/ablation"},
      {"report", "--corpus", corpus, "--split", "test", "--predictions", predictions, "--pairs",
       dir + "/mce/pairs.json", "--out", dir + "/report"},
      {"ingest", "--input", corpus, "--out", dir + "/ingest"},
  };
}

std::string temp_dir(const std::string& name) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("mecpe-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

}  // namespace mecpe::testing
