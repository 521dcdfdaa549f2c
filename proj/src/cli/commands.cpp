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

#include "mecpe/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <ostream>

#include <CLI11.hpp>

#include "mecpe/cause.hpp"
#include "mecpe/client.hpp"
#include "mecpe/corpus.hpp"
#include "mecpe/errors.hpp"
#include "mecpe/feature_store.hpp"
#include "mecpe/fusion.hpp"
#include "mecpe/metrics.hpp"
#include "mecpe/synthetic.hpp"

namespace mecpe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kRunConfigName = "run_config.ini";

std::string fixed(double value, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

struct CorpusOptions {
  std::string path;
  std::string format = "canonical-json";
  std::string split = "test";

  void add_to(CLI::App* cmd, bool with_split = true) {
    cmd->add_option("--corpus", path, "Corpus file")->required();
    cmd->add_option("--format", format, "canonical-json or ecf-json")->capture_default_str();
    if (with_split) {
      cmd->add_option("--split", split, "Split to use when the corpus has train/dev/test")
          ->capture_default_str();
    }
  }

  /// The named split of a split document, or the whole list of a flat one.
  Corpus load() const {
    const std::string raw = read_file(path);
    const CorpusFormat fmt = parse_corpus_format(format);
    Corpus corpus = is_split_document(raw) ? parse_corpus_split(raw, fmt).split(split)
                                           : parse_corpus(raw, fmt);
    if (corpus.empty()) throw ValidationError("corpus '" + path + "' has no conversations");
    return corpus;
  }
};

struct FeatureOptions {
  std::string text;
  std::string audio;
  std::string visual;
  std::string policy = "mask-missing";

  void add_to(CLI::App* cmd) {
    cmd->add_option("--text", text, "Text feature file");
    cmd->add_option("--audio", audio, "Audio feature file");
    cmd->add_option("--visual", visual, "Visual feature file");
    cmd->add_option("--align", policy, "strict or mask-missing")->capture_default_str();
  }

  std::vector<FeatureTable> load() const {
    std::vector<FeatureTable> tables;
    const std::array<const std::string*, kModalityCount> paths = {&text, &audio, &visual};
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (!paths[m]->empty()) tables.push_back(load_features(*paths[m], kAllModalities[m]));
    }
    if (tables.empty()) throw ValidationError("at least one of --text/--audio/--visual is required");
    return tables;
  }
};

struct ExtractOptions {
  CorpusOptions corpus;
  std::string predictions;
  bool gold_emotions = false;
  std::string stub;
  std::string endpoint;
  std::string endpoint_path = "/generate";
  int timeout_ms = 10000;
  std::size_t max_in_flight = 4;
  int window = 5;
  std::string template_id{kDefaultTemplate};
  bool include_image = false;
  double tau = kDefaultMatchThreshold;
  std::string heuristic;
  int max_failures = -1;
  std::string out;

  void add_to(CLI::App* cmd, bool with_window) {
    corpus.add_to(cmd);
    cmd->add_option("--predictions", predictions, "Emotion predictions (JSON lines)");
    cmd->add_flag("--gold-emotions", gold_emotions, "Use gold emotions instead of predictions");
    cmd->add_option("--stub", stub, "Scripted stub fixture (JSON object)");
    cmd->add_option("--endpoint", endpoint, "Generative model base URL, e.g. http://127.0.0.1:8080");
    cmd->add_option("--endpoint-path", endpoint_path, "Request path")->capture_default_str();
    cmd->add_option("--timeout-ms", timeout_ms, "Per-request timeout")->capture_default_str();
    cmd->add_option("--max-in-flight", max_in_flight, "Concurrent requests")->capture_default_str();
    if (with_window) {
      cmd->add_option("--window", window, "History window w")->capture_default_str();
    }
    cmd->add_option("--template", template_id, "Prompt template id")->capture_default_str();
    cmd->add_flag("--include-image", include_image, "Attach the target's media reference");
    cmd->add_option("--tau", tau, "Similarity threshold")->capture_default_str();
    cmd->add_option("--heuristic", heuristic, "Skip generation; use heuristic 'self' or 'previous'");
    cmd->add_option("--max-failures", max_failures,
                    "Exit with the client-failure code above this many failures (-1: never)")
        ->capture_default_str();
    cmd->add_option("--out", out, "Output directory")->required();
  }

  EmotionMap emotions(const Corpus& c) const {
    if (gold_emotions == !predictions.empty()) {
      throw ValidationError("give exactly one of --predictions or --gold-emotions");
    }
    if (gold_emotions) return gold_emotion_map(c);
    return emotion_map(parse_predictions_jsonl(read_file(predictions)));
  }

  std::unique_ptr<GenerativeClient> client() const {
    if (!stub.empty() && !endpoint.empty()) {
      throw ValidationError("--stub and --endpoint are mutually exclusive");
    }
    if (!stub.empty()) {
      return std::make_unique<ScriptedStubClient>(ScriptedStubClient::from_fixture(stub));
    }
    if (!endpoint.empty()) {
      return std::make_unique<HttpGenerativeClient>(
          HttpClientOptions{endpoint, endpoint_path, std::chrono::milliseconds(timeout_ms)});
    }
    throw ValidationError("a generative client is required: --stub or --endpoint");
  }

  ExtractionResult run(const Corpus& c, const EmotionMap& e, const GenerativeClient* gen,
                       int w) const {
    if (!heuristic.empty()) return heuristic_extraction(c, e, parse_heuristic(heuristic));
    ExtractionConfig config{{w, template_id, include_image}, tau, max_in_flight};
    return extract_causes(c, e, *gen, config);
  }
};

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string join(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

std::string report_text(const MetricsReport& pairs, const ConfusionMatrix* confusion,
                        const std::vector<ConversationMismatch>& worst) {
  std::string out;
  out += "Emotion-cause pairs\n";
  out += "  weighted F1: " + fixed(pairs.weighted_f1) + "\n";
  out += "  macro F1:    " + fixed(pairs.macro_f1) + "\n";
  out += "  gold pairs: " + std::to_string(pairs.gold_pairs) +
         ", predicted pairs: " + std::to_string(pairs.predicted_pairs) + "\n\n";
  out += "  category   n     tp    fp    fn    precision  recall  f1\n";
  for (const auto& c : pairs.per_category) {
    char line[160];
    std::snprintf(line, sizeof(line), "  %-9s %5lld %5lld %5lld %5lld    %.4f    %.4f  %.4f\n",
                  std::string(to_string(c.category)).c_str(), static_cast<long long>(c.n),
                  static_cast<long long>(c.tp), static_cast<long long>(c.fp),
                  static_cast<long long>(c.fn), c.precision, c.recall, c.f1);
    out += line;
  }

  if (confusion != nullptr) {
    out += "\nEmotion recognition\n";
    out += "  weighted F1 (7 classes): " + fixed(emotion_weighted_f1(*confusion)) + "\n";
    out += "  accuracy:                " + fixed(accuracy(*confusion)) + "\n";
    out += "  neutral leakage:         " + fixed(neutral_leakage(*confusion)) + "\n";
    out += "  confusion (rows gold, columns predicted):\n";
    char cell[32];
    out += "  " + std::string(10, ' ');
    for (Emotion p : kAllEmotions) {
      std::snprintf(cell, sizeof(cell), "%9s", std::string(to_string(p)).c_str());
      out += cell;
    }
    out += "\n";
    for (Emotion g : kAllEmotions) {
      std::snprintf(cell, sizeof(cell), "  %-10s", std::string(to_string(g)).c_str());
      out += cell;
      for (Emotion p : kAllEmotions) {
        std::snprintf(cell, sizeof(cell), "%9lld",
                      static_cast<long long>(confusion->counts(index_of(g), index_of(p))));
        out += cell;
      }
      out += "\n";
    }
  }

  out += "\nMismatched conversations (worst first)\n";
  if (worst.empty()) out += "  none\n";
  auto render = [](const EmotionCausePair& p) {
    return "(" + std::to_string(p.emotion_utterance) + ", " + std::string(to_string(p.emotion)) +
           ", " + std::to_string(p.cause_utterance) + ")";
  };
  for (const auto& conv : worst) {
    out += "  " + conv.conversation_id + ": tp=" + std::to_string(conv.tp) +
           " fp=" + std::to_string(conv.fp) + " fn=" + std::to_string(conv.fn) + "\n";
    for (const auto& d : conv.details) {
      out += "    " + std::string(to_string(d.kind));
      if (d.gold) out += " gold " + render(*d.gold);
      if (d.predicted) out += " predicted " + render(*d.predicted);
      out += "\n";
    }
  }
  return out;
}

json mismatches_json(const std::vector<ConversationMismatch>& worst) {
  json out = json::array();
  for (const auto& conv : worst) {
    json details = json::array();
    for (const auto& d : conv.details) {
      details.push_back({{"kind", std::string(to_string(d.kind))},
                         {"gold", d.gold ? to_json(*d.gold) : json(nullptr)},
                         {"predicted", d.predicted ? to_json(*d.predicted) : json(nullptr)}});
    }
    out.push_back({{"conversation_id", conv.conversation_id},
                   {"tp", conv.tp},
                   {"fp", conv.fp},
                   {"fn", conv.fn},
                   {"details", std::move(details)}});
  }
  return out;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage emotion-cause pair extraction for conversations", "mecpe"};
  app.set_config("--config", "", "Run configuration file (INI/TOML); command-line flags win");
  app.require_subcommand(1);

  std::function<int()> action;
  std::string config_target;  // where the effective configuration is written

  // ingest ------------------------------------------------------------------
  struct {
    std::string input, format = "canonical-json", manifest, out;
  } ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse and validate a corpus into canonical JSON");
  ingest_cmd->add_option("--input", ingest.input, "Corpus file")->required();
  ingest_cmd->add_option("--format", ingest.format, "canonical-json or ecf-json")->capture_default_str();
  ingest_cmd->add_option("--manifest", ingest.manifest, "Release manifest with split sizes");
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
  ingest_cmd->callback([&] {
    config_target = join(ingest.out, kRunConfigName);
    action = [&] {
      const std::string raw = read_file(ingest.input);
      const CorpusFormat fmt = parse_corpus_format(ingest.format);
      std::vector<Violation> violations;
      std::string canonical;
      std::size_t conversations = 0;
      if (is_split_document(raw)) {
        CorpusSplit split = parse_corpus_split_unchecked(raw, fmt);
        violations = validate(split);
        if (!ingest.manifest.empty()) {
          auto extra = check_manifest(split, json::parse(read_file(ingest.manifest)));
          violations.insert(violations.end(), extra.begin(), extra.end());
        }
        canonical = serialize(split);
        conversations = split.train.size() + split.dev.size() + split.test.size();
      } else {
        Corpus corpus = parse_corpus_unchecked(raw, fmt);
        violations = validate(corpus);
        canonical = serialize(corpus);
        conversations = corpus.size();
      }
      prepare_dir(ingest.out);
      write_json(join(ingest.out, "validation.json"), to_json(violations));
      if (!violations.empty()) {
        err << violations.size() << " validation violation(s); see validation.json\n";
        return kValidation;
      }
      write_file(join(ingest.out, "corpus.json"), canonical);
      out << "ingested " << conversations << " conversations\n";
      return kOk;
    };
  });

  // synth-corpus ------------------------------------------------------------
  struct {
    std::size_t train = 30, dev = 10, test = 10, utterances = 7;
    std::uint64_t seed = 1;
    std::string out;
  } synth_corpus;
  auto* synth_corpus_cmd =
      app.add_subcommand("synth-corpus", "Write a synthetic labelled corpus for desk-scale runs");
  synth_corpus_cmd->add_option("--train", synth_corpus.train)->capture_default_str();
  synth_corpus_cmd->add_option("--dev", synth_corpus.dev)->capture_default_str();
  synth_corpus_cmd->add_option("--test", synth_corpus.test)->capture_default_str();
  synth_corpus_cmd->add_option("--utterances", synth_corpus.utterances, "Utterances per conversation")
      ->capture_default_str();
  synth_corpus_cmd->add_option("--seed", synth_corpus.seed)->capture_default_str();
  synth_corpus_cmd->add_option("--out", synth_corpus.out, "Output corpus file")->required();
  synth_corpus_cmd->callback([&] {
    config_target = synth_corpus.out + ".run_config.ini";
    action = [&] {
      auto split = synthetic_split(synth_corpus.train, synth_corpus.dev, synth_corpus.test,
                                   synth_corpus.utterances, synth_corpus.seed);
      write_file(synth_corpus.out, serialize(split));
      return kOk;
    };
  });

  // synth-features ----------------------------------------------------------
  struct {
    CorpusOptions corpus;
    std::string modality = "text";
    Eigen::Index dim = 0;
    double signal = 1.0;
    std::uint64_t seed = 1;
    std::vector<std::string> classes;
    std::string out;
  } synth;
  auto* synth_cmd = app.add_subcommand("synth-features", "Generate synthetic per-utterance features");
  synth.corpus.add_to(synth_cmd, false);
  synth_cmd->add_option("--modality", synth.modality, "text, audio or visual")->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Feature dimension (0: modality default)")->capture_default_str();
  synth_cmd->add_option("--signal", synth.signal, "Label signal in [0, 1]")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes, "Classes this modality can separate")->delimiter(',');
  synth_cmd->add_option("--out", synth.out, "Output feature file")->required();
  synth_cmd->callback([&] {
    config_target = synth.out + ".run_config.ini";
    action = [&] {
      const std::string raw = read_file(synth.corpus.path);
      const CorpusFormat fmt = parse_corpus_format(synth.corpus.format);
      Corpus corpus;
      if (is_split_document(raw)) {
        CorpusSplit split = parse_corpus_split(raw, fmt);
        for (Corpus* part : {&split.train, &split.dev, &split.test}) {
          corpus.insert(corpus.end(), part->begin(), part->end());
        }
      } else {
        corpus = parse_corpus(raw, fmt);
      }
      SynthOptions options{parse_modality(synth.modality), synth.dim, synth.signal, synth.seed, {}};
      for (const auto& c : synth.classes) options.visible_classes.push_back(parse_emotion(c));
      save_features(synth_features(corpus, options), synth.out);
      return kOk;
    };
  });

  // train-mer ---------------------------------------------------------------
  struct {
    std::string corpus, format = "canonical-json", out;
    FeatureOptions features;
    FusionConfig fusion;
  } tr;
  auto* train_cmd = app.add_subcommand("train-mer", "Train the attention-fusion emotion classifier");
  train_cmd->add_option("--corpus", tr.corpus, "Corpus with train and dev splits")->required();
  train_cmd->add_option("--format", tr.format)->capture_default_str();
  tr.features.add_to(train_cmd);
  train_cmd->add_option("--common-dim", tr.fusion.common_dim)->capture_default_str();
  train_cmd->add_option("--dropout", tr.fusion.dropout_rate)->capture_default_str();
  train_cmd->add_option("--lr", tr.fusion.learning_rate)->capture_default_str();
  train_cmd->add_option("--epochs", tr.fusion.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tr.fusion.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tr.fusion.seed)->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->callback([&] {
    config_target = join(tr.out, kRunConfigName);
    action = [&] {
      tr.fusion.check();
      const std::string raw = read_file(tr.corpus);
      if (!is_split_document(raw)) throw ValidationError("train-mer needs a train/dev split document");
      const CorpusSplit split = parse_corpus_split(raw, parse_corpus_format(tr.format));
      if (split.train.empty() || split.dev.empty()) {
        throw ValidationError("train-mer needs non-empty train and dev splits");
      }
      const auto tables = tr.features.load();
      const AlignPolicy policy = parse_align_policy(tr.features.policy);
      const AlignedDataset train_set = align(split.train, tables, policy);
      const AlignedDataset dev_set = align(split.dev, tables, policy);

      auto result = train(init_model<double>(tr.fusion, train_set.dims), train_set, dev_set, tr.fusion);
      const auto dev_predictions = predict(result.model, dev_set);
      std::map<UtteranceKey, Emotion> predicted;
      for (const auto& p : dev_predictions) predicted.emplace(p.key, p.predicted);
      const ConfusionMatrix cm = emotion_confusion(split.dev, predicted);

      prepare_dir(tr.out);
      save_checkpoint(result.model, join(tr.out, "model.json"));
      write_file(join(tr.out, "history.csv"), history_csv(result.history));
      write_json(join(tr.out, "dev_metrics.json"),
                 {{"best_epoch", result.best_epoch},
                  {"weighted_f1", emotion_weighted_f1(cm)},
                  {"accuracy", accuracy(cm)},
                  {"neutral_leakage", neutral_leakage(cm)},
                  {"confusion", to_json(cm)}});
      out << "best epoch " << result.best_epoch << ", dev weighted F1 "
          << fixed(emotion_weighted_f1(cm)) << "\n";
      return kOk;
    };
  });

  // eval-mer ----------------------------------------------------------------
  struct {
    CorpusOptions corpus;
    FeatureOptions features;
    std::string model, out;
  } ev;
  auto* eval_cmd = app.add_subcommand("eval-mer", "Predict emotions and score them");
  ev.corpus.add_to(eval_cmd);
  ev.features.add_to(eval_cmd);
  eval_cmd->add_option("--model", ev.model, "Checkpoint from train-mer")->required();
  eval_cmd->add_option("--out", ev.out, "Output directory")->required();
  eval_cmd->callback([&] {
    config_target = join(ev.out, kRunConfigName);
    action = [&] {
      const Corpus corpus = ev.corpus.load();
      const FusionModelD model = load_checkpoint(ev.model);
      const AlignedDataset data =
          align(corpus, ev.features.load(), parse_align_policy(ev.features.policy));
      const auto predictions = predict(model, data);
      std::map<UtteranceKey, Emotion> predicted;
      for (const auto& p : predictions) predicted.emplace(p.key, p.predicted);
      const ConfusionMatrix cm = emotion_confusion(corpus, predicted);

      prepare_dir(ev.out);
      write_file(join(ev.out, "predictions.jsonl"), predictions_jsonl(predictions));
      write_file(join(ev.out, "confusion.csv"), confusion_csv(cm));
      write_json(join(ev.out, "emotion_metrics.json"),
                 {{"weighted_f1", emotion_weighted_f1(cm)},
                  {"accuracy", accuracy(cm)},
                  {"neutral_leakage", neutral_leakage(cm)},
                  {"dropped_utterances", data.dropped},
                  {"confusion", to_json(cm)}});
      out << "weighted F1 " << fixed(emotion_weighted_f1(cm)) << " over " << predictions.size()
          << " utterances\n";
      return kOk;
    };
  });

  // extract-causes ----------------------------------------------------------
  ExtractOptions ex;
  auto* extract_cmd = app.add_subcommand("extract-causes", "Generate, match and assemble cause pairs");
  ex.add_to(extract_cmd, true);
  extract_cmd->callback([&] {
    config_target = join(ex.out, kRunConfigName);
    action = [&] {
      const Corpus corpus = ex.corpus.load();
      const EmotionMap emotions = ex.emotions(corpus);
      std::unique_ptr<GenerativeClient> client;
      if (ex.heuristic.empty()) client = ex.client();
      const ExtractionResult result = ex.run(corpus, emotions, client.get(), ex.window);

      prepare_dir(ex.out);
      write_file(join(ex.out, "decisions.jsonl"), decisions_jsonl(result.decisions));
      write_json(join(ex.out, "pairs.json"), to_json(result.pairs));
      write_json(join(ex.out, "summary.json"),
                 {{"targets", result.targets},
                  {"failures", result.failures},
                  {"empty_responses", result.empty_responses},
                  {"window", ex.window},
                  {"tau", ex.tau}});
      for (const auto& d : result.decisions) {
        if (d.error) err << "generation failed for " << to_string(d.target) << ": " << *d.error << "\n";
      }
      out << result.targets << " targets, " << result.failures << " client failures, "
          << result.empty_responses << " empty responses\n";
      if (ex.max_failures >= 0 && result.failures > static_cast<std::size_t>(ex.max_failures)) {
        return kClientFailures;
      }
      return kOk;
    };
  });

  // eval-pairs --------------------------------------------------------------
  struct {
    CorpusOptions corpus;
    std::string pairs, out;
  } ep;
  auto* eval_pairs_cmd = app.add_subcommand("eval-pairs", "Score predicted pairs against gold");
  ep.corpus.add_to(eval_pairs_cmd);
  eval_pairs_cmd->add_option("--pairs", ep.pairs, "Predicted pairs (pairs.json)")->required();
  eval_pairs_cmd->add_option("--out", ep.out, "Output directory")->required();
  eval_pairs_cmd->callback([&] {
    config_target = join(ep.out, kRunConfigName);
    action = [&] {
      const Corpus corpus = ep.corpus.load();
      const PairSet predicted = pairs_from_json(json::parse(read_file(ep.pairs)));
      const MetricsReport report = score_pairs(gold_pairs(corpus), predicted);
      prepare_dir(ep.out);
      write_json(join(ep.out, "pair_metrics.json"), to_json(report));
      out << "weighted F1 " << fixed(report.weighted_f1) << "\n";
      return kOk;
    };
  });

  // ablate-window -----------------------------------------------------------
  ExtractOptions ab;
  std::vector<int> windows;
  auto* ablate_cmd = app.add_subcommand("ablate-window", "Score cause extraction across history windows");
  ab.add_to(ablate_cmd, false);
  ablate_cmd->add_option("--windows", windows, "Comma-separated window sizes")
      ->required()
      ->delimiter(',');
  ablate_cmd->callback([&] {
    config_target = join(ab.out, kRunConfigName);
    action = [&] {
      const Corpus corpus = ab.corpus.load();
      const EmotionMap emotions = ab.emotions(corpus);
      std::unique_ptr<GenerativeClient> client;
      if (ab.heuristic.empty()) client = ab.client();
      for (int w : windows) {
        if (w < 0) throw ValidationError("window sizes must be non-negative");
      }
      // Reject duplicates before spending any generation calls.
      std::vector<std::pair<int, MetricsReport>> probe;
      for (int w : windows) probe.emplace_back(w, MetricsReport{});
      ablation_curve(probe);

      std::vector<std::pair<int, MetricsReport>> results;
      json per_window = json::array();
      std::size_t failures = 0;
      const PairSet gold = gold_pairs(corpus);
      for (int w : windows) {
        const auto result = ab.run(corpus, emotions, client.get(), w);
        failures += result.failures;
        results.emplace_back(w, score_pairs(gold, result.pairs));
        per_window.push_back({{"window", w}, {"failures", result.failures},
                              {"metrics", to_json(results.back().second)}});
      }
      const auto rows = ablation_curve(results);
      prepare_dir(ab.out);
      write_file(join(ab.out, "ablation.csv"), ablation_csv(rows));
      write_json(join(ab.out, "ablation.json"), per_window);
      out << ablation_csv(rows);
      if (ab.max_failures >= 0 && failures > static_cast<std::size_t>(ab.max_failures)) {
        return kClientFailures;
      }
      return kOk;
    };
  });

  // report ------------------------------------------------------------------
  struct {
    CorpusOptions corpus;
    std::string predictions, pairs, out;
    std::size_t worst_k = 10;
  } rp;
  auto* report_cmd = app.add_subcommand("report", "Error analysis of a pipeline run");
  rp.corpus.add_to(report_cmd);
  report_cmd->add_option("--predictions", rp.predictions, "Emotion predictions (JSON lines)");
  report_cmd->add_option("--pairs", rp.pairs, "Predicted pairs (pairs.json)")->required();
  report_cmd->add_option("--worst-k", rp.worst_k, "Mismatched conversations to list")->capture_default_str();
  report_cmd->add_option("--out", rp.out, "Output directory")->required();
  report_cmd->callback([&] {
    config_target = join(rp.out, kRunConfigName);
    action = [&] {
      const Corpus corpus = rp.corpus.load();
      const PairSet gold = gold_pairs(corpus);
      const PairSet predicted = pairs_from_json(json::parse(read_file(rp.pairs)));
      const MetricsReport report = score_pairs(gold, predicted);
      const auto worst = mismatches(gold, predicted, rp.worst_k);

      std::optional<ConfusionMatrix> cm;
      if (!rp.predictions.empty()) {
        cm = emotion_confusion(corpus, emotion_map(parse_predictions_jsonl(read_file(rp.predictions))));
      }
      json j = {{"pair_metrics", to_json(report)}, {"mismatches", mismatches_json(worst)}};
      if (cm) {
        j["emotion"] = {{"weighted_f1", emotion_weighted_f1(*cm)},
                        {"accuracy", accuracy(*cm)},
                        {"neutral_leakage", neutral_leakage(*cm)},
                        {"confusion", to_json(*cm)}};
      }
      const std::string text = report_text(report, cm ? &*cm : nullptr, worst);
      prepare_dir(rp.out);
      write_file(join(rp.out, "report.txt"), text);
      write_json(join(rp.out, "report.json"), j);
      if (cm) write_file(join(rp.out, "confusion.csv"), confusion_csv(*cm));
      out << text;
      return kOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const int code = action();
    if (!config_target.empty()) {
      const auto parent = fs::path(config_target).parent_path();
      if (!parent.empty()) prepare_dir(parent.string());
      const CLI::App* active = app.get_subcommands().front();
      write_file(config_target,
                 "[" + active->get_name() + "]\n" + active->config_to_str(true, false));
    }
    return code;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const TrainingError& e) {
    err << "training diverged: " << e.what() << "\n";
    return kDivergence;
  } catch (const GenerationError& e) {
    err << "client failure: " << e.what() << "\n";
    return kClientFailures;
  } catch (const Error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace mecpe::cli
