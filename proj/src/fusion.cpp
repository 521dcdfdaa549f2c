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

#include "mecpe/fusion.hpp"

#include <numeric>
#include <sstream>

#include "mecpe/format.hpp"
#include "mecpe/metrics.hpp"

namespace mecpe {

using nlohmann::json;

namespace {

constexpr const char* kCheckpointFormat = "mecpe-fusion-v1";

json matrix_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

template <typename Tensor>
void fill_tensor(Tensor& tensor, const json& j, const std::string& name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (tensor.rows() != rows || tensor.cols() != cols ||
      static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ShapeError("checkpoint tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", expected " + std::to_string(tensor.rows()) + "x" +
                     std::to_string(tensor.cols()));
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) tensor(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
}

ConfusionMatrix confusion_of(const std::vector<EmotionPrediction>& predictions,
                             const AlignedDataset& dataset) {
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& label = dataset.examples[i].label;
    if (!label) {
      ++cm.skipped_unlabelled;
      continue;
    }
    cm.add(*label, predictions[i].predicted);
  }
  return cm;
}

}  // namespace

void FusionConfig::check() const {
  if (common_dim < 1) throw ValidationError("common_dim must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("dropout_rate must lie in [0, 1)");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be a finite non-negative number");
  }
  if (epochs < 1) throw ValidationError("epochs must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be positive");
}

TrainResult train(FusionModelD model, const AlignedDataset& train_set,
                  const AlignedDataset& dev_set, const FusionConfig& config) {
  config.check();
  if (train_set.examples.empty()) throw ValidationError("training split is empty");
  if (dev_set.examples.empty()) throw ValidationError("dev split is empty");
  model.config = config;

  std::vector<const AlignedExample*> order;
  order.reserve(train_set.examples.size());
  for (const auto& e : train_set.examples) order.push_back(&e);

  Rng rng(config.seed);
  TrainResult result{model, {}, 0};
  double best_f1 = -1.0;
  const auto batch_size = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    int batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
      const std::size_t count = std::min(batch_size, order.size() - start);
      std::span<const AlignedExample* const> batch(order.data() + start, count);
      auto step = loss_and_grads(model, batch, Mode::train, &rng);
      if (!std::isfinite(step.loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      }
      model.params.add_scaled(step.grads, -config.learning_rate);
      if (!model.params.all_finite()) {
        throw TrainingError("non-finite parameters at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(batch_index));
      }
      epoch_loss += step.loss * static_cast<double>(count);
    }

    const double dev_f1 = emotion_weighted_f1(predict(model, dev_set), dev_set);
    result.history.push_back({epoch, epoch_loss / static_cast<double>(order.size()), dev_f1});
    if (dev_f1 > best_f1) {
      best_f1 = dev_f1;
      result.model = model;
      result.best_epoch = epoch;
    }
  }
  return result;
}

std::vector<EmotionPrediction> predict(const FusionModelD& model, const AlignedDataset& dataset) {
  std::vector<EmotionPrediction> out;
  out.reserve(dataset.examples.size());
  for (const auto& example : dataset.examples) {
    const auto fwd = forward(model, example, Mode::eval);
    EmotionPrediction p;
    p.key = example.key;
    p.probabilities = softmax<double>(fwd.logits);
    p.predicted = argmax_emotion(fwd.logits);
    p.mask = example.mask;
    p.attention = fwd.attention;
    out.push_back(std::move(p));
  }
  return out;
}

double emotion_weighted_f1(const std::vector<EmotionPrediction>& predictions,
                           const AlignedDataset& dataset) {
  if (predictions.size() != dataset.examples.size()) {
    throw ConsistencyError("prediction count does not match the dataset");
  }
  return emotion_weighted_f1(confusion_of(predictions, dataset));
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,train_loss,dev_weighted_f1\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," +
           format_double(r.dev_weighted_f1) + "\n";
  }
  return out;
}

json checkpoint_json(const FusionModelD& model) {
  json dims = json::object();
  for (Modality m : kAllModalities) dims[std::string(to_string(m))] = model.input_dims[index_of(m)];
  json params = json::object();
  model.params.for_each(
      [&](const std::string& name, const auto& tensor) { params[name] = matrix_json(tensor); });
  const auto& c = model.config;
  return {{"format", kCheckpointFormat},
          {"config",
           {{"common_dim", c.common_dim},
            {"dropout_rate", c.dropout_rate},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed}}},
          {"input_dims", std::move(dims)},
          {"params", std::move(params)}};
}

FusionModelD model_from_checkpoint(const json& j) {
  try {
    if (j.at("format") != kCheckpointFormat) {
      throw ParseError("unsupported checkpoint format " + j.at("format").dump());
    }
    const auto& jc = j.at("config");
    FusionConfig config;
    config.common_dim = jc.at("common_dim").get<Eigen::Index>();
    config.dropout_rate = jc.at("dropout_rate").get<double>();
    config.learning_rate = jc.at("learning_rate").get<double>();
    config.epochs = jc.at("epochs").get<int>();
    config.batch_size = jc.at("batch_size").get<int>();
    config.seed = jc.at("seed").get<std::uint64_t>();

    std::array<Eigen::Index, kModalityCount> dims{};
    for (Modality m : kAllModalities) {
      dims[index_of(m)] = j.at("input_dims").at(std::string(to_string(m))).get<Eigen::Index>();
    }
    // Shapes come from init_model; values are overwritten below.
    FusionModelD model = init_model<double>(config, dims);
    const auto& jp = j.at("params");
    std::size_t expected = 0;
    model.params.for_each([&](const std::string& name, auto& tensor) {
      fill_tensor(tensor, jp.at(name), name);
      ++expected;
    });
    if (jp.size() != expected) throw ShapeError("checkpoint carries unexpected tensors");
    if (!model.params.all_finite()) throw ValidationError("checkpoint holds non-finite parameters");
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const FusionModelD& model, const std::string& path) {
  write_file(path, checkpoint_json(model).dump() + "\n");
}

FusionModelD load_checkpoint(const std::string& path) {
  const std::string raw = read_file(path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  return model_from_checkpoint(j);
}

json to_json(const EmotionPrediction& p) {
  json probs = json::array();
  for (Eigen::Index i = 0; i < p.probabilities.size(); ++i) probs.push_back(p.probabilities[i]);
  json attention = json::object();
  for (Modality m : kAllModalities) {
    if (p.mask.test(index_of(m))) attention[std::string(to_string(m))] = p.attention[index_of(m)];
  }
  return {{"conversation_id", p.key.conversation_id},
          {"utterance_index", p.key.utterance_index},
          {"predicted", std::string(to_string(p.predicted))},
          {"probabilities", std::move(probs)},
          {"attention", std::move(attention)}};
}

EmotionPrediction prediction_from_json(const json& j) {
  try {
    EmotionPrediction p;
    p.key = {j.at("conversation_id").get<std::string>(), j.at("utterance_index").get<int>()};
    p.predicted = parse_emotion(j.at("predicted").get<std::string>());
    p.probabilities = Logits<double>::Zero();
    if (auto it = j.find("probabilities"); it != j.end()) {
      if (it->size() != kEmotionCount) throw ShapeError("probabilities must have 7 entries");
      for (std::size_t i = 0; i < kEmotionCount; ++i) {
        p.probabilities[static_cast<Eigen::Index>(i)] = (*it)[i].get<double>();
      }
    }
    if (auto it = j.find("attention"); it != j.end()) {
      for (const auto& [name, weight] : it->items()) {
        const auto m = index_of(parse_modality(name));
        p.mask.set(m);
        p.attention[m] = weight.get<double>();
      }
    }
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed prediction record: ") + e.what());
  }
}

std::string predictions_jsonl(const std::vector<EmotionPrediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) out += to_json(p).dump() + "\n";
  return out;
}

std::vector<EmotionPrediction> parse_predictions_jsonl(std::string_view text) {
  std::vector<EmotionPrediction> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(prediction_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed prediction line: ") + e.what(), line_no, 1);
    }
  }
  return out;
}

}  // namespace mecpe
