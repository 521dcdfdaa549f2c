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
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "mecpe/emotion.hpp"
#include "mecpe/errors.hpp"
#include "mecpe/feature_store.hpp"
#include "mecpe/random.hpp"

namespace mecpe {

struct FusionConfig {
  Eigen::Index common_dim = 128;
  double dropout_rate = 0.1;
  double learning_rate = 0.05;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 1;

  /// Throws ValidationError on out-of-range settings.
  void check() const;
};

/// Every trainable tensor of the fusion classifier. Gradients use the same
/// type, so optimizer steps are plain tensor arithmetic.
template <typename Scalar>
struct FusionParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  // Per modality; left empty when the model has no input of that modality.
  std::array<Matrix, kModalityCount> projection;  // common_dim x input_dim
  std::array<Vector, kModalityCount> projection_bias;
  Vector query;            // common_dim
  Matrix classifier;       // kEmotionCount x common_dim
  Vector classifier_bias;  // kEmotionCount

  /// Visits (name, tensor) for every tensor, in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (projection[m].size() == 0) continue;
      const std::string name(to_string(kAllModalities[m]));
      f("projection." + name, projection[m]);
      f("projection_bias." + name, projection_bias[m]);
    }
    f(std::string("query"), query);
    f(std::string("classifier"), classifier);
    f(std::string("classifier_bias"), classifier_bias);
  }

  template <typename F>
  void for_each(F&& f) const {
    const_cast<FusionParams*>(this)->for_each(
        [&](const std::string& name, auto& tensor) { f(name, std::as_const(tensor)); });
  }

  FusionParams zeros_like() const {
    FusionParams out = *this;
    out.for_each([](const std::string&, auto& t) { t.setZero(); });
    return out;
  }

  /// this += scale * other, tensor by tensor.
  void add_scaled(const FusionParams& other, Scalar scale) {
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      projection[m] += scale * other.projection[m];
      projection_bias[m] += scale * other.projection_bias[m];
    }
    query += scale * other.query;
    classifier += scale * other.classifier;
    classifier_bias += scale * other.classifier_bias;
  }

  bool all_finite() const {
    bool finite = true;
    for_each([&](const std::string&, const auto& t) { finite = finite && t.allFinite(); });
    return finite;
  }

  /// Copies of every tensor in for_each order.
  std::vector<Matrix> flattened() const {
    std::vector<Matrix> out;
    for_each([&](const std::string&, const auto& t) { out.emplace_back(t); });
    return out;
  }

  bool operator==(const FusionParams& other) const {
    const auto lhs = flattened();
    const auto rhs = other.flattened();
    if (lhs.size() != rhs.size()) return false;
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      if (lhs[i].rows() != rhs[i].rows() || lhs[i].cols() != rhs[i].cols()) return false;
      if (lhs[i] != rhs[i]) return false;
    }
    return true;
  }
};

template <typename Scalar>
struct FusionModel {
  FusionConfig config;
  std::array<Eigen::Index, kModalityCount> input_dims{};  // 0 = modality unused
  FusionParams<Scalar> params;

  bool operator==(const FusionModel& other) const {
    return input_dims == other.input_dims && config.common_dim == other.config.common_dim &&
           params == other.params;
  }
};

/// Glorot-uniform weights from the config seed; zero biases.
template <typename Scalar>
FusionModel<Scalar> init_model(const FusionConfig& config,
                               const std::array<Eigen::Index, kModalityCount>& input_dims) {
  config.check();
  FusionModel<Scalar> model{config, input_dims, {}};
  const Eigen::Index d = config.common_dim;
  Rng rng(config.seed ^ 0xA5A5A5A5DEADBEEFULL);
  auto glorot = [&](auto& tensor, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      tensor.data()[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
    }
  };
  auto& p = model.params;
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    if (input_dims[m] < 0) throw ShapeError("input dimension must be non-negative");
    if (input_dims[m] == 0) continue;
    p.projection[m].resize(d, input_dims[m]);
    glorot(p.projection[m], input_dims[m], d);
    p.projection_bias[m] = FusionParams<Scalar>::Vector::Zero(d);
  }
  p.query.resize(d);
  glorot(p.query, d, 1);
  p.classifier.resize(static_cast<Eigen::Index>(kEmotionCount), d);
  glorot(p.classifier, d, static_cast<Eigen::Index>(kEmotionCount));
  p.classifier_bias = FusionParams<Scalar>::Vector::Zero(static_cast<Eigen::Index>(kEmotionCount));
  return model;
}

enum class Mode { train, eval };

template <typename Scalar>
using Logits = Eigen::Matrix<Scalar, static_cast<int>(kEmotionCount), 1>;

/// Intermediate values kept for the backward pass.
template <typename Scalar>
struct ForwardCache {
  using Vector = typename FusionParams<Scalar>::Vector;
  ModalityMask mask;
  std::array<Vector, kModalityCount> pre_activation;  // W x + b
  std::array<Vector, kModalityCount> dropout_scale;   // 0 or 1/(1-p); empty in eval mode
  std::array<Vector, kModalityCount> hidden;          // after relu and dropout
  std::array<Scalar, kModalityCount> attention{};
  Vector fused;
};

template <typename Scalar>
struct ForwardResult {
  Logits<Scalar> logits;
  std::array<Scalar, kModalityCount> attention{};  // zero outside the mask
  ForwardCache<Scalar> cache;
};

/// h_m = dropout(relu(W_m x_m + b_m)); alpha = softmax_m(q . h_m / sqrt(d)) over
/// the example's mask; logits = W_c (sum_m alpha_m h_m) + b_c. `rng` is only
/// drawn from in train mode with a positive dropout rate.
template <typename Scalar>
ForwardResult<Scalar> forward(const FusionModel<Scalar>& model, const AlignedExample& example,
                              Mode mode, Rng* rng = nullptr) {
  using Vector = typename FusionParams<Scalar>::Vector;
  const auto& p = model.params;
  const Eigen::Index d = model.config.common_dim;
  const Scalar inv_sqrt_d = Scalar(1) / std::sqrt(static_cast<Scalar>(d));
  const double rate = model.config.dropout_rate;
  const bool drop = mode == Mode::train && rate > 0.0;
  if (drop && rng == nullptr) throw std::invalid_argument("train-mode forward needs an rng");
  if (example.mask.none()) throw ShapeError("example " + to_string(example.key) + " has an empty mask");

  ForwardResult<Scalar> out;
  auto& cache = out.cache;
  cache.mask = example.mask;

  std::array<Scalar, kModalityCount> score{};
  Scalar max_score = -std::numeric_limits<Scalar>::infinity();
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    if (!example.mask.test(m)) continue;
    const auto& x = example.features[m];
    if (model.input_dims[m] == 0 || x.size() != model.input_dims[m]) {
      throw ShapeError("example " + to_string(example.key) + ": " +
                       std::string(to_string(kAllModalities[m])) + " feature has dim " +
                       std::to_string(x.size()) + ", model expects " +
                       std::to_string(model.input_dims[m]));
    }
    cache.pre_activation[m] = p.projection[m] * x.template cast<Scalar>() + p.projection_bias[m];
    Vector h = cache.pre_activation[m].cwiseMax(Scalar(0));
    if (drop) {
      const Scalar keep_scale = Scalar(1) / static_cast<Scalar>(1.0 - rate);
      cache.dropout_scale[m].resize(d);
      for (Eigen::Index i = 0; i < d; ++i) {
        cache.dropout_scale[m][i] = rng->bernoulli(rate) ? Scalar(0) : keep_scale;
      }
      h = h.cwiseProduct(cache.dropout_scale[m]);
    }
    score[m] = p.query.dot(h) * inv_sqrt_d;
    max_score = std::max(max_score, score[m]);
    cache.hidden[m] = std::move(h);
  }

  Scalar total = 0;
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    if (!example.mask.test(m)) continue;
    cache.attention[m] = std::exp(score[m] - max_score);
    total += cache.attention[m];
  }
  cache.fused = Vector::Zero(d);
  for (std::size_t m = 0; m < kModalityCount; ++m) {
    if (!example.mask.test(m)) continue;
    cache.attention[m] /= total;
    cache.fused += cache.attention[m] * cache.hidden[m];
  }
  out.attention = cache.attention;
  out.logits = p.classifier * cache.fused + p.classifier_bias;
  return out;
}

template <typename Scalar>
Logits<Scalar> softmax(const Logits<Scalar>& logits) {
  Logits<Scalar> e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar>
struct LossAndGrads {
  Scalar loss = 0;
  FusionParams<Scalar> grads;
};

/// Mean cross-entropy over the batch and its gradient for every tensor.
template <typename Scalar>
LossAndGrads<Scalar> loss_and_grads(const FusionModel<Scalar>& model,
                                    std::span<const AlignedExample* const> batch, Mode mode,
                                    Rng* rng = nullptr) {
  using Vector = typename FusionParams<Scalar>::Vector;
  if (batch.empty()) throw std::invalid_argument("loss_and_grads needs a non-empty batch");
  const auto& p = model.params;
  const Scalar inv_sqrt_d = Scalar(1) / std::sqrt(static_cast<Scalar>(model.config.common_dim));
  const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch.size());

  LossAndGrads<Scalar> out{Scalar(0), p.zeros_like()};
  auto& g = out.grads;
  for (const AlignedExample* example : batch) {
    if (!example->label) {
      throw ValidationError("example " + to_string(example->key) + " has no label");
    }
    const auto fwd = forward(model, *example, mode, rng);
    const auto& c = fwd.cache;
    const auto label = static_cast<Eigen::Index>(index_of(*example->label));

    const Scalar max_logit = fwd.logits.maxCoeff();
    const Scalar log_norm = max_logit + std::log((fwd.logits.array() - max_logit).exp().sum());
    out.loss += (log_norm - fwd.logits[label]) * inv_batch;

    Logits<Scalar> dlogits = softmax<Scalar>(fwd.logits);
    dlogits[label] -= Scalar(1);
    dlogits *= inv_batch;

    g.classifier.noalias() += dlogits * c.fused.transpose();
    g.classifier_bias += dlogits;
    const Vector dfused = p.classifier.transpose() * dlogits;

    // Softmax over modalities: dscore_m = alpha_m (dalpha_m - sum_k alpha_k dalpha_k).
    std::array<Scalar, kModalityCount> dalpha{};
    Scalar mean_dalpha = 0;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (!c.mask.test(m)) continue;
      dalpha[m] = c.hidden[m].dot(dfused);
      mean_dalpha += c.attention[m] * dalpha[m];
    }
    for (std::size_t m = 0; m < kModalityCount; ++m) {
      if (!c.mask.test(m)) continue;
      const Scalar dscore = c.attention[m] * (dalpha[m] - mean_dalpha);
      g.query += (dscore * inv_sqrt_d) * c.hidden[m];

      Vector dhidden = c.attention[m] * dfused + (dscore * inv_sqrt_d) * p.query;
      if (c.dropout_scale[m].size() != 0) dhidden = dhidden.cwiseProduct(c.dropout_scale[m]);
      const Vector dpre = (c.pre_activation[m].array() > Scalar(0)).select(dhidden, Scalar(0));

      g.projection[m].noalias() += dpre * example->features[m].template cast<Scalar>().transpose();
      g.projection_bias[m] += dpre;
    }
  }
  return out;
}

template <typename Scalar>
LossAndGrads<Scalar> loss_and_grads(const FusionModel<Scalar>& model,
                                    const std::vector<AlignedExample>& batch, Mode mode,
                                    Rng* rng = nullptr) {
  std::vector<const AlignedExample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& e : batch) ptrs.push_back(&e);
  return loss_and_grads(model, std::span<const AlignedExample* const>(ptrs), mode, rng);
}

/// Index of the largest logit; ties go to the earliest label in enum order.
template <typename Derived>
Emotion argmax_emotion(const Eigen::MatrixBase<Derived>& scores) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return emotion_at(static_cast<std::size_t>(best));
}

// Concrete double-precision training, prediction and checkpoint I/O.

using FusionModelD = FusionModel<double>;

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_weighted_f1 = 0.0;
};

struct TrainResult {
  FusionModelD model;  // parameters from the best dev epoch
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Mini-batch SGD at a fixed learning rate with seeded shuffling and dropout.
/// Non-finite loss or parameters raise TrainingError naming epoch and batch.
TrainResult train(FusionModelD model, const AlignedDataset& train_set,
                  const AlignedDataset& dev_set, const FusionConfig& config);

struct EmotionPrediction {
  UtteranceKey key;
  Logits<double> probabilities;
  Emotion predicted = Emotion::neutral;
  ModalityMask mask;
  std::array<double, kModalityCount> attention{};
};

std::vector<EmotionPrediction> predict(const FusionModelD& model, const AlignedDataset& dataset);

/// Support-weighted F1 over all seven classes of a prediction run.
double emotion_weighted_f1(const std::vector<EmotionPrediction>& predictions,
                           const AlignedDataset& dataset);

std::string history_csv(const std::vector<EpochRecord>& history);

nlohmann::json checkpoint_json(const FusionModelD& model);
FusionModelD model_from_checkpoint(const nlohmann::json& j);
void save_checkpoint(const FusionModelD& model, const std::string& path);
FusionModelD load_checkpoint(const std::string& path);

nlohmann::json to_json(const EmotionPrediction& prediction);
EmotionPrediction prediction_from_json(const nlohmann::json& j);
/// JSON lines, one prediction per line.
std::string predictions_jsonl(const std::vector<EmotionPrediction>& predictions);
std::vector<EmotionPrediction> parse_predictions_jsonl(std::string_view text);

}  // namespace mecpe
