/**
 * Copyright 2026 The HetFed Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HETFED_NN_HPP_
#define HETFED_NN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hetfed/rng.hpp"

namespace hetfed::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Upper clamp of the hidden activation, min(max(x, 0), 6).
inline constexpr double kActivationBound = 6.0;

/// Fully connected layer computing y = x * weights + bias.
struct DenseLayer {
  Matrix weights;  // rows = input width, cols = output width
  RowVector bias;  // length = output width

  DenseLayer() = default;
  DenseLayer(Index in_width, Index out_width);

  Index in_width() const { return weights.rows(); }
  Index out_width() const { return weights.cols(); }
  std::size_t param_count() const {
    return static_cast<std::size_t>(weights.size() + bias.size());
  }
  bool all_finite() const { return weights.allFinite() && bias.allFinite(); }
  bool same_shape(const DenseLayer &other) const {
    return in_width() == other.in_width() && out_width() == other.out_width();
  }
};

/// Multilayer perceptron. Hidden layers use the bounded ReLU6 activation,
/// the last layer is linear and produces logits.
///
/// Every mutation through this interface bumps `revision()`, which forward
/// caches record so that backward can reject a cache from an older model.
class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  /// `widths` = {input, hidden..., output}.
  static MlpModel zeros(std::span<const Index> widths);
  /// Per-layer uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static MlpModel random(std::span<const Index> widths, RandomEngine &rng);

  const std::vector<DenseLayer> &layers() const { return layers_; }
  const DenseLayer &layer(std::size_t i) const { return layers_.at(i); }
  /// Mutable access. Counts as a mutation (invalidates caches).
  DenseLayer &mutable_layer(std::size_t i);
  std::span<DenseLayer> mutable_layers();

  std::size_t depth() const { return layers_.size(); }
  Index input_width() const { return layers_.empty() ? 0 : layers_.front().in_width(); }
  Index output_width() const { return layers_.empty() ? 0 : layers_.back().out_width(); }
  std::size_t param_count() const;
  std::uint64_t revision() const { return revision_; }

  /// Parameters in layer order, each layer as row-major weights then bias.
  std::vector<double> flatten() const;

 private:
  void touch();

  std::vector<DenseLayer> layers_;
  std::uint64_t revision_ = 0;
};

/// Intermediate values of one forward pass, consumed by backprop.
struct ForwardCache {
  std::vector<Matrix> layer_inputs;  // input to each layer
  std::vector<Matrix> pre_activations;  // x * W + b of each layer
  Matrix logits;
  std::uint64_t model_revision = 0;
};

/// Parameter-shaped gradient container.
struct Gradients {
  std::vector<DenseLayer> layers;

  double squared_norm() const;
  bool all_finite() const;
};

ForwardCache forward(const MlpModel &model, const Matrix &inputs);
/// Logits only, no cache.
Matrix predict(const MlpModel &model, const Matrix &inputs);

/// Backpropagates an upstream gradient on the logits through the model.
Gradients backprop(const MlpModel &model, const ForwardCache &cache, const Matrix &logit_grad);

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

/// Mean softmax cross-entropy over the batch and its parameter gradients.
LossAndGradients backward_ce(const MlpModel &model, const ForwardCache &cache,
                             std::span<const int> labels);

double cross_entropy(const Matrix &logits, std::span<const int> labels);
Matrix softmax_rows(const Matrix &logits);
Matrix log_softmax_rows(const Matrix &logits);

struct KlResult {
  double loss = 0.0;  // mean over rows of KL(teacher || student)
  Matrix student_grad;  // d loss / d student_logits
};

/// Distillation loss at temperature 1. The teacher is a constant.
KlResult kl_loss_and_grad(const Matrix &student_logits, const Matrix &teacher_logits);

enum class OptimizerKind { kSgdMomentum, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgdMomentum;
  double learning_rate = 0.1;
  double momentum = 0.0;  // SGD only
  double beta1 = 0.9;  // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;

  bool operator==(const OptimizerConfig &) const = default;
};

/// Moment buffers and step counter, shaped like the parameters they update.
class OptimizerState {
 public:
  OptimizerState(const OptimizerConfig &config, std::span<const DenseLayer> params);
  OptimizerState(const OptimizerConfig &config, const MlpModel &model)
      : OptimizerState(config, model.layers()) {}

  const OptimizerConfig &config() const { return config_; }
  double learning_rate() const { return config_.learning_rate; }
  void set_learning_rate(double lr);
  std::int64_t steps() const { return steps_; }

  void apply(std::span<DenseLayer> params, std::span<const DenseLayer> grads);

 private:
  OptimizerConfig config_;
  std::vector<DenseLayer> first_moment_;  // SGD momentum buffer or Adam m
  std::vector<DenseLayer> second_moment_;  // Adam v
  std::int64_t steps_ = 0;
};

/// One optimizer step.
///   SGD:  buf = momentum * buf + g;  w -= lr * (buf + weight_decay * w)
///   Adam: bias-corrected first/second moments of (g + weight_decay * w)
void apply_update(MlpModel &model, const Gradients &grads, OptimizerState &state);

}  // namespace hetfed::nn

#endif  // HETFED_NN_HPP_
