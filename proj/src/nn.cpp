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

#include "hetfed/nn.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "hetfed/errors.hpp"

namespace hetfed::nn {
namespace {

std::atomic<std::uint64_t> g_revision{1};

std::uint64_t next_revision() { return g_revision.fetch_add(1, std::memory_order_relaxed); }

Matrix relu6(const Matrix &z) { return z.cwiseMax(0.0).cwiseMin(kActivationBound); }

// Derivative of the clamp, taken as 0 at the kinks.
Matrix relu6_mask(const Matrix &z) {
  return z.unaryExpr([](double v) { return (v > 0.0 && v < kActivationBound) ? 1.0 : 0.0; });
}

void check_labels(std::span<const int> labels, Index rows, Index classes) {
  if (static_cast<Index>(labels.size()) != rows) {
    throw ShapeError("label count " + std::to_string(labels.size()) + " != batch " +
                     std::to_string(rows));
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw ContractError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

}  // namespace

DenseLayer::DenseLayer(Index in_width, Index out_width)
    : weights(Matrix::Zero(in_width, out_width)), bias(RowVector::Zero(out_width)) {}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto &l = layers_[i];
    if (l.bias.size() != l.weights.cols()) {
      throw ShapeError("layer " + std::to_string(i) + ": bias length != weight columns");
    }
    if (i > 0 && layers_[i - 1].out_width() != l.in_width()) {
      throw ShapeError("layer " + std::to_string(i) + ": input width " +
                       std::to_string(l.in_width()) + " does not chain with previous output " +
                       std::to_string(layers_[i - 1].out_width()));
    }
  }
  touch();
}

MlpModel MlpModel::zeros(std::span<const Index> widths) {
  if (widths.size() < 2) throw ContractError("an MLP needs at least input and output widths");
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.emplace_back(widths[i], widths[i + 1]);
  }
  return MlpModel(std::move(layers));
}

MlpModel MlpModel::random(std::span<const Index> widths, RandomEngine &rng) {
  MlpModel model = zeros(widths);
  for (auto &layer : model.layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in_width()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = dist(rng);
    for (Index c = 0; c < layer.bias.size(); ++c) layer.bias(c) = dist(rng);
  }
  model.touch();
  return model;
}

DenseLayer &MlpModel::mutable_layer(std::size_t i) {
  touch();
  return layers_.at(i);
}

std::span<DenseLayer> MlpModel::mutable_layers() {
  touch();
  return layers_;
}

std::size_t MlpModel::param_count() const {
  std::size_t n = 0;
  for (const auto &l : layers_) n += l.param_count();
  return n;
}

std::vector<double> MlpModel::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const auto &l : layers_) {
    out.insert(out.end(), l.weights.data(), l.weights.data() + l.weights.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void MlpModel::touch() { revision_ = next_revision(); }

double Gradients::squared_norm() const {
  double s = 0.0;
  for (const auto &l : layers) s += l.weights.squaredNorm() + l.bias.squaredNorm();
  return s;
}

bool Gradients::all_finite() const {
  for (const auto &l : layers)
    if (!l.all_finite()) return false;
  return true;
}

ForwardCache forward(const MlpModel &model, const Matrix &inputs) {
  if (model.depth() == 0) throw ContractError("forward on an empty model");
  if (inputs.cols() != model.input_width()) {
    throw ShapeError("input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                     std::to_string(model.input_width()));
  }
  if (inputs.rows() < 1) throw ShapeError("empty batch");

  ForwardCache cache;
  cache.model_revision = model.revision();
  cache.layer_inputs.reserve(model.depth());
  cache.pre_activations.reserve(model.depth());
  Matrix x = inputs;
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const auto &layer = model.layer(i);
    Matrix z = x * layer.weights;
    z.rowwise() += layer.bias;
    cache.layer_inputs.push_back(std::move(x));
    x = (i + 1 < model.depth()) ? relu6(z) : z;
    cache.pre_activations.push_back(std::move(z));
  }
  cache.logits = std::move(x);
  return cache;
}

Matrix predict(const MlpModel &model, const Matrix &inputs) {
  if (model.depth() == 0) throw ContractError("forward on an empty model");
  if (inputs.cols() != model.input_width()) {
    throw ShapeError("input has " + std::to_string(inputs.cols()) + " columns, model expects " +
                     std::to_string(model.input_width()));
  }
  Matrix x = inputs;
  for (std::size_t i = 0; i < model.depth(); ++i) {
    const auto &layer = model.layer(i);
    Matrix z = x * layer.weights;
    z.rowwise() += layer.bias;
    x = (i + 1 < model.depth()) ? relu6(z) : std::move(z);
  }
  return x;
}

Gradients backprop(const MlpModel &model, const ForwardCache &cache, const Matrix &logit_grad) {
  if (cache.model_revision != model.revision() ||
      cache.layer_inputs.size() != model.depth()) {
    throw ContractError("forward cache does not belong to the current model state");
  }
  if (logit_grad.rows() != cache.logits.rows() || logit_grad.cols() != cache.logits.cols()) {
    throw ShapeError("logit gradient shape does not match cached logits");
  }
  Gradients grads;
  grads.layers.resize(model.depth());
  Matrix delta = logit_grad;
  for (std::size_t k = model.depth(); k-- > 0;) {
    const auto &layer = model.layer(k);
    auto &g = grads.layers[k];
    g.weights = cache.layer_inputs[k].transpose() * delta;
    g.bias = delta.colwise().sum();
    if (k > 0) {
      Matrix upstream = delta * layer.weights.transpose();
      delta = upstream.cwiseProduct(relu6_mask(cache.pre_activations[k - 1]));
    }
  }
  return grads;
}

Matrix log_softmax_rows(const Matrix &logits) {
  Matrix out = logits;
  for (Index r = 0; r < out.rows(); ++r) {
    const double m = out.row(r).maxCoeff();
    const double lse = m + std::log((out.row(r).array() - m).exp().sum());
    out.row(r).array() -= lse;
  }
  return out;
}

Matrix softmax_rows(const Matrix &logits) { return log_softmax_rows(logits).array().exp(); }

double cross_entropy(const Matrix &logits, std::span<const int> labels) {
  check_labels(labels, logits.rows(), logits.cols());
  const Matrix logp = log_softmax_rows(logits);
  double total = 0.0;
  for (Index r = 0; r < logp.rows(); ++r) total -= logp(r, labels[static_cast<std::size_t>(r)]);
  return total / static_cast<double>(logp.rows());
}

LossAndGradients backward_ce(const MlpModel &model, const ForwardCache &cache,
                             std::span<const int> labels) {
  const Matrix &logits = cache.logits;
  check_labels(labels, logits.rows(), logits.cols());
  const Matrix logp = log_softmax_rows(logits);
  Matrix dlogits = logp.array().exp();
  double total = 0.0;
  for (Index r = 0; r < logits.rows(); ++r) {
    const auto y = labels[static_cast<std::size_t>(r)];
    total -= logp(r, y);
    dlogits(r, y) -= 1.0;
  }
  const double inv_batch = 1.0 / static_cast<double>(logits.rows());
  dlogits *= inv_batch;
  return {total * inv_batch, backprop(model, cache, dlogits)};
}

KlResult kl_loss_and_grad(const Matrix &student_logits, const Matrix &teacher_logits) {
  if (student_logits.rows() != teacher_logits.rows() ||
      student_logits.cols() != teacher_logits.cols()) {
    throw ShapeError("student and teacher logits differ in shape");
  }
  const Matrix log_p_teacher = log_softmax_rows(teacher_logits);
  const Matrix log_p_student = log_softmax_rows(student_logits);
  const Matrix p_teacher = log_p_teacher.array().exp();
  const double inv_batch = 1.0 / static_cast<double>(student_logits.rows());

  KlResult out;
  // Per-row terms are nonnegative up to rounding; clamp rows to keep the sum >= 0.
  for (Index r = 0; r < p_teacher.rows(); ++r) {
    const double row =
        (p_teacher.row(r).array() * (log_p_teacher.row(r) - log_p_student.row(r)).array()).sum();
    out.loss += std::max(row, 0.0);
  }
  out.loss *= inv_batch;
  out.student_grad = (log_p_student.array().exp() - p_teacher.array()) * inv_batch;
  return out;
}

OptimizerState::OptimizerState(const OptimizerConfig &config, std::span<const DenseLayer> params)
    : config_(config) {
  if (!(config.learning_rate > 0.0)) throw ContractError("learning rate must be positive");
  for (const auto &p : params) {
    first_moment_.emplace_back(p.in_width(), p.out_width());
    if (config.kind == OptimizerKind::kAdam) second_moment_.emplace_back(p.in_width(), p.out_width());
  }
}

void OptimizerState::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
  config_.learning_rate = lr;
}

void OptimizerState::apply(std::span<DenseLayer> params, std::span<const DenseLayer> grads) {
  if (params.size() != grads.size() || params.size() != first_moment_.size()) {
    throw ShapeError("optimizer: parameter/gradient/buffer layer counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(first_moment_[i])) {
      throw ShapeError("optimizer: shape mismatch at layer " + std::to_string(i));
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  const double wd = config_.weight_decay;

  if (config_.kind == OptimizerKind::kSgdMomentum) {
    const double mu = config_.momentum;
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto &p = params[i];
      auto &buf = first_moment_[i];
      buf.weights = mu * buf.weights + grads[i].weights;
      buf.bias = mu * buf.bias + grads[i].bias;
      p.weights -= lr * (buf.weights + wd * p.weights);
      p.bias -= lr * (buf.bias + wd * p.bias);
    }
    return;
  }

  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double eps = config_.epsilon;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  auto adam = [&](auto &w, const auto &g_raw, auto &m, auto &v) {
    const auto g = (g_raw + wd * w).eval();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    w.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam(params[i].weights, grads[i].weights, first_moment_[i].weights, second_moment_[i].weights);
    adam(params[i].bias, grads[i].bias, first_moment_[i].bias, second_moment_[i].bias);
  }
}

void apply_update(MlpModel &model, const Gradients &grads, OptimizerState &state) {
  state.apply(model.mutable_layers(), grads.layers);
}

}  // namespace hetfed::nn
