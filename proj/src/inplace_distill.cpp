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

#include "hetfed/inplace_distill.hpp"

#include "hetfed/errors.hpp"
#include "hetfed/hetero_agg.hpp"

namespace hetfed {

void DistillConfig::validate() const {
  if (subnets < 1) throw ContractError("distillation needs at least one subnet");
  if (batch < 1) throw ContractError("distillation batch must be >= 1");
  if (!(learning_rate > 0.0)) throw ContractError("distillation learning rate must be positive");
}

std::vector<SubnetSpec> sample_distill_subnets(const SearchSpace &space, std::size_t n,
                                               RandomEngine &rng) {
  if (n < 1) throw ContractError("sample_distill_subnets: n must be >= 1");
  std::vector<SubnetSpec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_spec(space, rng));
  return out;
}

nn::Matrix gaussian_batch(std::size_t rows, nn::Index in_dim, RandomEngine &rng) {
  if (rows < 1) throw ContractError("gaussian_batch: rows must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  nn::Matrix x(static_cast<nn::Index>(rows), in_dim);
  for (nn::Index r = 0; r < x.rows(); ++r)
    for (nn::Index c = 0; c < x.cols(); ++c) x(r, c) = normal(rng);
  return x;
}

namespace {

nn::OptimizerConfig adam_config(const DistillConfig &config) {
  nn::OptimizerConfig oc;
  oc.kind = nn::OptimizerKind::kAdam;
  oc.learning_rate = config.learning_rate;
  return oc;
}

double mean(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

DistillReport distill_independent(ParamStore &store, const SearchSpace &space,
                                  const DistillConfig &config, const nn::MlpModel &teacher,
                                  const std::vector<SubnetSpec> &students, RandomEngine &rng) {
  const std::size_t n = students.size();
  std::vector<nn::MlpModel> models;
  std::vector<nn::OptimizerState> optimizers;
  models.reserve(n);
  optimizers.reserve(n);
  for (const auto &spec : students) {
    models.push_back(materialize(space, spec, store).first);
    optimizers.emplace_back(adam_config(config), models.back());
  }

  DistillReport report;
  report.iterations = config.iterations;
  std::vector<double> losses(n);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const nn::Matrix x = gaussian_batch(config.batch, space.in_dim, rng);
      const nn::Matrix target = nn::predict(teacher, x);
      const nn::ForwardCache cache = nn::forward(models[i], x);
      const nn::KlResult kl = nn::kl_loss_and_grad(cache.logits, target);
      losses[i] = kl.loss;
      nn::apply_update(models[i], nn::backprop(models[i], cache, kl.student_grad), optimizers[i]);
    }
    report.loss_curve.push_back(mean(losses));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const nn::Matrix x = gaussian_batch(config.batch, space.in_dim, rng);
    losses[i] = nn::kl_loss_and_grad(nn::predict(models[i], x), nn::predict(teacher, x)).loss;
  }
  report.initial_loss = report.loss_curve.front();
  report.final_loss = mean(losses);

  std::vector<ClientUpdate> folds;
  folds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    folds.push_back(make_update(space, i, students[i], models[i], 1.0 / static_cast<double>(n)));
  }
  aggregate(store, folds, space);
  return report;
}

DistillReport distill_shared(ParamStore &store, const SearchSpace &space,
                             const DistillConfig &config, const nn::MlpModel &teacher,
                             const std::vector<SubnetSpec> &students, RandomEngine &rng) {
  const std::size_t n = students.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  nn::OptimizerState optimizer(adam_config(config), store.layers());
  std::vector<LayerSliceMap> maps;
  for (const auto &spec : students) maps.push_back(slice_map(space, spec));

  DistillReport report;
  report.iterations = config.iterations;
  std::vector<double> losses(n);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    std::vector<nn::DenseLayer> grad = ParamStore(space).layers();
    for (std::size_t i = 0; i < n; ++i) {
      const nn::MlpModel student = materialize(space, students[i], store).first;
      const nn::Matrix x = gaussian_batch(config.batch, space.in_dim, rng);
      const nn::ForwardCache cache = nn::forward(student, x);
      const nn::KlResult kl = nn::kl_loss_and_grad(cache.logits, nn::predict(teacher, x));
      losses[i] = kl.loss;
      const nn::Gradients g = nn::backprop(student, cache, kl.student_grad);
      for (std::size_t k = 0; k < maps[i].size(); ++k) {
        const auto &s = maps[i][k];
        grad[s.global_layer].weights.topLeftCorner(s.rows, s.cols) += inv_n * g.layers[k].weights;
        grad[s.global_layer].bias.head(s.cols) += inv_n * g.layers[k].bias;
      }
    }
    optimizer.apply(store.mutable_layers(), grad);
    report.loss_curve.push_back(mean(losses));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const nn::MlpModel student = materialize(space, students[i], store).first;
    const nn::Matrix x = gaussian_batch(config.batch, space.in_dim, rng);
    losses[i] = nn::kl_loss_and_grad(nn::predict(student, x), nn::predict(teacher, x)).loss;
  }
  report.initial_loss = report.loss_curve.front();
  report.final_loss = mean(losses);
  return report;
}

}  // namespace

DistillReport distill_subnets(ParamStore &store, const SearchSpace &space,
                              const DistillConfig &config, const std::vector<SubnetSpec> &students,
                              RandomEngine &rng) {
  config.validate();
  if (students.empty()) throw ContractError("distill_subnets: no students");
  if (config.iterations == 0) return {};
  const nn::MlpModel teacher = materialize(space, full_spec(space), store).first;
  if (config.mode == DistillMode::kSharedGradient) {
    return distill_shared(store, space, config, teacher, students, rng);
  }
  return distill_independent(store, space, config, teacher, students, rng);
}

DistillReport distill_round(ParamStore &store, const SearchSpace &space, const DistillConfig &config,
                            RandomEngine &rng) {
  config.validate();
  if (config.iterations == 0) return {};
  const auto students = sample_distill_subnets(space, config.subnets, rng);
  return distill_subnets(store, space, config, students, rng);
}

}  // namespace hetfed
