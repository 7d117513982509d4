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

#ifndef HETFED_TESTS_REFERENCE_LOOP_HPP_
#define HETFED_TESTS_REFERENCE_LOOP_HPP_

#include <vector>

#include "hetfed/orchestrator.hpp"

namespace hetfed::oracle {

/// Plain FedAvg over the full model: every selected client trains the current
/// global model and the server takes the data-share weighted mean of the
/// flattened parameters. Returns the flattened global model after each round.
///
/// Shares the data pipeline, client sampling and local training with the
/// library; model plumbing and averaging are written out here.
inline std::vector<std::vector<double>> reference_fedavg(const ExperimentConfig &config) {
  const SearchSpace space = config.space();
  const ExperimentData data = prepare_data(config);
  const ParamStore init = initial_store(config);

  std::vector<nn::DenseLayer> layers = init.layers();
  std::vector<std::vector<double>> history;
  for (std::size_t r = 0; r < config.rounds; ++r) {
    nn::OptimizerConfig opt = config.train.optimizer;
    opt.learning_rate = config.learning_rate_at(r);
    const nn::MlpModel global(layers);
    const auto selected = select_clients(config, r);

    std::vector<double> sum(global.param_count(), 0.0);
    double total_weight = 0.0;
    for (auto c : selected) {
      RandomEngine rng = client_train_stream(config, r, c);
      const auto result = local_train(global, data.clients[c], config.local_epochs, config.batch_size, opt, rng);
      const auto flat = result.model.flatten();
      const double p = data.weights[c];
      for (std::size_t k = 0; k < flat.size(); ++k) sum[k] += p * flat[k];
      total_weight += p;
    }
    std::size_t k = 0;
    for (auto &layer : layers) {
      for (nn::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = sum[k++] / total_weight;
      for (nn::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = sum[k++] / total_weight;
    }
    history.push_back(nn::MlpModel(layers).flatten());
  }
  return history;
}

}  // namespace hetfed::oracle

#endif  // HETFED_TESTS_REFERENCE_LOOP_HPP_
