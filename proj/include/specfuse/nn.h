/*
 * Copyright 2026 The specfuse Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECFUSE_NN_H_
#define SPECFUSE_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "specfuse/data.h"
#include "specfuse/linalg.h"
#include "specfuse/rng.h"

namespace specfuse::nn {

using linalg::DenseMatrix;

struct Layer {
  DenseMatrix weight;  // out x in
  std::vector<double> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Fully connected network: ReLU on hidden layers, linear output layer.
struct ModelParams {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t num_classes() const;
  // Checks that layer dimensions chain and every entry is finite.
  void Validate() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Per-layer parameter differences, same shapes as ModelParams.
struct LayerUpdate {
  std::vector<DenseMatrix> weights;
  std::vector<std::vector<double>> biases;

  const DenseMatrix& final_layer() const { return weights.back(); }
  // All weights then all biases, layer by layer, as one vector.
  std::vector<double> Flatten() const;
  void RequireSameShape(const LayerUpdate& other) const;
};

struct TrainSpec {
  int local_epochs = 1;
  int batch_size = 64;
  double lr_initial = 0.1;
  double lr_final = 1e-6;
  int total_rounds = 1;
  std::uint64_t seed = 0;

  void Validate() const;
  friend bool operator==(const TrainSpec&, const TrainSpec&) = default;
};

struct LocalResult {
  ModelParams params;
  LayerUpdate update;  // params - broadcast
  double mean_loss = 0.0;
  std::vector<double> epoch_losses;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation for an MLP with
// the given hidden widths; an empty `hidden` yields a linear model.
ModelParams init_mlp(std::size_t input_dim, std::span<const int> hidden,
                     int num_classes, Rng& rng);

std::vector<double> forward(const ModelParams& params,
                            std::span<const double> x);

// Mean softmax cross-entropy over the listed samples.
double loss(const ModelParams& params, const data::Dataset& ds,
            std::span<const std::size_t> indices);
double loss(const ModelParams& params, const data::Dataset& ds);

// Gradient of the mean cross-entropy over `indices`, shaped like the model.
LayerUpdate gradients(const ModelParams& params, const data::Dataset& ds,
                      std::span<const std::size_t> indices);

// Cosine-annealed learning rate for 1-based round t.
double lr_schedule(const TrainSpec& spec, int round);

// E epochs of minibatch SGD at the round's learning rate. Minibatch order
// is drawn from `rng`.
LocalResult train_local(const ModelParams& params, const data::Dataset& shard,
                        const TrainSpec& spec, int round, Rng& rng);

// Fraction of argmax-correct predictions; ties go to the lowest class.
double evaluate(const ModelParams& params, const data::Dataset& test);

std::size_t argmax(std::span<const double> scores);

}  // namespace specfuse::nn

#endif  // SPECFUSE_NN_H_
