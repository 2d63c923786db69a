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

#include "specfuse/nn.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "specfuse/errors.h"

namespace specfuse::nn {

namespace {

// Activations of one sample: pre[k] and post[k] for layer k, with post[-1]
// being the input (stored as inputs).
struct Trace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

void Affine(const Layer& layer, std::span<const double> x,
            std::vector<double>& out) {
  const std::size_t rows = layer.weight.rows();
  out.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto w = layer.weight.row(r);
    double s = layer.bias[r];
    for (std::size_t c = 0; c < w.size(); ++c) s += w[c] * x[c];
    out[r] = s;
  }
}

void RunForward(const ModelParams& params, std::span<const double> x,
                Trace& trace) {
  const std::size_t n_layers = params.layers.size();
  trace.pre.resize(n_layers);
  trace.post.resize(n_layers);
  std::span<const double> in = x;
  for (std::size_t k = 0; k < n_layers; ++k) {
    Affine(params.layers[k], in, trace.pre[k]);
    trace.post[k] = trace.pre[k];
    if (k + 1 < n_layers) {
      for (double& v : trace.post[k]) v = std::max(v, 0.0);
    }
    in = trace.post[k];
  }
}

// log(sum(exp(z))) computed stably.
double LogSumExp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

LayerUpdate ZeroLike(const ModelParams& params) {
  LayerUpdate u;
  for (const auto& layer : params.layers) {
    u.weights.emplace_back(layer.weight.rows(), layer.weight.cols());
    u.biases.emplace_back(layer.bias.size(), 0.0);
  }
  return u;
}

// Adds the cross-entropy gradient of one sample into `grad`; returns its
// loss.
double AccumulateSample(const ModelParams& params, std::span<const double> x,
                        int label, Trace& trace, LayerUpdate& grad,
                        std::vector<double>& delta,
                        std::vector<double>& next_delta) {
  RunForward(params, x, trace);
  const std::size_t n_layers = params.layers.size();
  const auto& logits = trace.pre.back();
  const double lse = LogSumExp(logits);
  const double sample_loss = lse - logits[label];

  delta.resize(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    delta[c] = std::exp(logits[c] - lse);
  }
  delta[label] -= 1.0;

  for (std::size_t k = n_layers; k-- > 0;) {
    std::span<const double> in =
        k == 0 ? x : std::span<const double>(trace.post[k - 1]);
    DenseMatrix& gw = grad.weights[k];
    auto& gb = grad.biases[k];
    for (std::size_t r = 0; r < gw.rows(); ++r) {
      const double d = delta[r];
      gb[r] += d;
      if (d == 0.0) continue;
      auto row = gw.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += d * in[c];
    }
    if (k == 0) break;
    const DenseMatrix& w = params.layers[k].weight;
    next_delta.assign(w.cols(), 0.0);
    for (std::size_t r = 0; r < w.rows(); ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const auto row = w.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) next_delta[c] += d * row[c];
    }
    const auto& pre = trace.pre[k - 1];
    for (std::size_t c = 0; c < next_delta.size(); ++c) {
      if (pre[c] <= 0.0) next_delta[c] = 0.0;
    }
    std::swap(delta, next_delta);
  }
  return sample_loss;
}

void RequireCompatible(const ModelParams& params, const data::Dataset& ds) {
  if (params.layers.empty()) throw DimensionError("model has no layers");
  if (ds.num_features() != params.input_dim()) {
    throw DimensionError("dataset has " + std::to_string(ds.num_features()) +
                         " features, model expects " +
                         std::to_string(params.input_dim()));
  }
}

}  // namespace

std::size_t ModelParams::input_dim() const {
  return layers.empty() ? 0 : layers.front().weight.cols();
}

std::size_t ModelParams::num_classes() const {
  return layers.empty() ? 0 : layers.back().weight.rows();
}

void ModelParams::Validate() const {
  if (layers.empty()) throw DimensionError("model has no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.bias.size() != l.weight.rows()) {
      throw DimensionError("layer " + std::to_string(k) +
                           ": bias length != output dim");
    }
    if (k > 0 && l.weight.cols() != layers[k - 1].weight.rows()) {
      throw DimensionError("layer " + std::to_string(k) +
                           ": input dim does not chain");
    }
    if (!l.weight.AllFinite() ||
        !std::all_of(l.bias.begin(), l.bias.end(),
                     [](double v) { return std::isfinite(v); })) {
      throw ContractError("layer " + std::to_string(k) + ": non-finite entry");
    }
  }
}

std::vector<double> LayerUpdate::Flatten() const {
  std::vector<double> flat;
  for (const auto& w : weights) {
    flat.insert(flat.end(), w.data().begin(), w.data().end());
  }
  for (const auto& b : biases) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

void LayerUpdate::RequireSameShape(const LayerUpdate& other) const {
  if (weights.size() != other.weights.size() ||
      biases.size() != other.biases.size()) {
    throw DimensionError("update layer counts differ");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != other.weights[k].rows() ||
        weights[k].cols() != other.weights[k].cols() ||
        biases[k].size() != other.biases[k].size()) {
      throw DimensionError("update shapes differ at layer " +
                           std::to_string(k));
    }
  }
}

void TrainSpec::Validate() const {
  if (local_epochs < 1) throw ConfigError("train.epochs", "must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
  if (total_rounds < 1) throw ConfigError("rounds", "must be >= 1");
  if (!(lr_initial > 0.0)) {
    throw ConfigError("train.lr_initial", "must be positive");
  }
  if (!(lr_final > 0.0) || lr_final > lr_initial) {
    throw ConfigError("train.lr_final", "must lie in (0, lr_initial]");
  }
}

ModelParams init_mlp(std::size_t input_dim, std::span<const int> hidden,
                     int num_classes, Rng& rng) {
  if (input_dim == 0 || num_classes < 1) {
    throw DimensionError("init_mlp: empty input or output");
  }
  std::vector<std::size_t> widths{input_dim};
  for (int h : hidden) {
    if (h < 1) throw DimensionError("init_mlp: hidden width must be >= 1");
    widths.push_back(static_cast<std::size_t>(h));
  }
  widths.push_back(static_cast<std::size_t>(num_classes));

  ModelParams params;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[k]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer{DenseMatrix(widths[k + 1], widths[k]),
                std::vector<double>(widths[k + 1])};
    for (double& v : layer.weight.data()) v = u(rng);
    for (double& v : layer.bias) v = u(rng);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

std::vector<double> forward(const ModelParams& params,
                            std::span<const double> x) {
  if (params.layers.empty()) throw DimensionError("model has no layers");
  if (x.size() != params.input_dim()) {
    throw DimensionError("forward: input length " + std::to_string(x.size()) +
                         " != " + std::to_string(params.input_dim()));
  }
  Trace trace;
  RunForward(params, x, trace);
  return trace.pre.back();
}

double loss(const ModelParams& params, const data::Dataset& ds,
            std::span<const std::size_t> indices) {
  RequireCompatible(params, ds);
  if (indices.empty()) throw InsufficientDataError("loss: no samples");
  Trace trace;
  double total = 0.0;
  for (std::size_t i : indices) {
    RunForward(params, ds.features.row(i), trace);
    const auto& logits = trace.pre.back();
    total += LogSumExp(logits) - logits[ds.labels[i]];
  }
  return total / static_cast<double>(indices.size());
}

double loss(const ModelParams& params, const data::Dataset& ds) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  return loss(params, ds, all);
}

LayerUpdate gradients(const ModelParams& params, const data::Dataset& ds,
                      std::span<const std::size_t> indices) {
  RequireCompatible(params, ds);
  if (indices.empty()) throw InsufficientDataError("gradients: no samples");
  LayerUpdate grad = ZeroLike(params);
  Trace trace;
  std::vector<double> delta, next_delta;
  for (std::size_t i : indices) {
    AccumulateSample(params, ds.features.row(i), ds.labels[i], trace, grad,
                     delta, next_delta);
  }
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (auto& w : grad.weights) {
    for (double& v : w.data()) v *= scale;
  }
  for (auto& b : grad.biases) {
    for (double& v : b) v *= scale;
  }
  return grad;
}

double lr_schedule(const TrainSpec& spec, int round) {
  if (round < 1 || round > spec.total_rounds) {
    throw ContractError("lr_schedule: round " + std::to_string(round) +
                        " outside [1, " + std::to_string(spec.total_rounds) +
                        "]");
  }
  if (spec.total_rounds == 1) return spec.lr_initial;
  const double phase = std::numbers::pi * (round - 1) /
                       static_cast<double>(spec.total_rounds - 1);
  return spec.lr_final +
         0.5 * (spec.lr_initial - spec.lr_final) * (1.0 + std::cos(phase));
}

LocalResult train_local(const ModelParams& params, const data::Dataset& shard,
                        const TrainSpec& spec, int round, Rng& rng) {
  if (shard.empty()) throw InsufficientDataError("train_local: empty shard");
  RequireCompatible(params, shard);
  const double lr = lr_schedule(spec, round);

  LocalResult result;
  result.params = params;
  ModelParams& w = result.params;
  const std::size_t n = shard.size();
  const std::size_t batch = static_cast<std::size_t>(spec.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  LayerUpdate grad = ZeroLike(params);
  Trace trace;
  std::vector<double> delta, next_delta;
  double loss_total = 0.0;
  for (int epoch = 0; epoch < spec.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      for (auto& g : grad.weights) std::fill(g.data().begin(), g.data().end(), 0.0);
      for (auto& g : grad.biases) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        epoch_loss += AccumulateSample(w, shard.features.row(i),
                                       shard.labels[i], trace, grad, delta,
                                       next_delta);
      }
      const double step = lr / static_cast<double>(end - start);
      for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto wd = w.layers[l].weight.data();
        const auto gd = grad.weights[l].data();
        for (std::size_t j = 0; j < wd.size(); ++j) wd[j] -= step * gd[j];
        auto& b = w.layers[l].bias;
        for (std::size_t j = 0; j < b.size(); ++j) b[j] -= step * grad.biases[l][j];
      }
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n));
    loss_total += epoch_loss;
  }
  result.mean_loss =
      loss_total / static_cast<double>(n * static_cast<std::size_t>(spec.local_epochs));

  result.update = ZeroLike(params);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto ud = result.update.weights[l].data();
    const auto after = w.layers[l].weight.data();
    const auto before = params.layers[l].weight.data();
    for (std::size_t j = 0; j < ud.size(); ++j) ud[j] = after[j] - before[j];
    for (std::size_t j = 0; j < w.layers[l].bias.size(); ++j) {
      result.update.biases[l][j] = w.layers[l].bias[j] - params.layers[l].bias[j];
    }
  }
  return result;
}

std::size_t argmax(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

double evaluate(const ModelParams& params, const data::Dataset& test) {
  if (test.empty()) throw InsufficientDataError("evaluate: empty test set");
  RequireCompatible(params, test);
  Trace trace;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    RunForward(params, test.features.row(i), trace);
    if (argmax(trace.pre.back()) == static_cast<std::size_t>(test.labels[i])) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace specfuse::nn
