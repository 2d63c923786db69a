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

#include "specfuse/federation.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "specfuse/errors.h"
#include "specfuse/linalg.h"
#include "specfuse/rng.h"

namespace specfuse::federation {

namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

bool UsesEntropy(Strategy s) {
  return s == Strategy::kSpectralFed || s == Strategy::kSpectralFuse;
}
bool UsesCssv(Strategy s) {
  return s == Strategy::kShapFed || s == Strategy::kSpectralFuse;
}

linalg::DenseMatrix MeanFinalLayer(std::span<const nn::LocalResult> results) {
  const auto& first = results.front().update.final_layer();
  linalg::DenseMatrix mean(first.rows(), first.cols());
  for (const auto& r : results) {
    const auto d = r.update.final_layer().data();
    auto m = mean.data();
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += d[j];
  }
  const double inv = 1.0 / static_cast<double>(results.size());
  for (double& v : mean.data()) v *= inv;
  return mean;
}

nn::LayerUpdate MeanUpdate(std::span<const nn::LocalResult> results) {
  nn::LayerUpdate mean = results.front().update;
  for (auto& w : mean.weights) std::fill(w.data().begin(), w.data().end(), 0.0);
  for (auto& b : mean.biases) std::fill(b.begin(), b.end(), 0.0);
  for (const auto& r : results) {
    for (std::size_t l = 0; l < mean.weights.size(); ++l) {
      auto m = mean.weights[l].data();
      const auto d = r.update.weights[l].data();
      for (std::size_t j = 0; j < m.size(); ++j) m[j] += d[j];
      for (std::size_t j = 0; j < mean.biases[l].size(); ++j) {
        mean.biases[l][j] += r.update.biases[l][j];
      }
    }
  }
  const double inv = 1.0 / static_cast<double>(results.size());
  for (auto& w : mean.weights) {
    for (double& v : w.data()) v *= inv;
  }
  for (auto& b : mean.biases) {
    for (double& v : b) v *= inv;
  }
  return mean;
}

}  // namespace

std::string StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kFedAvgUniform: return "fedavg_uniform";
    case Strategy::kFedAvgSamples: return "fedavg_samples";
    case Strategy::kCgsv: return "cgsv";
    case Strategy::kShapFed: return "shapfed";
    case Strategy::kSpectralFed: return "spectralfed";
    case Strategy::kSpectralFuse: return "spectralfuse";
  }
  return "unknown";
}

Strategy ParseStrategy(const std::string& name) {
  for (auto s : {Strategy::kFedAvgUniform, Strategy::kFedAvgSamples,
                 Strategy::kCgsv, Strategy::kShapFed, Strategy::kSpectralFed,
                 Strategy::kSpectralFuse}) {
    if (StrategyName(s) == name) return s;
  }
  throw ConfigError("strategy", "unknown strategy '" + name + "'");
}

void FederationConfig::Validate() const {
  if (n_clients < 2) throw ConfigError("clients", "must be >= 2");
  if (rounds < 1) throw ConfigError("rounds", "must be >= 1");
  EffectiveTrainSpec().Validate();
  EffectivePartitionSpec().Validate();
  for (int h : hidden) {
    if (h < 1) throw ConfigError("model.hidden", "widths must be >= 1");
  }
  if (data.classes < 2) throw ConfigError("data.classes", "must be >= 2");
  if (data.features < 2) throw ConfigError("data.features", "must be >= 2");
  if (data.per_class < 1) throw ConfigError("data.per_class", "must be >= 1");
  if (!(data.separation > 0.0)) {
    throw ConfigError("data.separation", "must be positive");
  }
  if (!(data.test_fraction > 0.0 && data.test_fraction < 1.0)) {
    throw ConfigError("data.test_fraction", "must lie in (0, 1)");
  }
  if (data.idx_images.empty() != data.idx_labels.empty()) {
    throw ConfigError("data.idx_images",
                      "idx_images and idx_labels must be set together");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("scoring.momentum", "must lie in [0, 1)");
  }
  if (!(filter.process_noise > 0.0)) {
    throw ConfigError("fusion.q", "must be positive");
  }
  if (!(filter.noise_floor > 0.0)) {
    throw ConfigError("fusion.epsilon", "must be positive");
  }
  if (!(filter.initial_variance > 0.0)) {
    throw ConfigError("fusion.p0", "must be positive");
  }
  if (!(weight_floor > 0.0)) {
    throw ConfigError("weight_floor", "must be positive");
  }
  if (free_rider && (free_rider->client < 0 || free_rider->client >= n_clients)) {
    throw ConfigError("free_rider.client", "must lie in [0, clients)");
  }
  if (workers < 1) throw ConfigError("workers", "must be >= 1");
}

nn::TrainSpec FederationConfig::EffectiveTrainSpec() const {
  nn::TrainSpec spec = train;
  spec.total_rounds = rounds;
  spec.seed = seed;
  return spec;
}

data::PartitionSpec FederationConfig::EffectivePartitionSpec() const {
  return {partition, dirichlet_alpha, n_clients, seed};
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t threads =
      std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

nn::ModelParams aggregate(std::span<const nn::ModelParams> models,
                          std::span<const double> weights) {
  if (models.empty()) throw DimensionError("aggregate: no models");
  if (models.size() != weights.size()) {
    throw DimensionError("aggregate: model count != weight count");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-6 ||
      std::any_of(weights.begin(), weights.end(),
                  [](double w) { return !(w >= 0.0); })) {
    throw ContractError("aggregate: weights are not on the simplex");
  }
  const nn::ModelParams& ref = models.front();
  for (const auto& m : models) {
    if (m.layers.size() != ref.layers.size()) {
      throw DimensionError("aggregate: layer counts differ");
    }
    for (std::size_t l = 0; l < ref.layers.size(); ++l) {
      if (m.layers[l].weight.rows() != ref.layers[l].weight.rows() ||
          m.layers[l].weight.cols() != ref.layers[l].weight.cols() ||
          m.layers[l].bias.size() != ref.layers[l].bias.size()) {
        throw DimensionError("aggregate: layer shapes differ");
      }
    }
  }

  nn::ModelParams out = ref;
  for (std::size_t l = 0; l < out.layers.size(); ++l) {
    auto w = out.layers[l].weight.data();
    auto& b = out.layers[l].bias;
    std::fill(w.begin(), w.end(), 0.0);
    std::fill(b.begin(), b.end(), 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
      const double c = weights[i];
      const auto src = models[i].layers[l].weight.data();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] += c * src[j];
      const auto& sb = models[i].layers[l].bias;
      for (std::size_t j = 0; j < b.size(); ++j) b[j] += c * sb[j];
    }
  }
  return out;
}

data::Dataset make_free_rider(const data::Dataset& shard,
                              std::size_t target_size, std::size_t pool_size,
                              std::uint64_t seed) {
  if (pool_size < 1 || target_size < pool_size) {
    throw ContractError("make_free_rider: need 1 <= pool_size <= target_size");
  }
  if (shard.size() < pool_size) {
    throw ContractError("make_free_rider: shard smaller than pool");
  }
  Rng rng = MakeStream(seed, StreamTag::kFreeRider);
  std::vector<std::size_t> order(shard.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> picked(order.begin(), order.begin() + pool_size);
  std::uniform_int_distribution<std::size_t> draw(0, pool_size - 1);
  while (picked.size() < target_size) picked.push_back(picked[draw(rng)]);
  return shard.Subset(picked);
}

ExperimentData prepare_data(const FederationConfig& config) {
  config.Validate();
  data::Dataset full;
  if (!config.data.idx_images.empty()) {
    full = data::load_idx(config.data.idx_images, config.data.idx_labels,
                          config.data.classes);
  } else {
    full = data::generate_blobs(config.data.classes, config.data.features,
                                config.data.per_class, config.data.separation,
                                config.seed);
  }
  auto [train, test] =
      data::holdout_split(full, config.data.test_fraction, config.seed);

  ExperimentData out;
  out.shards = data::partition(train, config.EffectivePartitionSpec());
  out.test = std::move(test);

  if (config.free_rider) {
    double total = 0.0;
    for (const auto& s : out.shards) total += static_cast<double>(s.size());
    const auto mean = static_cast<std::size_t>(
        std::lround(total / static_cast<double>(out.shards.size())));
    std::size_t pool = config.free_rider->pool_size;
    if (pool == 0) {
      pool = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(0.01 * static_cast<double>(mean))));
    }
    auto& victim = out.shards[config.free_rider->client];
    pool = std::min(pool, victim.size());
    victim = make_free_rider(victim, std::max(mean, pool), pool, config.seed);
  }
  return out;
}

nn::ModelParams initial_model(const FederationConfig& config,
                              std::size_t input_dim, int num_classes) {
  Rng rng = MakeStream(config.seed, StreamTag::kInit);
  return nn::init_mlp(input_dim, config.hidden, num_classes, rng);
}

std::vector<double> standalone_accuracies(const FederationConfig& config,
                                          const ExperimentData& data,
                                          const nn::ModelParams& initial) {
  const nn::TrainSpec spec = config.EffectiveTrainSpec();
  std::vector<double> acc(data.shards.size());
  parallel_for(data.shards.size(), config.workers, [&](std::size_t i) {
    nn::ModelParams params = initial;
    for (int t = 1; t <= config.rounds; ++t) {
      Rng rng = MakeStream(config.seed, StreamTag::kStandalone,
                           {i, static_cast<std::uint64_t>(t)});
      params = nn::train_local(params, data.shards[i], spec, t, rng).params;
    }
    acc[i] = nn::evaluate(params, data.test);
  });
  return acc;
}

Federation::Federation(FederationConfig config, ExperimentData data,
                       std::vector<double> standalone_accuracy)
    : config_(std::move(config)),
      data_(std::move(data)),
      standalone_(std::move(standalone_accuracy)),
      contributions_(data_.shards.size(), config_.momentum),
      filter_(fusion::KalmanState::Uniform(data_.shards.size(), config_.filter)) {
  if (data_.shards.size() != static_cast<std::size_t>(config_.n_clients)) {
    throw DimensionError("Federation: shard count != clients");
  }
  if (standalone_.size() != data_.shards.size()) {
    throw DimensionError("Federation: standalone accuracy count != clients");
  }
}

std::vector<nn::LocalResult> Federation::TrainClients(
    const nn::ModelParams& global, int round) const {
  const nn::TrainSpec spec = config_.EffectiveTrainSpec();
  std::vector<nn::LocalResult> results(data_.shards.size());
  parallel_for(data_.shards.size(), config_.workers, [&](std::size_t i) {
    Rng rng = MakeStream(config_.seed, StreamTag::kLocalTraining,
                         {i, static_cast<std::uint64_t>(round)});
    results[i] = nn::train_local(global, data_.shards[i], spec, round, rng);
  });
  return results;
}

Federation::RoundOutput Federation::run_round(const nn::ModelParams& global,
                                              int round) {
  if (round < 1 || round > config_.rounds) {
    throw ContractError("run_round: round " + std::to_string(round) +
                        " outside [1, " + std::to_string(config_.rounds) + "]");
  }
  const std::vector<nn::LocalResult> results = TrainClients(global, round);
  if (observer_) observer_(round, results);

  const std::size_t n = results.size();
  const Strategy strategy = config_.strategy;
  RoundOutput out;
  RoundRecord& rec = out.record;
  rec.round = round;

  auto start = Clock::now();
  if (UsesEntropy(strategy)) {
    rec.raw_entropy.resize(n);
    parallel_for(n, config_.workers, [&](std::size_t i) {
      rec.raw_entropy[i] = scoring::spectral_entropy(
          results[i].update.final_layer(), config_.entropy_mode).value;
    });
    for (std::size_t i = 0; i < n; ++i) {
      contributions_.ema_update(i, rec.raw_entropy[i], scoring::Signal::kEntropy);
    }
    rec.smoothed_entropy = contributions_.smoothed(scoring::Signal::kEntropy);
  }
  if (UsesCssv(strategy)) {
    const linalg::DenseMatrix aggregate_layer = MeanFinalLayer(results);
    rec.raw_cssv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rec.raw_cssv[i] =
          scoring::cssv(results[i].update.final_layer(), aggregate_layer);
      contributions_.ema_update(i, rec.raw_cssv[i], scoring::Signal::kCssv);
    }
    rec.smoothed_cssv = contributions_.smoothed(scoring::Signal::kCssv);
  }
  if (strategy == Strategy::kCgsv) {
    const nn::LayerUpdate mean = MeanUpdate(results);
    rec.raw_cgsv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      rec.raw_cgsv[i] = scoring::cgsv_score(results[i].update, mean);
      contributions_.ema_update(i, rec.raw_cgsv[i], scoring::Signal::kCgsv);
    }
    rec.smoothed_cgsv = contributions_.smoothed(scoring::Signal::kCgsv);
  }
  out.timing.scoring_ms = MillisSince(start);

  start = Clock::now();
  const double floor = config_.weight_floor;
  switch (strategy) {
    case Strategy::kFedAvgUniform:
      rec.weights.assign(n, 1.0 / static_cast<double>(n));
      break;
    case Strategy::kFedAvgSamples: {
      double total = 0.0;
      for (const auto& s : data_.shards) total += static_cast<double>(s.size());
      for (const auto& s : data_.shards) {
        rec.weights.push_back(static_cast<double>(s.size()) / total);
      }
      break;
    }
    case Strategy::kCgsv:
      rec.weights = scoring::normalize_scores(rec.smoothed_cgsv, floor);
      break;
    case Strategy::kShapFed:
      rec.weights = scoring::normalize_scores(rec.smoothed_cssv, floor);
      break;
    case Strategy::kSpectralFed:
      rec.weights = scoring::normalize_scores(rec.smoothed_entropy, floor);
      break;
    case Strategy::kSpectralFuse: {
      const auto s = scoring::normalize_scores(rec.smoothed_entropy, floor);
      const auto gamma = scoring::normalize_scores(rec.smoothed_cssv, floor);
      rec.fused = fuser_ ? fuser_(s, gamma)
                         : fusion::filter_step(filter_, s, gamma);
      rec.weights = scoring::normalize_scores(rec.fused, floor);
      break;
    }
  }
  out.timing.fusion_ms = MillisSince(start);

  start = Clock::now();
  std::vector<nn::ModelParams> models;
  models.reserve(n);
  for (const auto& r : results) models.push_back(r.params);
  out.global = aggregate(models, rec.weights);
  out.timing.aggregation_ms = MillisSince(start);

  rec.global_accuracy = nn::evaluate(out.global, data_.test);
  rec.pearson = linalg::pearson(rec.weights, standalone_);
  rec.spearman = linalg::spearman(rec.weights, standalone_);
  return out;
}

RunResult run_experiment(const FederationConfig& config,
                         const RoundObserver& observer) {
  return run_experiment(config, prepare_data(config), observer);
}

RunResult run_experiment(const FederationConfig& config, ExperimentData data,
                         const RoundObserver& observer) {
  config.Validate();
  if (data.shards.empty()) throw DimensionError("run_experiment: no shards");
  const auto& first = data.shards.front();
  nn::ModelParams global =
      initial_model(config, first.num_features(), first.num_classes);

  RunResult result;
  for (const auto& s : data.shards) result.shard_sizes.push_back(s.size());
  result.standalone_accuracy = standalone_accuracies(config, data, global);

  Federation server(config, std::move(data), result.standalone_accuracy);
  if (observer) server.set_observer(observer);
  for (int t = 1; t <= config.rounds; ++t) {
    auto out = server.run_round(global, t);
    global = std::move(out.global);
    result.rounds.push_back(std::move(out.record));
    result.timings.push_back(out.timing);
  }
  result.final_accuracy =
      result.rounds.empty() ? 0.0 : result.rounds.back().global_accuracy;
  return result;
}

}  // namespace specfuse::federation
