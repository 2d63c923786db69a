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

#ifndef SPECFUSE_FEDERATION_H_
#define SPECFUSE_FEDERATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specfuse/data.h"
#include "specfuse/fusion.h"
#include "specfuse/nn.h"
#include "specfuse/scoring.h"

namespace specfuse::federation {

enum class Strategy {
  kFedAvgUniform,
  kFedAvgSamples,
  kCgsv,
  kShapFed,
  kSpectralFed,
  kSpectralFuse,
};

std::string StrategyName(Strategy s);
Strategy ParseStrategy(const std::string& name);

struct FreeRiderSpec {
  int client = 0;
  // Genuine samples kept; 0 selects 1% of the mean shard size (at least 1).
  std::size_t pool_size = 0;

  friend bool operator==(const FreeRiderSpec&, const FreeRiderSpec&) = default;
};

// Synthetic blobs unless both IDX paths are set.
struct DataConfig {
  int classes = 10;
  int features = 32;
  int per_class = 200;
  double separation = 3.0;
  double test_fraction = 0.2;
  std::string idx_images;
  std::string idx_labels;

  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct FederationConfig {
  int n_clients = 5;
  int rounds = 50;
  nn::TrainSpec train;  // total_rounds and seed are taken from this config
  std::vector<int> hidden = {64};
  data::PartitionKind partition = data::PartitionKind::kOnlyLabelSkew;
  double dirichlet_alpha = 0.5;
  DataConfig data;
  Strategy strategy = Strategy::kSpectralFuse;
  scoring::EntropyMode entropy_mode = scoring::EntropyMode::kTraceNormalized;
  double momentum = 0.9;
  fusion::FilterParams filter;
  double weight_floor = scoring::kDefaultWeightFloor;
  std::optional<FreeRiderSpec> free_rider;
  std::uint64_t seed = 0;
  int workers = 1;  // concurrent client trainers; never affects results

  // Throws ConfigError naming the offending key.
  void Validate() const;
  nn::TrainSpec EffectiveTrainSpec() const;
  data::PartitionSpec EffectivePartitionSpec() const;

  friend bool operator==(const FederationConfig&,
                         const FederationConfig&) = default;
};

struct RoundRecord {
  int round = 0;
  // Raw and smoothed signals; empty when the strategy does not use them.
  std::vector<double> raw_entropy;
  std::vector<double> raw_cssv;
  std::vector<double> raw_cgsv;
  std::vector<double> smoothed_entropy;
  std::vector<double> smoothed_cssv;
  std::vector<double> smoothed_cgsv;
  std::vector<double> fused;  // SpectralFuse only
  std::vector<double> weights;
  double global_accuracy = 0.0;
  double pearson = 0.0;   // weights vs standalone accuracy
  double spearman = 0.0;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

// Server-side wall-clock per round, milliseconds.
struct PhaseTiming {
  double scoring_ms = 0.0;
  double fusion_ms = 0.0;
  double aggregation_ms = 0.0;
};

struct ExperimentData {
  std::vector<data::Dataset> shards;
  data::Dataset test;
};

struct RunResult {
  std::vector<RoundRecord> rounds;
  std::vector<PhaseTiming> timings;
  std::vector<double> standalone_accuracy;
  std::vector<std::size_t> shard_sizes;
  double final_accuracy = 0.0;
};

// Receives every round's local training results before scoring.
using RoundObserver =
    std::function<void(int round, std::span<const nn::LocalResult>)>;

// Maps normalised (entropy, cssv) observations to fused estimates.
using Fuser = std::function<std::vector<double>(std::span<const double>,
                                                std::span<const double>)>;

// Convex combination of models in client-index order.
nn::ModelParams aggregate(std::span<const nn::ModelParams> models,
                          std::span<const double> weights);

// Keeps `pool_size` genuine samples of `shard` and pads with seeded
// duplicates of them up to `target_size`.
data::Dataset make_free_rider(const data::Dataset& shard,
                              std::size_t target_size, std::size_t pool_size,
                              std::uint64_t seed);

// Dataset generation/loading, holdout split, partition and free-rider
// injection as described by `config`.
ExperimentData prepare_data(const FederationConfig& config);

nn::ModelParams initial_model(const FederationConfig& config,
                              std::size_t input_dim, int num_classes);

// Each client trains alone from `initial` for config.rounds rounds; returns
// held-out accuracies.
std::vector<double> standalone_accuracies(const FederationConfig& config,
                                          const ExperimentData& data,
                                          const nn::ModelParams& initial);

// Round-by-round server. Owns the smoothing and filter state.
class Federation {
 public:
  Federation(FederationConfig config, ExperimentData data,
             std::vector<double> standalone_accuracy);

  struct RoundOutput {
    nn::ModelParams global;
    RoundRecord record;
    PhaseTiming timing;
  };

  // Broadcast, local training, scoring, weighting and aggregation for
  // 1-based round `round`.
  RoundOutput run_round(const nn::ModelParams& global, int round);

  void set_observer(RoundObserver observer) { observer_ = std::move(observer); }
  // Replaces the rank-adaptive filter in SpectralFuse.
  void set_fuser(Fuser fuser) { fuser_ = std::move(fuser); }

  const FederationConfig& config() const { return config_; }
  const ExperimentData& data() const { return data_; }
  const scoring::ContributionState& contributions() const {
    return contributions_;
  }

 private:
  std::vector<nn::LocalResult> TrainClients(const nn::ModelParams& global,
                                            int round) const;

  FederationConfig config_;
  ExperimentData data_;
  std::vector<double> standalone_;
  scoring::ContributionState contributions_;
  fusion::KalmanState filter_;
  RoundObserver observer_;
  Fuser fuser_;
};

// Full experiment: data, standalone baselines, then config.rounds rounds.
RunResult run_experiment(const FederationConfig& config,
                         const RoundObserver& observer = {});
RunResult run_experiment(const FederationConfig& config, ExperimentData data,
                         const RoundObserver& observer = {});

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions are
// rethrown for the lowest failing index after all tasks finish.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace specfuse::federation

#endif  // SPECFUSE_FEDERATION_H_
