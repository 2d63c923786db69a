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

#ifndef SPECFUSE_ANALYSIS_H_
#define SPECFUSE_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specfuse/federation.h"

namespace specfuse::analysis {

inline constexpr double kDefaultFlagThreshold = 2.5;

struct FreeRiderReport {
  std::vector<double> clr;      // centred log-ratio of the weights
  std::vector<double> z;        // robust z-scores of clr
  std::vector<bool> flagged;    // z < -threshold
  double threshold = kDefaultFlagThreshold;
  int round_start = 0;
  int round_end = 0;
};

// Centred log-ratio: ln w_i - mean(ln w). Weights must be positive.
std::vector<double> clr_transform(std::span<const double> weights);

// Flags clients whose clr weight is a low-side outlier:
// z_i = (y_i - median(y)) / MAD(y), flagged when z_i < -threshold. When
// the MAD is zero the mean absolute deviation from the median is used
// instead; if that is zero too (all weights equal) nothing is flagged.
FreeRiderReport detect_free_riders(std::span<const double> weights,
                                   double threshold = kDefaultFlagThreshold);

// Inclusive 1-based round range.
struct RoundInterval {
  int start = 1;
  int end = 1;
};

struct IntervalRates {
  RoundInterval interval;
  std::vector<double> flag_rate;  // per client, fraction of rounds flagged
  double true_positive_rate = 0.0;         // flag rate of the free-rider
  std::vector<double> false_positive_rate; // flag rate of every other client
};

// Splits [1, rounds] into `count` near-equal consecutive intervals.
std::vector<RoundInterval> equal_intervals(int rounds, int count);

// Per-interval flag statistics over a run log. `free_rider` is the true
// free-rider's index, or nullopt when the cohort is honest.
std::vector<IntervalRates> detection_rate(
    std::span<const federation::RoundRecord> log,
    std::optional<std::size_t> free_rider,
    std::span<const RoundInterval> intervals,
    double threshold = kDefaultFlagThreshold);

struct LayerCorrelation {
  std::size_t layer = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double mean_pearson = 0.0;           // averaged over seeds
  std::vector<double> seed_pearson;    // round-averaged, one per seed
};

struct LayerStudy {
  std::vector<LayerCorrelation> layers;
  std::vector<std::uint64_t> seeds;
  // Index of the layer with the highest correlation, per seed.
  std::vector<std::size_t> best_layer_per_seed;
};

// Entropy of every layer's weight delta, smoothed and normalised across
// clients per layer, correlated with standalone accuracy and averaged over
// rounds, then over seeds.
LayerStudy layerwise_entropy_study(const federation::FederationConfig& config,
                                   std::span<const std::uint64_t> seeds);

// Mean per-round Pearson over the last ceil(T/4) rounds.
double final_quarter_pearson(std::span<const federation::RoundRecord> log);

struct SweepGrid {
  std::string split;
  std::vector<double> q_values;
  std::vector<double> epsilon_values;
  std::vector<std::uint64_t> seeds;
  // cells[qi][ei]: seed-averaged final-quarter Pearson.
  std::vector<std::vector<double>> cells;

  double Spread() const;
};

SweepGrid sweep(const federation::FederationConfig& base,
                std::span<const double> q_values,
                std::span<const double> epsilon_values,
                std::span<const std::uint64_t> seeds);

}  // namespace specfuse::analysis

#endif  // SPECFUSE_ANALYSIS_H_
