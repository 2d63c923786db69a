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

#include "specfuse/analysis.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "specfuse/errors.h"
#include "specfuse/linalg.h"
#include "specfuse/scoring.h"

namespace specfuse::analysis {

using federation::FederationConfig;
using federation::RoundRecord;

std::vector<double> clr_transform(std::span<const double> weights) {
  std::vector<double> y(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) {
      throw ContractError("clr_transform: weights must be positive");
    }
    y[i] = std::log(weights[i]);
  }
  const double mean =
      std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (double& v : y) v -= mean;
  return y;
}

FreeRiderReport detect_free_riders(std::span<const double> weights,
                                   double threshold) {
  if (weights.size() < 3) {
    throw InsufficientDataError("detect_free_riders: need at least 3 clients");
  }
  FreeRiderReport report;
  report.threshold = threshold;
  report.clr = clr_transform(weights);
  const auto [med, mad] = linalg::median_mad(report.clr);
  double spread = mad;
  if (spread == 0.0) {
    double total = 0.0;
    for (double v : report.clr) total += std::abs(v - med);
    spread = total / static_cast<double>(report.clr.size());
  }
  report.z.assign(weights.size(), 0.0);
  report.flagged.assign(weights.size(), false);
  // Relative to the clr magnitude; exact ties in floating point are rare.
  if (spread <= 1e-12) return report;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    report.z[i] = (report.clr[i] - med) / spread;
    report.flagged[i] = report.z[i] < -threshold;
  }
  return report;
}

std::vector<RoundInterval> equal_intervals(int rounds, int count) {
  if (rounds < 1 || count < 1 || count > rounds) {
    throw ContractError("equal_intervals: need 1 <= count <= rounds");
  }
  std::vector<RoundInterval> out;
  int start = 1;
  for (int k = 0; k < count; ++k) {
    const int len = rounds / count + (k < rounds % count ? 1 : 0);
    out.push_back({start, start + len - 1});
    start += len;
  }
  return out;
}

std::vector<IntervalRates> detection_rate(
    std::span<const RoundRecord> log, std::optional<std::size_t> free_rider,
    std::span<const RoundInterval> intervals, double threshold) {
  std::vector<IntervalRates> out;
  for (const RoundInterval& iv : intervals) {
    if (iv.start < 1 || iv.end < iv.start) {
      throw ContractError("detection_rate: malformed interval");
    }
    std::vector<const RoundRecord*> rounds;
    for (const auto& r : log) {
      if (r.round >= iv.start && r.round <= iv.end) rounds.push_back(&r);
    }
    if (rounds.size() != static_cast<std::size_t>(iv.end - iv.start + 1)) {
      throw ContractError("detection_rate: interval [" +
                          std::to_string(iv.start) + ", " +
                          std::to_string(iv.end) + "] not covered by the log");
    }
    const std::size_t n = rounds.front()->weights.size();
    if (free_rider && *free_rider >= n) {
      throw DimensionError("detection_rate: free-rider index out of range");
    }
    IntervalRates rates;
    rates.interval = iv;
    rates.flag_rate.assign(n, 0.0);
    for (const RoundRecord* r : rounds) {
      const FreeRiderReport rep = detect_free_riders(r->weights, threshold);
      for (std::size_t i = 0; i < n; ++i) {
        if (rep.flagged[i]) rates.flag_rate[i] += 1.0;
      }
    }
    for (double& f : rates.flag_rate) f /= static_cast<double>(rounds.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (free_rider && i == *free_rider) {
        rates.true_positive_rate = rates.flag_rate[i];
      } else {
        rates.false_positive_rate.push_back(rates.flag_rate[i]);
      }
    }
    out.push_back(std::move(rates));
  }
  return out;
}

LayerStudy layerwise_entropy_study(const FederationConfig& config,
                                   std::span<const std::uint64_t> seeds) {
  if (seeds.empty()) throw ContractError("layerwise study: no seeds");
  LayerStudy study;
  study.seeds.assign(seeds.begin(), seeds.end());

  for (std::uint64_t seed : seeds) {
    FederationConfig cfg = config;
    cfg.seed = seed;
    // per_round[layer][round] = normalised smoothed entropies
    std::vector<std::vector<std::vector<double>>> per_round;
    std::vector<scoring::ContributionState> states;
    std::vector<std::pair<std::size_t, std::size_t>> shapes;

    auto observer = [&](int, std::span<const nn::LocalResult> results) {
      const std::size_t n_layers = results.front().update.weights.size();
      if (states.empty()) {
        for (std::size_t l = 0; l < n_layers; ++l) {
          states.emplace_back(results.size(), cfg.momentum);
          const auto& w = results.front().update.weights[l];
          shapes.emplace_back(w.rows(), w.cols());
        }
        per_round.resize(n_layers);
      }
      for (std::size_t l = 0; l < n_layers; ++l) {
        for (std::size_t i = 0; i < results.size(); ++i) {
          const double s = scoring::spectral_entropy(
              results[i].update.weights[l], cfg.entropy_mode).value;
          states[l].ema_update(i, s, scoring::Signal::kEntropy);
        }
        per_round[l].push_back(scoring::normalize_scores(
            states[l].smoothed(scoring::Signal::kEntropy), cfg.weight_floor));
      }
    };
    const federation::RunResult run = federation::run_experiment(cfg, observer);

    if (study.layers.empty()) {
      for (std::size_t l = 0; l < per_round.size(); ++l) {
        study.layers.push_back({l, shapes[l].first, shapes[l].second, 0.0, {}});
      }
    }
    std::size_t best = 0;
    for (std::size_t l = 0; l < per_round.size(); ++l) {
      double total = 0.0;
      for (const auto& weights : per_round[l]) {
        total += linalg::pearson(weights, run.standalone_accuracy);
      }
      const double mean = total / static_cast<double>(per_round[l].size());
      study.layers[l].seed_pearson.push_back(mean);
      if (mean > study.layers[best].seed_pearson.back()) best = l;
    }
    study.best_layer_per_seed.push_back(best);
  }
  for (auto& layer : study.layers) {
    layer.mean_pearson =
        std::accumulate(layer.seed_pearson.begin(), layer.seed_pearson.end(),
                        0.0) /
        static_cast<double>(layer.seed_pearson.size());
  }
  return study;
}

double final_quarter_pearson(std::span<const RoundRecord> log) {
  if (log.empty()) throw InsufficientDataError("final_quarter_pearson: empty");
  const std::size_t tail = (log.size() + 3) / 4;
  double total = 0.0;
  for (std::size_t k = log.size() - tail; k < log.size(); ++k) {
    total += log[k].pearson;
  }
  return total / static_cast<double>(tail);
}

double SweepGrid::Spread() const {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : cells) {
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return hi - lo;
}

SweepGrid sweep(const FederationConfig& base, std::span<const double> q_values,
                std::span<const double> epsilon_values,
                std::span<const std::uint64_t> seeds) {
  if (q_values.empty() || epsilon_values.empty() || seeds.empty()) {
    throw ContractError("sweep: empty axis");
  }
  SweepGrid grid;
  grid.split = data::PartitionKindName(base.partition);
  grid.q_values.assign(q_values.begin(), q_values.end());
  grid.epsilon_values.assign(epsilon_values.begin(), epsilon_values.end());
  grid.seeds.assign(seeds.begin(), seeds.end());

  const std::size_t nq = q_values.size();
  const std::size_t ne = epsilon_values.size();
  const std::size_t ns = seeds.size();
  std::vector<double> metric(nq * ne * ns);
  federation::parallel_for(metric.size(), base.workers, [&](std::size_t k) {
    FederationConfig cfg = base;
    cfg.workers = 1;
    cfg.filter.process_noise = q_values[k / (ne * ns)];
    cfg.filter.noise_floor = epsilon_values[(k / ns) % ne];
    cfg.seed = seeds[k % ns];
    metric[k] = final_quarter_pearson(federation::run_experiment(cfg).rounds);
  });

  grid.cells.assign(nq, std::vector<double>(ne, 0.0));
  for (std::size_t k = 0; k < metric.size(); ++k) {
    grid.cells[k / (ne * ns)][(k / ns) % ne] += metric[k] / static_cast<double>(ns);
  }
  return grid;
}

}  // namespace specfuse::analysis
