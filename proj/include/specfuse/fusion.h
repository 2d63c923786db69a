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

#ifndef SPECFUSE_FUSION_H_
#define SPECFUSE_FUSION_H_

#include <cstddef>
#include <span>
#include <vector>

namespace specfuse::fusion {

// Diagonal 2x2 measurement covariance shared by all clients.
struct MeasurementNoise {
  double entropy = 1.0;  // R(0, 0)
  double cssv = 1.0;     // R(1, 1)
};

struct RankAdaptation {
  double rho_entropy = 0.0;
  double rho_cssv = 0.0;
  MeasurementNoise noise;
};

struct Estimate {
  double x = 0.0;  // latent contribution
  double p = 0.0;  // variance
};

struct FilterParams {
  double process_noise = 1e-4;   // Q
  double noise_floor = 1e-3;     // epsilon
  double initial_variance = 0.1; // P0

  friend bool operator==(const FilterParams&, const FilterParams&) = default;
};

// Per-client scalar Kalman state observed through H = [1, 1]ᵀ.
struct KalmanState {
  std::vector<double> x;
  std::vector<double> p;
  FilterParams params;
  MeasurementNoise last_noise;  // R of the most recent step

  // x = 1/n, P = P0 for every client.
  static KalmanState Uniform(std::size_t n_clients, const FilterParams& params);
  std::size_t size() const { return x.size(); }
};

// x stays, P grows by Q.
std::vector<Estimate> predict(const KalmanState& state);

// Spearman agreement of each signal with the predictions, mapped to
// R = diag((1 - rho_s) + eps, (1 - rho_g) + eps).
RankAdaptation rank_adapt(std::span<const double> predictions,
                          std::span<const double> entropy_obs,
                          std::span<const double> cssv_obs, double epsilon);

// Kalman gain for a scalar state and two-channel measurement.
struct Gain {
  double entropy = 0.0;
  double cssv = 0.0;
};
Gain kalman_gain(double p, const MeasurementNoise& r);

// Measurement update with y = (s, gamma).
Estimate update(const Estimate& predicted, double s, double gamma,
                const MeasurementNoise& r);

// One full round: predict, rank adaptation, per-client update. Mutates
// `state` and returns the fused estimates.
std::vector<double> filter_step(KalmanState& state,
                                std::span<const double> entropy_obs,
                                std::span<const double> cssv_obs);

}  // namespace specfuse::fusion

#endif  // SPECFUSE_FUSION_H_
