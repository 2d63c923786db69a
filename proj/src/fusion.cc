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

#include "specfuse/fusion.h"

#include <cmath>
#include <string>

#include "specfuse/errors.h"
#include "specfuse/linalg.h"

namespace specfuse::fusion {

KalmanState KalmanState::Uniform(std::size_t n_clients,
                                 const FilterParams& params) {
  if (n_clients == 0) throw DimensionError("KalmanState: no clients");
  if (!(params.process_noise >= 0.0) || !(params.noise_floor > 0.0) ||
      !(params.initial_variance > 0.0)) {
    throw ContractError("KalmanState: need Q >= 0, epsilon > 0, P0 > 0");
  }
  KalmanState s;
  s.x.assign(n_clients, 1.0 / static_cast<double>(n_clients));
  s.p.assign(n_clients, params.initial_variance);
  s.params = params;
  return s;
}

std::vector<Estimate> predict(const KalmanState& state) {
  std::vector<Estimate> out(state.size());
  for (std::size_t i = 0; i < state.size(); ++i) {
    out[i] = {state.x[i], state.p[i] + state.params.process_noise};
  }
  return out;
}

RankAdaptation rank_adapt(std::span<const double> predictions,
                          std::span<const double> entropy_obs,
                          std::span<const double> cssv_obs, double epsilon) {
  if (predictions.size() != entropy_obs.size() ||
      predictions.size() != cssv_obs.size()) {
    throw DimensionError("rank_adapt: length mismatch");
  }
  RankAdaptation r;
  r.rho_entropy = linalg::spearman(predictions, entropy_obs);
  r.rho_cssv = linalg::spearman(predictions, cssv_obs);
  r.noise.entropy = (1.0 - r.rho_entropy) + epsilon;
  r.noise.cssv = (1.0 - r.rho_cssv) + epsilon;
  return r;
}

Gain kalman_gain(double p, const MeasurementNoise& r) {
  // Innovation covariance S = H P Hᵀ + R with H = [1, 1]ᵀ.
  const double s00 = p + r.entropy;
  const double s01 = p;
  const double s11 = p + r.cssv;
  const double det = s00 * s11 - s01 * s01;
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw ContractError("kalman_gain: singular innovation covariance");
  }
  const double i00 = s11 / det;
  const double i01 = -s01 / det;
  const double i11 = s00 / det;
  // K = P Hᵀ S^-1, a 1x2 row.
  return {p * (i00 + i01), p * (i01 + i11)};
}

Estimate update(const Estimate& predicted, double s, double gamma,
                const MeasurementNoise& r) {
  if (!(predicted.p > 0.0)) throw ContractError("update: P must be positive");
  const Gain k = kalman_gain(predicted.p, r);
  const double x = predicted.x + k.entropy * (s - predicted.x) +
                   k.cssv * (gamma - predicted.x);
  const double p = (1.0 - (k.entropy + k.cssv)) * predicted.p;
  return {x, p};
}

std::vector<double> filter_step(KalmanState& state,
                                std::span<const double> entropy_obs,
                                std::span<const double> cssv_obs) {
  const std::size_t n = state.size();
  if (entropy_obs.size() != n || cssv_obs.size() != n) {
    throw DimensionError("filter_step: observation count != client count");
  }
  const std::vector<Estimate> prior = predict(state);
  std::vector<double> predicted_x(n);
  for (std::size_t i = 0; i < n; ++i) predicted_x[i] = prior[i].x;
  const RankAdaptation adapt = rank_adapt(predicted_x, entropy_obs, cssv_obs,
                                          state.params.noise_floor);
  for (std::size_t i = 0; i < n; ++i) {
    const Estimate post =
        update(prior[i], entropy_obs[i], cssv_obs[i], adapt.noise);
    state.x[i] = post.x;
    state.p[i] = post.p;
  }
  state.last_noise = adapt.noise;
  return state.x;
}

}  // namespace specfuse::fusion
