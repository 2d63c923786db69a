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

#include "specfuse/scoring.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "specfuse/errors.h"

namespace specfuse::scoring {

std::string EntropyModeName(EntropyMode mode) {
  return mode == EntropyMode::kTraceNormalized ? "trace" : "frobenius";
}

EntropyMode ParseEntropyMode(const std::string& name) {
  if (name == "trace") return EntropyMode::kTraceNormalized;
  if (name == "frobenius") return EntropyMode::kFrobeniusNormalized;
  throw ConfigError("scoring.entropy_mode",
                    "expected 'trace' or 'frobenius', got '" + name + "'");
}

double shannon_entropy(std::span<const double> p) {
  double s = 0.0;
  for (double v : p) {
    if (v > 0.0) s -= v * std::log(v);
  }
  return s;
}

EntropyResult spectral_entropy(const DenseMatrix& m, EntropyMode mode) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw DimensionError("spectral_entropy: empty matrix");
  }
  // Rescale first so the Gram entries stay well inside double range.
  const double fro = m.FrobeniusNorm();
  if (!(fro > linalg::kZeroNorm)) return {0.0, true};
  DenseMatrix scaled = m;
  for (double& v : scaled.data()) v /= fro;

  DenseMatrix a = linalg::gram_compact(scaled);
  const double denom =
      mode == EntropyMode::kTraceNormalized ? a.Trace() : a.FrobeniusNorm();
  for (double& v : a.data()) v /= denom;
  const linalg::Spectrum spectrum = linalg::psd_eigenvalues(a);
  return {shannon_entropy(spectrum.eigenvalues), false};
}

double cssv(const DenseMatrix& client, const DenseMatrix& aggregate) {
  if (client.rows() != aggregate.rows() || client.cols() != aggregate.cols()) {
    throw DimensionError("cssv: shape mismatch");
  }
  if (client.rows() == 0) throw DimensionError("cssv: no classes");
  double total = 0.0;
  for (std::size_t j = 0; j < client.rows(); ++j) {
    total += linalg::cosine(client.row(j), aggregate.row(j));
  }
  return total / static_cast<double>(client.rows());
}

double cgsv_score(const nn::LayerUpdate& client,
                  const nn::LayerUpdate& average) {
  client.RequireSameShape(average);
  return linalg::cosine(client.Flatten(), average.Flatten());
}

ContributionState::ContributionState(std::size_t n_clients, double momentum)
    : n_clients_(n_clients), momentum_(momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("scoring.momentum", "must lie in [0, 1)");
  }
  for (auto& t : tracks_) t.resize(n_clients);
}

std::vector<ContributionState::Track>& ContributionState::tracks(Signal which) {
  return tracks_[static_cast<int>(which)];
}

const std::vector<ContributionState::Track>& ContributionState::tracks(
    Signal which) const {
  return tracks_[static_cast<int>(which)];
}

double ContributionState::ema_update(std::size_t client, double raw,
                                     Signal which) {
  if (client >= n_clients_) throw DimensionError("ema_update: bad client");
  Track& t = tracks(which)[client];
  if (!std::isfinite(raw)) {
    std::clog << "warning: dropping non-finite score for client " << client
              << '\n';
    return t.value;
  }
  if (!t.initialized) {
    t.value = raw;
    t.initialized = true;
  } else {
    t.value = momentum_ * t.value + (1.0 - momentum_) * raw;
  }
  return t.value;
}

std::vector<double> ContributionState::smoothed(Signal which) const {
  std::vector<double> out;
  out.reserve(n_clients_);
  for (const Track& t : tracks(which)) out.push_back(t.value);
  return out;
}

std::optional<double> ContributionState::smoothed(std::size_t client,
                                                  Signal which) const {
  const Track& t = tracks(which).at(client);
  if (!t.initialized) return std::nullopt;
  return t.value;
}

std::vector<double> normalize_scores(std::span<const double> v, double floor) {
  if (v.empty()) return {};
  const double n = static_cast<double>(v.size());
  if (std::all_of(v.begin(), v.end(), [floor](double x) {
        return !(x > floor);
      })) {
    return std::vector<double>(v.size(), 1.0 / n);
  }
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x = std::isfinite(x) ? std::max(x, floor) : floor;
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& x : out) x /= total;
  return out;
}

}  // namespace specfuse::scoring
