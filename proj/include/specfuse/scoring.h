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

#ifndef SPECFUSE_SCORING_H_
#define SPECFUSE_SCORING_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specfuse/linalg.h"
#include "specfuse/nn.h"

namespace specfuse::scoring {

using linalg::DenseMatrix;

// How the class-space Gram matrix A = M Mᵀ is normalised before taking
// the entropy of its spectrum.
enum class EntropyMode {
  kTraceNormalized,      // rho = A / Tr(A); eigenvalues sum to one.
  kFrobeniusNormalized,  // A / ||A||_F
};

std::string EntropyModeName(EntropyMode mode);
EntropyMode ParseEntropyMode(const std::string& name);

struct EntropyResult {
  double value = 0.0;
  // Set for an all-zero update; value is then 0.
  bool degenerate = false;
};

// Von Neumann entropy (natural log) of the normalised Gram matrix of `m`.
// The spectrum is taken from the smaller of M Mᵀ and Mᵀ M, which share
// their non-zero eigenvalues.
EntropyResult spectral_entropy(const DenseMatrix& m,
                               EntropyMode mode = EntropyMode::kTraceNormalized);

// Shannon entropy -sum p ln p of the given non-negative values, 0 ln 0 = 0.
double shannon_entropy(std::span<const double> p);

// Class-specific alignment: mean over classes of the cosine between the
// client's and the aggregate's per-class rows.
double cssv(const DenseMatrix& client, const DenseMatrix& aggregate);

// Cosine between fully flattened updates.
double cgsv_score(const nn::LayerUpdate& client,
                  const nn::LayerUpdate& average);

enum class Signal { kEntropy = 0, kCssv = 1, kCgsv = 2 };

// Per-client exponentially smoothed signals.
class ContributionState {
 public:
  ContributionState(std::size_t n_clients, double momentum);

  // Folds a raw observation into the smoothed value for `client` and
  // returns it. The first observation passes through unchanged. A
  // non-finite raw value is rejected: the previous smoothed value is kept
  // (0 if none) and a warning is logged.
  double ema_update(std::size_t client, double raw, Signal which);

  // Smoothed values for every client; clients never observed report 0.
  std::vector<double> smoothed(Signal which) const;
  std::optional<double> smoothed(std::size_t client, Signal which) const;

  std::size_t n_clients() const { return n_clients_; }
  double momentum() const { return momentum_; }

 private:
  struct Track {
    double value = 0.0;
    bool initialized = false;
  };
  std::vector<Track>& tracks(Signal which);
  const std::vector<Track>& tracks(Signal which) const;

  std::size_t n_clients_;
  double momentum_;
  std::vector<Track> tracks_[3];
};

inline constexpr double kDefaultWeightFloor = 1e-6;

// Clamps each entry to at least `floor` and rescales to sum 1. When every
// entry is at or below the floor the result is uniform.
std::vector<double> normalize_scores(std::span<const double> v,
                                     double floor = kDefaultWeightFloor);

}  // namespace specfuse::scoring

#endif  // SPECFUSE_SCORING_H_
