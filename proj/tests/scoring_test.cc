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
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "specfuse/errors.h"

namespace specfuse::scoring {
namespace {

DenseMatrix RandomMatrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

// Independent route: Eigen eigensolver on M Mᵀ, normalise, Shannon sum.
double OracleEntropy(const DenseMatrix& m, EntropyMode mode) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  Eigen::MatrixXd a = e * e.transpose();
  a /= mode == EntropyMode::kTraceNormalized ? a.trace() : a.norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  double s = 0.0;
  for (int k = 0; k < solver.eigenvalues().size(); ++k) {
    const double p = solver.eigenvalues()[k];
    if (p > 1e-300) s -= p * std::log(p);
  }
  return s;
}

constexpr EntropyMode kModes[] = {EntropyMode::kTraceNormalized,
                                  EntropyMode::kFrobeniusNormalized};

TEST(EntropyTest, OrthonormalRowsGiveLnTwo) {
  const auto m = DenseMatrix::FromRows({{1, 0, 0}, {0, 1, 0}});
  const auto r = spectral_entropy(m);
  EXPECT_NEAR(r.value, std::log(2.0), 1e-12);
  EXPECT_FALSE(r.degenerate);
}

TEST(EntropyTest, RankOneGivesZero) {
  const auto m = DenseMatrix::FromRows({{0, 0, 0}, {1, 2, 3}, {0, 0, 0}});
  EXPECT_NEAR(spectral_entropy(m).value, 0.0, 1e-12);
}

TEST(EntropyTest, ZeroUpdateIsDegenerate) {
  const auto r = spectral_entropy(DenseMatrix(3, 4));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_TRUE(r.degenerate);
}

TEST(EntropyTest, MatchesOracleBothModes) {
  std::mt19937_64 rng(31);
  const auto m = RandomMatrix(3, 8, rng);
  for (auto mode : kModes) {
    EXPECT_NEAR(spectral_entropy(m, mode).value, OracleEntropy(m, mode), 1e-8);
  }
}

TEST(EntropyTest, TallMatrixUsesCompactGram) {
  std::mt19937_64 rng(32);
  const auto m = RandomMatrix(12, 4, rng);
  for (auto mode : kModes) {
    EXPECT_NEAR(spectral_entropy(m, mode).value, OracleEntropy(m, mode), 1e-8);
  }
}

TEST(EntropyTest, ScaleSignAndPermutationInvariance) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t c = 2 + trial % 7;
    const auto m = RandomMatrix(c, c + 3, rng);
    for (auto mode : kModes) {
      const double base = spectral_entropy(m, mode).value;
      for (double k : {5.0, -1.0, -0.03, 1e4}) {
        DenseMatrix scaled = m;
        for (double& v : scaled.data()) v *= k;
        EXPECT_NEAR(spectral_entropy(scaled, mode).value, base, 1e-9);
      }
      DenseMatrix permuted(m.rows(), m.cols());
      for (std::size_t i = 0; i < c; ++i) {
        const auto src = m.row((i + 1) % c);
        std::copy(src.begin(), src.end(), permuted.row(i).begin());
      }
      EXPECT_NEAR(spectral_entropy(permuted, mode).value, base, 1e-9);
    }
  }
}

TEST(EntropyTest, TraceModeBounds) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t c = 2 + trial % 9;
    const double s = spectral_entropy(RandomMatrix(c, 20, rng)).value;
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, std::log(static_cast<double>(c)) + 1e-12);
  }
  // Orthogonal rows of equal norm: A ∝ I, maximal entropy.
  DenseMatrix m(4, 6);
  for (std::size_t i = 0; i < 4; ++i) m(i, i + 1) = 3.0;
  EXPECT_NEAR(spectral_entropy(m).value, std::log(4.0), 1e-12);
}

TEST(CssvTest, Examples) {
  const auto a = DenseMatrix::FromRows({{1, 2}, {3, -1}});
  EXPECT_NEAR(cssv(a, a), 1.0, 1e-15);
  const auto orth = DenseMatrix::FromRows({{-2, 1}, {1, 3}});
  EXPECT_NEAR(cssv(a, orth), 0.0, 1e-15);
  EXPECT_NEAR(cssv(DenseMatrix::FromRows({{1, 0}, {0, 1}}),
                   DenseMatrix::FromRows({{1, 0}, {0, -1}})),
              0.0, 1e-15);
  EXPECT_THROW(cssv(a, DenseMatrix(2, 3)), DimensionError);
}

TEST(CssvTest, ZeroRowContributesZero) {
  const auto a = DenseMatrix::FromRows({{1, 0}, {0, 0}});
  const auto g = DenseMatrix::FromRows({{2, 0}, {0, 1}});
  EXPECT_NEAR(cssv(a, g), 0.5, 1e-15);
}

TEST(CssvTest, RowRescalingAndPermutationInvariance) {
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = RandomMatrix(5, 7, rng);
    const auto g = RandomMatrix(5, 7, rng);
    const double base = cssv(a, g);
    DenseMatrix a2 = a;
    for (std::size_t i = 0; i < 5; ++i) {
      const double k = pos(rng);
      for (double& v : a2.row(i)) v *= k;
    }
    EXPECT_NEAR(cssv(a2, g), base, 1e-12);
    DenseMatrix pa(5, 7), pg(5, 7);
    for (std::size_t i = 0; i < 5; ++i) {
      std::copy(a.row(4 - i).begin(), a.row(4 - i).end(), pa.row(i).begin());
      std::copy(g.row(4 - i).begin(), g.row(4 - i).end(), pg.row(i).begin());
    }
    EXPECT_NEAR(cssv(pa, pg), base, 1e-12);
  }
}

nn::LayerUpdate RandomUpdate(std::mt19937_64& rng) {
  nn::LayerUpdate u;
  u.weights = {RandomMatrix(4, 3, rng), RandomMatrix(2, 4, rng)};
  std::normal_distribution<double> n(0.0, 1.0);
  u.biases = {std::vector<double>(4), std::vector<double>(2)};
  for (auto& b : u.biases) {
    for (double& v : b) v = n(rng);
  }
  return u;
}

TEST(CgsvTest, IdenticalAndNegated) {
  std::mt19937_64 rng(50);
  const auto u = RandomUpdate(rng);
  EXPECT_NEAR(cgsv_score(u, u), 1.0, 1e-12);
  auto neg = u;
  for (auto& w : neg.weights) {
    for (double& v : w.data()) v = -v;
  }
  for (auto& b : neg.biases) {
    for (double& v : b) v = -v;
  }
  EXPECT_NEAR(cgsv_score(u, neg), -1.0, 1e-12);
}

TEST(CgsvTest, MatchesFlattenOracle) {
  std::mt19937_64 rng(51);
  const auto u = RandomUpdate(rng);
  const auto v = RandomUpdate(rng);
  std::vector<double> fu, fv;
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t i = 0; i < u.weights[l].size(); ++i) {
      fu.push_back(u.weights[l].data()[i]);
      fv.push_back(v.weights[l].data()[i]);
    }
  }
  for (std::size_t l = 0; l < 2; ++l) {
    fu.insert(fu.end(), u.biases[l].begin(), u.biases[l].end());
    fv.insert(fv.end(), v.biases[l].begin(), v.biases[l].end());
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < fu.size(); ++i) {
    dot += fu[i] * fv[i];
    nu += fu[i] * fu[i];
    nv += fv[i] * fv[i];
  }
  EXPECT_NEAR(cgsv_score(u, v), dot / std::sqrt(nu * nv), 1e-12);
}

TEST(CgsvTest, ShapeMismatch) {
  std::mt19937_64 rng(52);
  auto u = RandomUpdate(rng);
  auto v = u;
  v.weights.pop_back();
  v.biases.pop_back();
  EXPECT_THROW(cgsv_score(u, v), DimensionError);
}

TEST(EmaTest, FirstObservationPassesThrough) {
  ContributionState state(2, 0.9);
  EXPECT_DOUBLE_EQ(state.ema_update(0, 0.7, Signal::kEntropy), 0.7);
  EXPECT_FALSE(state.smoothed(1, Signal::kEntropy).has_value());
}

TEST(EmaTest, MomentumFormula) {
  ContributionState state(1, 0.9);
  state.ema_update(0, 1.0, Signal::kCssv);
  EXPECT_NEAR(state.ema_update(0, 0.0, Signal::kCssv), 0.9, 1e-15);
}

TEST(EmaTest, ZeroMomentumTracksRaw) {
  ContributionState state(1, 0.0);
  for (double raw : {0.3, -1.0, 2.5}) {
    EXPECT_EQ(state.ema_update(0, raw, Signal::kCgsv), raw);
  }
}

TEST(EmaTest, NonFiniteRejected) {
  ContributionState state(1, 0.5);
  state.ema_update(0, 0.4, Signal::kEntropy);
  EXPECT_EQ(state.ema_update(0, NAN, Signal::kEntropy), 0.4);
  EXPECT_EQ(state.ema_update(0, INFINITY, Signal::kEntropy), 0.4);
}

TEST(EmaTest, SignalsAreIndependent) {
  ContributionState state(1, 0.5);
  state.ema_update(0, 1.0, Signal::kEntropy);
  state.ema_update(0, 3.0, Signal::kCssv);
  EXPECT_EQ(*state.smoothed(0, Signal::kEntropy), 1.0);
  EXPECT_EQ(*state.smoothed(0, Signal::kCssv), 3.0);
}

TEST(EmaTest, InvalidMomentum) {
  EXPECT_THROW(ContributionState(2, 1.0), ConfigError);
  EXPECT_THROW(ContributionState(2, -0.1), ConfigError);
}

TEST(NormalizeTest, Examples) {
  EXPECT_EQ(normalize_scores(std::vector<double>{1, 1, 1, 1}),
            (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
  EXPECT_EQ(normalize_scores(std::vector<double>{2, 1, 1}),
            (std::vector<double>{0.5, 0.25, 0.25}));
  const auto w = normalize_scores(std::vector<double>{-0.5, 1.0}, 1e-6);
  EXPECT_DOUBLE_EQ(w[0], 1e-6 / (1.0 + 1e-6));
  EXPECT_DOUBLE_EQ(w[1], 1.0 / (1.0 + 1e-6));
}

TEST(NormalizeTest, AllDegenerateIsUniform) {
  EXPECT_EQ(normalize_scores(std::vector<double>{0, -1, 1e-7}),
            (std::vector<double>(3, 1.0 / 3.0)));
}

TEST(NormalizeTest, SimplexAndScaleInvariance) {
  std::mt19937_64 rng(60);
  std::normal_distribution<double> n(0.5, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> v(6);
    for (double& x : v) x = n(rng);
    const auto w = normalize_scores(v);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-9);
    for (double x : w) EXPECT_GE(x, 0.0);
    // Positive rescaling well above the floor keeps the pattern.
    std::vector<double> big(v);
    for (double& x : big) x *= 7.0;
    const auto wb = normalize_scores(big);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] > 1e-3) EXPECT_NEAR(wb[i], w[i], 1e-5);
    }
  }
}

}  // namespace
}  // namespace specfuse::scoring
