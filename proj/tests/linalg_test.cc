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

#include "specfuse/linalg.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "specfuse/errors.h"

namespace specfuse::linalg {
namespace {

DenseMatrix RandomMatrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = n(rng);
  return m;
}

std::vector<double> RandomVector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

// Eigen's self-adjoint solver, sorted descending.
std::vector<double> OracleEigenvalues(const DenseMatrix& a) {
  Eigen::MatrixXd m(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) m(i, j) = a(i, j);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  std::vector<double> ev(solver.eigenvalues().data(),
                         solver.eigenvalues().data() + a.rows());
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

TEST(GramTest, OrthonormalRowsGiveIdentity) {
  const auto a = gram_class_space(DenseMatrix::FromRows({{1, 0, 0}, {0, 1, 0}}));
  EXPECT_EQ(a, DenseMatrix::Identity(2));
}

TEST(GramTest, ZeroMatrixGivesZero) {
  EXPECT_EQ(gram_class_space(DenseMatrix(2, 3)), DenseMatrix(2, 2));
}

TEST(GramTest, MatchesTripleLoop) {
  std::mt19937_64 rng(7);
  const auto m = RandomMatrix(3, 4, rng);
  const auto a = gram_class_space(m);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += m(i, k) * m(j, k);
      EXPECT_NEAR(a(i, j), s, 1e-12);
    }
  }
}

TEST(GramTest, SignInvariant) {
  std::mt19937_64 rng(8);
  auto m = RandomMatrix(4, 6, rng);
  const auto a = gram_class_space(m);
  for (double& v : m.data()) v = -v;
  EXPECT_EQ(gram_class_space(m), a);
}

TEST(GramTest, EmptyIsDimensionError) {
  EXPECT_THROW(gram_class_space(DenseMatrix()), DimensionError);
}

TEST(EigenTest, IdentityAndDiagonal) {
  EXPECT_EQ(sym_eigenvalues(DenseMatrix::Identity(3)).eigenvalues,
            (std::vector<double>{1, 1, 1}));
  EXPECT_EQ(sym_eigenvalues(DenseMatrix::FromRows({{1, 0}, {0, 3}})).eigenvalues,
            (std::vector<double>{3, 1}));
}

TEST(EigenTest, MatchesIndependentSolver) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto b = RandomMatrix(5, 5, rng);
    DenseMatrix a(5, 5);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) a(i, j) = b(i, j) + b(j, i);
    }
    const auto got = sym_eigenvalues(a).eigenvalues;
    const auto want = OracleEigenvalues(a);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-8);
  }
}

TEST(EigenTest, PsdSpectrumNonNegativeAndSumsToTrace) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = gram_class_space(RandomMatrix(6, 3, rng));  // rank 3
    const auto ev = psd_eigenvalues(a).eigenvalues;
    double sum = 0.0;
    for (double v : ev) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, a.Trace(), 1e-8 * a.Trace());
    EXPECT_TRUE(std::is_sorted(ev.begin(), ev.end(), std::greater<>()));
  }
}

TEST(EigenTest, AsymmetricInputRejected) {
  EXPECT_THROW(sym_eigenvalues(DenseMatrix::FromRows({{1, 2}, {0, 1}})),
               ContractError);
}

TEST(EigenTest, NegativeDefiniteRejectedAsPsd) {
  EXPECT_THROW(psd_eigenvalues(DenseMatrix::FromRows({{-1, 0}, {0, 1}})),
               ContractError);
}

TEST(CosineTest, Basics) {
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 1.0);
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 1}, std::vector<double>{1, -1}), 0.0);
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 0.0);
  EXPECT_THROW(cosine(std::vector<double>{1}, std::vector<double>{1, 2}),
               DimensionError);
}

TEST(CosineTest, ScaleProperty) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto u = RandomVector(7, rng);
    for (double c : {0.01, 2.5, 300.0}) {
      std::vector<double> pos(u), neg(u);
      for (auto& v : pos) v *= c;
      for (auto& v : neg) v *= -c;
      EXPECT_NEAR(cosine(u, pos), 1.0, 1e-12);
      EXPECT_NEAR(cosine(u, neg), -1.0, 1e-12);
    }
  }
}

TEST(CorrelationTest, PearsonExamples) {
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0, 1e-15);
  EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(pearson(std::vector<double>{5, 5, 5}, std::vector<double>{1, 9, 2}), 0.0);
  EXPECT_EQ(pearson(std::vector<double>(5, 0.2), std::vector<double>{1, 9, 2, 3, 4}), 0.0);
  EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}),
               InsufficientDataError);
}

TEST(CorrelationTest, SpearmanExamples) {
  const std::vector<double> a{0.1, 0.5, 0.9};
  EXPECT_NEAR(spearman(a, std::vector<double>{1, 2, 3}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), 0.0);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}),
               InsufficientDataError);
}

TEST(CorrelationTest, TiedRanksShareMean) {
  EXPECT_EQ(fractional_ranks(std::vector<double>{3, 1, 3, 2}),
            (std::vector<double>{3.5, 1, 3.5, 2}));
}

TEST(CorrelationTest, AffineInvariance) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto a = RandomVector(9, rng);
    const auto b = RandomVector(9, rng);
    std::vector<double> a2(a);
    for (auto& v : a2) v = 3.7 * v - 11.0;
    EXPECT_NEAR(pearson(a, b), pearson(a2, b), 1e-12);
    EXPECT_NEAR(spearman(a, b), spearman(a2, b), 1e-12);
    EXPECT_NEAR(spearman(a, b),
                spearman(fractional_ranks(a), fractional_ranks(b)), 1e-12);
  }
}

TEST(RobustTest, MedianMadExamples) {
  EXPECT_EQ(median_mad(std::vector<double>{1, 2, 3, 4, 100}),
            (std::pair<double, double>{3, 1}));
  EXPECT_EQ(median_mad(std::vector<double>{5}), (std::pair<double, double>{5, 0}));
  EXPECT_DOUBLE_EQ(median(std::vector<double>{4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median_mad(std::vector<double>{}), InsufficientDataError);
}

TEST(RobustTest, MatchesSortOracle) {
  std::mt19937_64 rng(5);
  const auto x = RandomVector(9, rng);
  std::vector<double> s(x);
  std::sort(s.begin(), s.end());
  const double med = s[4];
  std::vector<double> dev;
  for (double v : x) dev.push_back(std::abs(v - med));
  std::sort(dev.begin(), dev.end());
  const auto [m, mad] = median_mad(x);
  EXPECT_EQ(m, med);
  EXPECT_EQ(mad, dev[4]);
}

}  // namespace
}  // namespace specfuse::linalg
