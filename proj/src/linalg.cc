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
#include <numeric>
#include <string>

#include "specfuse/errors.h"

namespace specfuse::linalg {

namespace {

constexpr int kMaxJacobiSweeps = 100;
constexpr double kJacobiTolerance = 1e-12;
constexpr double kAsymmetryTolerance = 1e-9;

void RequireSameLength(std::span<const double> a, std::span<const double> b,
                       const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": length mismatch (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

bool IsConstant(std::span<const double> x) {
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return *lo == *hi;
}

double OffDiagonalNorm(const DenseMatrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (i != j) sum += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(sum);
}

double DiagonalNorm(const DenseMatrix& a) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) sum += a(i, i) * a(i, i);
  return std::sqrt(sum);
}

// Applies the rotation that annihilates a(p, q).
void Rotate(DenseMatrix& a, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) /
        (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: data length " +
                         std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

DenseMatrix DenseMatrix::FromRows(
    const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw DimensionError("FromRows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), cols, std::move(data));
}

DenseMatrix DenseMatrix::Identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::Transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

double DenseMatrix::FrobeniusNorm() const { return norm(data_); }

double DenseMatrix::Trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

bool DenseMatrix::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

DenseMatrix gram_class_space(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw DimensionError("gram_class_space: empty matrix");
  }
  const std::size_t n = m.rows();
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = dot(m.row(i), m.row(j));
      a(i, j) = v;
      a(j, i) = v;
    }
  }
  return a;
}

DenseMatrix gram_compact(const DenseMatrix& m) {
  if (m.rows() <= m.cols()) return gram_class_space(m);
  return gram_class_space(m.Transposed());
}

Spectrum sym_eigenvalues(const DenseMatrix& input) {
  if (input.rows() != input.cols()) {
    throw DimensionError("sym_eigenvalues: matrix is not square");
  }
  const std::size_t n = input.rows();
  if (n == 0) return {};

  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = input(i, j) - input(j, i);
      asym += 2.0 * d * d;
    }
  }
  if (std::sqrt(asym) > kAsymmetryTolerance * input.FrobeniusNorm()) {
    throw ContractError("sym_eigenvalues: input is not symmetric");
  }

  DenseMatrix a = input;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  }

  for (int sweep = 0; sweep < kMaxJacobiSweeps; ++sweep) {
    if (OffDiagonalNorm(a) <= kJacobiTolerance * DiagonalNorm(a)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) Rotate(a, p, q);
    }
  }

  Spectrum s;
  s.eigenvalues.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.eigenvalues[i] = a(i, i);
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
  return s;
}

Spectrum psd_eigenvalues(const DenseMatrix& a) {
  Spectrum s = sym_eigenvalues(a);
  // Round-off scales with the matrix magnitude.
  const double scale = std::max(1.0, s.eigenvalues.empty()
                                         ? 0.0
                                         : std::abs(s.eigenvalues.front()));
  for (double& v : s.eigenvalues) {
    if (v < 0.0) {
      if (v > -kPsdTolerance * scale) {
        v = 0.0;
      } else {
        throw ContractError("psd_eigenvalues: eigenvalue " +
                            std::to_string(v) + " below tolerance");
      }
    }
  }
  return s;
}

double dot(std::span<const double> u, std::span<const double> v) {
  RequireSameLength(u, v, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

double cosine(std::span<const double> u, std::span<const double> v) {
  RequireSameLength(u, v, "cosine");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu < kZeroNorm || nv < kZeroNorm) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

double pearson(std::span<const double> a, std::span<const double> b) {
  RequireSameLength(a, b, "pearson");
  if (a.size() < 2) {
    throw InsufficientDataError("pearson: need at least 2 samples");
  }
  if (IsConstant(a) || IsConstant(b)) return 0.0;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> fractional_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    // Positions i..j (0-based) share ranks i+1..j+1.
    const double mean_rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  RequireSameLength(a, b, "spearman");
  if (a.size() < 2) {
    throw InsufficientDataError("spearman: need at least 2 samples");
  }
  const std::vector<double> ra = fractional_ranks(a);
  const std::vector<double> rb = fractional_ranks(b);
  return pearson(ra, rb);
}

double median(std::span<const double> x) {
  if (x.empty()) throw InsufficientDataError("median: empty input");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2];
  return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

std::pair<double, double> median_mad(std::span<const double> x) {
  const double med = median(x);
  std::vector<double> dev(x.size());
  std::transform(x.begin(), x.end(), dev.begin(),
                 [med](double v) { return std::abs(v - med); });
  return {med, median(dev)};
}

}  // namespace specfuse::linalg
