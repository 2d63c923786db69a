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

#ifndef SPECFUSE_LINALG_H_
#define SPECFUSE_LINALG_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace specfuse::linalg {

// Dense real matrix stored row-major.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  // Takes ownership of row-major `data`; throws DimensionError when the
  // length is not rows * cols.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Builds from nested rows; all rows must have equal length.
  static DenseMatrix FromRows(
      const std::vector<std::vector<double>>& rows);
  static DenseMatrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  DenseMatrix Transposed() const;
  double FrobeniusNorm() const;
  double Trace() const;
  bool AllFinite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Eigenvalues sorted in descending order.
struct Spectrum {
  std::vector<double> eigenvalues;
};

// Negative eigenvalues of a PSD matrix above -kPsdTolerance are round-off
// and get clamped to zero.
inline constexpr double kPsdTolerance = 1e-10;
// Norms below this are treated as zero by cosine().
inline constexpr double kZeroNorm = 1e-12;

// A = M Mᵀ (C×C) for an update matrix M (C×d).
DenseMatrix gram_class_space(const DenseMatrix& m);

// Gram matrix on the smaller side: M Mᵀ when rows <= cols, else Mᵀ M.
// Both share the same non-zero spectrum.
DenseMatrix gram_compact(const DenseMatrix& m);

// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations.
// Throws ContractError when relative asymmetry exceeds 1e-9.
Spectrum sym_eigenvalues(const DenseMatrix& a);

// As sym_eigenvalues, additionally enforcing positive semi-definiteness:
// values in (-kPsdTolerance, 0) clamp to 0, anything lower is an error.
Spectrum psd_eigenvalues(const DenseMatrix& a);

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> u);

// Cosine similarity; 0 when either norm is below kZeroNorm.
double cosine(std::span<const double> u, std::span<const double> v);

// Sample Pearson correlation; 0 when either input is constant.
double pearson(std::span<const double> a, std::span<const double> b);

// Average (fractional) ranks, 1-based; ties share the mean rank.
std::vector<double> fractional_ranks(std::span<const double> x);

// Pearson correlation of fractional ranks.
double spearman(std::span<const double> a, std::span<const double> b);

// Median (midpoint of the two central values for even n) and median
// absolute deviation from it.
std::pair<double, double> median_mad(std::span<const double> x);

double median(std::span<const double> x);

}  // namespace specfuse::linalg

#endif  // SPECFUSE_LINALG_H_
