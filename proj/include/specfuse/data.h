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

#ifndef SPECFUSE_DATA_H_
#define SPECFUSE_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "specfuse/linalg.h"

namespace specfuse::data {

// Labelled samples. `sample_ids` identify each row in the dataset it was
// drawn from, so shards can be checked for overlap and duplication.
struct Dataset {
  linalg::DenseMatrix features;  // n_samples x n_features
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::size_t> sample_ids;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t num_features() const { return features.cols(); }

  // Per-class sample counts, length num_classes.
  std::vector<std::size_t> ClassCounts() const;
  // Rows at `indices` (in that order), keeping their sample ids.
  Dataset Subset(std::span<const std::size_t> indices) const;
  // Throws DimensionError / ContractError on broken invariants.
  void Validate() const;
};

enum class PartitionKind {
  kIid,
  kOnlyLabelSkew,
  kStepQuantity,
  kStepLabelSkew,
  kDirichlet,
};

std::string PartitionKindName(PartitionKind kind);
// Inverse of PartitionKindName; throws ConfigError on unknown names.
PartitionKind ParsePartitionKind(const std::string& name);

struct PartitionSpec {
  PartitionKind kind = PartitionKind::kIid;
  double alpha = 0.5;  // Dirichlet concentration, used only by kDirichlet.
  int n_clients = 5;
  std::uint64_t seed = 0;

  void Validate() const;
  friend bool operator==(const PartitionSpec&, const PartitionSpec&) = default;
};

// Isotropic unit-variance Gaussian blobs, `per_class` samples per class,
// centred at separation * u_c with u_c unit vectors (orthonormal when
// d >= C).
Dataset generate_blobs(int num_classes, int num_features, int per_class,
                       double separation, std::uint64_t seed);

// Parses an IDX image/label file pair (MNIST layout). Pixels are scaled to
// [0, 1]. Labels must be below `num_classes` when it is positive;
// otherwise the class count is max(label) + 1.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path,
                 int num_classes = 0);

// Number of classes client i (0-based) may draw from under the label-skew
// regimes: max(1, round(C * (i + 1) / n)).
int label_prefix_size(int client, int n_clients, int num_classes);

// Splits `ds` into spec.n_clients disjoint shards.
std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec);

// Shards of exactly `shard_size` samples where client i draws, balanced,
// from the first label_counts[i] classes.
std::vector<Dataset> partition_label_counts(const Dataset& ds,
                                            std::span<const int> label_counts,
                                            std::size_t shard_size,
                                            std::uint64_t seed);

// Stratified split; each class contributes round(count * test_fraction)
// samples to the test side.
std::pair<Dataset, Dataset> holdout_split(const Dataset& ds,
                                          double test_fraction,
                                          std::uint64_t seed);

}  // namespace specfuse::data

#endif  // SPECFUSE_DATA_H_
