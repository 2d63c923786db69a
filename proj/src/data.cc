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

#include "specfuse/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>

#include "specfuse/errors.h"
#include "specfuse/rng.h"

namespace specfuse::data {

using linalg::DenseMatrix;

namespace {

// counts[client][class]
using CountTable = std::vector<std::vector<std::size_t>>;

std::vector<std::vector<std::size_t>> IndicesByClass(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[ds.labels[i]].push_back(i);
  }
  return by_class;
}

// First class whose demand exceeds availability, or -1.
int FirstExhaustedClass(const CountTable& counts,
                        const std::vector<std::size_t>& available) {
  for (std::size_t c = 0; c < available.size(); ++c) {
    std::size_t demand = 0;
    for (const auto& row : counts) demand += row[c];
    if (demand > available[c]) return static_cast<int>(c);
  }
  return -1;
}

// Largest scale in [1, max_scale] whose count table fits the per-class
// availability. Demand is monotone in scale, so bisection suffices.
std::size_t MaxFeasibleScale(
    const std::function<CountTable(std::size_t)>& table_for,
    std::size_t max_scale, const std::vector<std::size_t>& available,
    const std::string& regime) {
  if (max_scale == 0) {
    throw PartitionError(regime + ": dataset too small for the client count");
  }
  const int blocker = FirstExhaustedClass(table_for(1), available);
  if (blocker >= 0) {
    throw PartitionError(regime + ": class " + std::to_string(blocker) +
                         " is exhausted");
  }
  std::size_t lo = 1, hi = max_scale;
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (FirstExhaustedClass(table_for(mid), available) < 0) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return lo;
}

// Spreads `total` samples over the first `num_classes` classes, remainder to
// the lowest class indices.
std::vector<std::size_t> BalancedRow(std::size_t total, int num_classes,
                                     int width) {
  std::vector<std::size_t> row(width, 0);
  const std::size_t k = static_cast<std::size_t>(num_classes);
  for (std::size_t c = 0; c < k; ++c) {
    row[c] = total / k + (c < total % k ? 1 : 0);
  }
  return row;
}

std::vector<Dataset> AssignByCounts(const Dataset& ds, const CountTable& counts,
                                    Rng& rng) {
  auto by_class = IndicesByClass(ds);
  for (auto& idx : by_class) std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> cursor(ds.num_classes, 0);
  std::vector<Dataset> shards;
  shards.reserve(counts.size());
  for (const auto& row : counts) {
    std::vector<std::size_t> picked;
    for (int c = 0; c < ds.num_classes; ++c) {
      for (std::size_t k = 0; k < row[c]; ++k) {
        picked.push_back(by_class[c][cursor[c]++]);
      }
    }
    shards.push_back(ds.Subset(picked));
  }
  return shards;
}

std::vector<std::size_t> ClassAvailability(const Dataset& ds) {
  return ds.ClassCounts();
}

std::vector<Dataset> PartitionIid(const Dataset& ds, int n, Rng& rng) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t base = ds.size() / n;
  const std::size_t extra = ds.size() % n;
  std::vector<Dataset> shards;
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t len = base + (static_cast<std::size_t>(i) < extra ? 1 : 0);
    shards.push_back(ds.Subset(std::span(order).subspan(pos, len)));
    pos += len;
  }
  return shards;
}

std::vector<Dataset> PartitionDirichlet(const Dataset& ds, int n, double alpha,
                                        Rng& rng) {
  auto by_class = IndicesByClass(ds);
  std::vector<std::vector<std::size_t>> assigned(n);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::uniform_int_distribution<int> pick(0, n - 1);

  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> share(n);
    for (double& s : share) s = gamma(rng);
    const double total = std::accumulate(share.begin(), share.end(), 0.0);
    if (!(total > 0.0)) {
      // All draws underflowed; the class goes to one client.
      std::fill(share.begin(), share.end(), 0.0);
      share[pick(rng)] = 1.0;
    } else {
      for (double& s : share) s /= total;
    }
    // Largest-remainder rounding; ties go to the lower client index.
    const std::size_t m = idx.size();
    std::vector<std::size_t> count(n);
    std::vector<std::pair<double, int>> remainder(n);
    std::size_t used = 0;
    for (int i = 0; i < n; ++i) {
      const double exact = share[i] * static_cast<double>(m);
      count[i] = static_cast<std::size_t>(std::floor(exact));
      remainder[i] = {exact - std::floor(exact), i};
      used += count[i];
    }
    std::stable_sort(remainder.begin(), remainder.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < m; ++k, ++used) {
      ++count[remainder[k % n].second];
    }
    std::size_t pos = 0;
    for (int i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < count[i]; ++k) {
        assigned[i].push_back(idx[pos++]);
      }
    }
  }

  // Every client needs at least one sample to train.
  for (int i = 0; i < n; ++i) {
    if (!assigned[i].empty()) continue;
    auto largest = std::max_element(
        assigned.begin(), assigned.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (largest->size() < 2) {
      throw PartitionError("dirichlet: not enough samples for every client");
    }
    assigned[i].push_back(largest->back());
    largest->pop_back();
  }

  std::vector<Dataset> shards;
  shards.reserve(n);
  for (const auto& idx : assigned) shards.push_back(ds.Subset(idx));
  return shards;
}

std::uint32_t ReadBigEndian32(const std::vector<unsigned char>& buf,
                              std::size_t offset, const std::string& what) {
  if (offset + 4 > buf.size()) throw FormatError(what + ": truncated header");
  return (static_cast<std::uint32_t>(buf[offset]) << 24) |
         (static_cast<std::uint32_t>(buf[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(buf[offset + 2]) << 8) |
         static_cast<std::uint32_t>(buf[offset + 3]);
}

std::vector<unsigned char> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::vector<std::size_t> Dataset::ClassCounts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int l : labels) ++counts[l];
  return counts;
}

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  const std::size_t d = features.cols();
  std::vector<double> rows;
  rows.reserve(indices.size() * d);
  out.labels.reserve(indices.size());
  out.sample_ids.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw DimensionError("Subset: index out of range");
    const auto r = features.row(i);
    rows.insert(rows.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
    out.sample_ids.push_back(sample_ids.empty() ? i : sample_ids[i]);
  }
  out.features = DenseMatrix(indices.size(), d, std::move(rows));
  return out;
}

void Dataset::Validate() const {
  if (features.rows() != labels.size()) {
    throw DimensionError("Dataset: feature rows != label count");
  }
  if (!sample_ids.empty() && sample_ids.size() != labels.size()) {
    throw DimensionError("Dataset: sample id count != label count");
  }
  for (int l : labels) {
    if (l < 0 || l >= num_classes) {
      throw ContractError("Dataset: label " + std::to_string(l) +
                          " outside [0, " + std::to_string(num_classes) + ")");
    }
  }
}

std::string PartitionKindName(PartitionKind kind) {
  switch (kind) {
    case PartitionKind::kIid: return "iid";
    case PartitionKind::kOnlyLabelSkew: return "only_label_skew";
    case PartitionKind::kStepQuantity: return "step_quantity";
    case PartitionKind::kStepLabelSkew: return "step_label_skew";
    case PartitionKind::kDirichlet: return "dirichlet";
  }
  return "unknown";
}

PartitionKind ParsePartitionKind(const std::string& name) {
  for (auto kind : {PartitionKind::kIid, PartitionKind::kOnlyLabelSkew,
                    PartitionKind::kStepQuantity, PartitionKind::kStepLabelSkew,
                    PartitionKind::kDirichlet}) {
    if (PartitionKindName(kind) == name) return kind;
  }
  throw ConfigError("partition.kind", "unknown partition kind '" + name + "'");
}

void PartitionSpec::Validate() const {
  if (n_clients < 2) {
    throw ConfigError("clients", "need at least 2 clients");
  }
  if (kind == PartitionKind::kDirichlet && !(alpha > 0.0)) {
    throw ConfigError("partition.alpha", "dirichlet alpha must be positive");
  }
}

Dataset generate_blobs(int num_classes, int num_features, int per_class,
                       double separation, std::uint64_t seed) {
  if (num_classes < 2 || num_features < 2 || per_class < 1 ||
      !(separation > 0.0)) {
    throw DimensionError("generate_blobs: need C >= 2, d >= 2, "
                         "per_class >= 1 and separation > 0");
  }
  Rng rng = MakeStream(seed, StreamTag::kData);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t d = num_features;

  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(d));
  for (auto& u : centers) {
    for (double& v : u) v = normal(rng);
  }
  // Gram-Schmidt when an orthonormal frame exists, plain normalisation
  // otherwise.
  const bool orthogonalize = num_features >= num_classes;
  for (int c = 0; c < num_classes; ++c) {
    auto& u = centers[c];
    if (orthogonalize) {
      for (int k = 0; k < c; ++k) {
        const double proj = linalg::dot(u, centers[k]);
        for (std::size_t j = 0; j < d; ++j) u[j] -= proj * centers[k][j];
      }
    }
    const double n = linalg::norm(u);
    for (double& v : u) v /= n;
  }

  Dataset ds;
  ds.num_classes = num_classes;
  const std::size_t total = static_cast<std::size_t>(num_classes) * per_class;
  std::vector<double> x;
  x.reserve(total * d);
  for (int c = 0; c < num_classes; ++c) {
    for (int k = 0; k < per_class; ++k) {
      for (std::size_t j = 0; j < d; ++j) {
        x.push_back(separation * centers[c][j] + normal(rng));
      }
      ds.labels.push_back(c);
    }
  }
  ds.features = DenseMatrix(total, d, std::move(x));
  ds.sample_ids.resize(total);
  std::iota(ds.sample_ids.begin(), ds.sample_ids.end(), 0);
  return ds;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path, int num_classes) {
  const auto images = ReadFile(images_path);
  const auto labels = ReadFile(labels_path);

  if (ReadBigEndian32(images, 0, "images") != 0x00000803u) {
    throw FormatError("images: bad magic number");
  }
  if (ReadBigEndian32(labels, 0, "labels") != 0x00000801u) {
    throw FormatError("labels: bad magic number");
  }
  const std::size_t n = ReadBigEndian32(images, 4, "images");
  const std::size_t rows = ReadBigEndian32(images, 8, "images");
  const std::size_t cols = ReadBigEndian32(images, 12, "images");
  const std::size_t n_labels = ReadBigEndian32(labels, 4, "labels");
  if (n != n_labels) {
    throw FormatError("image count " + std::to_string(n) +
                      " does not match label count " +
                      std::to_string(n_labels));
  }
  const std::size_t pixels = rows * cols;
  if (images.size() < 16 + n * pixels) throw FormatError("images: truncated");
  if (labels.size() < 8 + n) throw FormatError("labels: truncated");

  Dataset ds;
  std::vector<double> x(n * pixels);
  for (std::size_t i = 0; i < n * pixels; ++i) {
    x[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  ds.features = DenseMatrix(n, pixels, std::move(x));
  int max_label = 0;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = labels[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  ds.sample_ids.resize(n);
  std::iota(ds.sample_ids.begin(), ds.sample_ids.end(), 0);
  ds.Validate();
  return ds;
}

int label_prefix_size(int client, int n_clients, int num_classes) {
  const double exact = static_cast<double>(num_classes) * (client + 1) /
                       static_cast<double>(n_clients);
  return std::clamp(static_cast<int>(std::lround(exact)), 1, num_classes);
}

std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec) {
  spec.Validate();
  ds.Validate();
  const int n = spec.n_clients;
  const int num_classes = ds.num_classes;
  Rng rng = MakeStream(spec.seed, StreamTag::kPartition,
                       {static_cast<std::uint64_t>(spec.kind)});
  const auto available = ClassAvailability(ds);
  const std::string name = PartitionKindName(spec.kind);

  std::vector<int> prefix(n);
  for (int i = 0; i < n; ++i) prefix[i] = label_prefix_size(i, n, num_classes);

  switch (spec.kind) {
    case PartitionKind::kIid:
      if (ds.size() < static_cast<std::size_t>(n)) {
        throw PartitionError("iid: fewer samples than clients");
      }
      return PartitionIid(ds, n, rng);

    case PartitionKind::kOnlyLabelSkew: {
      auto table = [&](std::size_t shard) {
        CountTable t;
        for (int i = 0; i < n; ++i) {
          t.push_back(BalancedRow(shard, prefix[i], num_classes));
        }
        return t;
      };
      const std::size_t shard =
          MaxFeasibleScale(table, ds.size() / n, available, name);
      return AssignByCounts(ds, table(shard), rng);
    }

    case PartitionKind::kStepQuantity: {
      auto table = [&](std::size_t unit) {
        CountTable t;
        for (int i = 0; i < n; ++i) {
          t.push_back(BalancedRow(unit * (i + 1), num_classes, num_classes));
        }
        return t;
      };
      const std::size_t steps = static_cast<std::size_t>(n) * (n + 1) / 2;
      const std::size_t unit =
          MaxFeasibleScale(table, ds.size() / steps, available, name);
      return AssignByCounts(ds, table(unit), rng);
    }

    case PartitionKind::kStepLabelSkew: {
      auto table = [&](std::size_t per_class) {
        CountTable t;
        for (int i = 0; i < n; ++i) {
          t.push_back(BalancedRow(per_class * prefix[i], prefix[i], num_classes));
        }
        return t;
      };
      const std::size_t label_total =
          std::accumulate(prefix.begin(), prefix.end(), std::size_t{0});
      const std::size_t per_class =
          MaxFeasibleScale(table, ds.size() / label_total, available, name);
      return AssignByCounts(ds, table(per_class), rng);
    }

    case PartitionKind::kDirichlet:
      return PartitionDirichlet(ds, n, spec.alpha, rng);
  }
  throw PartitionError("unknown partition kind");
}

std::vector<Dataset> partition_label_counts(const Dataset& ds,
                                            std::span<const int> label_counts,
                                            std::size_t shard_size,
                                            std::uint64_t seed) {
  ds.Validate();
  if (label_counts.size() < 2) {
    throw PartitionError("label counts: need at least 2 clients");
  }
  if (shard_size == 0) throw PartitionError("label counts: empty shards");
  CountTable table;
  for (int l : label_counts) {
    if (l < 1 || l > ds.num_classes) {
      throw PartitionError("label counts: " + std::to_string(l) +
                           " outside [1, C]");
    }
    table.push_back(BalancedRow(shard_size, l, ds.num_classes));
  }
  const int blocker = FirstExhaustedClass(table, ClassAvailability(ds));
  if (blocker >= 0) {
    throw PartitionError("label counts: class " + std::to_string(blocker) +
                         " is exhausted");
  }
  Rng rng = MakeStream(seed, StreamTag::kPartition, {0xabcdULL});
  return AssignByCounts(ds, table, rng);
}

std::pair<Dataset, Dataset> holdout_split(const Dataset& ds,
                                          double test_fraction,
                                          std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ContractError("holdout_split: test_fraction must lie in (0, 1)");
  }
  ds.Validate();
  Rng rng = MakeStream(seed, StreamTag::kHoldout);
  auto by_class = IndicesByClass(ds);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& idx : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::lround(static_cast<double>(idx.size()) * test_fraction));
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + n_test);
    train_idx.insert(train_idx.end(), idx.begin() + n_test, idx.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.Subset(train_idx), ds.Subset(test_idx)};
}

}  // namespace specfuse::data
