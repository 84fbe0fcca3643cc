// Copyright 2026 The hardneg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HARDNEG_MINING_HPP_
#define HARDNEG_MINING_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hardneg/descriptor.hpp"

namespace hardneg::mining {

using descriptor::DescriptorSet;
using descriptor::RowMatrix;

// Dot product of two equal-length unit vectors.
double Similarity(std::span<const double> a, std::span<const double> b);

// Entry (i, j) = <a_i, b_j>.
RowMatrix SimilarityMatrix(const RowMatrix& a, const RowMatrix& b);
inline RowMatrix SimilarityMatrix(const DescriptorSet& a, const DescriptorSet& b) {
  return SimilarityMatrix(a.rows, b.rows);
}

enum class CropRole { kAnchor, kPositive };

struct DescriptorRecord {
  std::int64_t source_image_id = 0;
  CropRole role = CropRole::kAnchor;
  std::size_t pair_id = 0;
};

// Provenance for every row of a batch descriptor matrix. Row i of the batch
// matrix is described by records[i]; pairing lists (anchor row, positive row).
struct BatchIndex {
  std::vector<DescriptorRecord> records;
  std::vector<std::pair<std::size_t, std::size_t>> pairing;

  // Throws ValidationError unless pairing is a bijection between anchors and
  // positives of the same pair.
  void Validate() const;
  std::size_t distinct_images() const;
};

struct MiningStrategy {
  enum class Kind { kInPair, kInBatchAll, kInBatchRandom, kInBatchTopK, kCoarseToFineTopK };
  Kind kind = Kind::kInBatchTopK;
  std::size_t k = 30;

  static MiningStrategy InPair() { return {Kind::kInPair, 1}; }
  static MiningStrategy InBatchAll() { return {Kind::kInBatchAll, 0}; }
  static MiningStrategy InBatchRandom(std::size_t k) { return {Kind::kInBatchRandom, k}; }
  static MiningStrategy InBatchTopK(std::size_t k) { return {Kind::kInBatchTopK, k}; }
  static MiningStrategy CoarseToFineTopK(std::size_t k) { return {Kind::kCoarseToFineTopK, k}; }

  // "in_pair", "in_batch_all", "in_batch_random", "in_batch_topk",
  // "coarse_to_fine".
  static MiningStrategy Parse(const std::string& name, std::size_t k);
  std::string name() const;
};

struct Negative {
  // Row in the batch matrix, or batch_rows + row in MinedNegatives::extra_rows.
  std::size_t index = 0;
  double similarity = 0.0;

  friend bool operator==(const Negative&, const Negative&) = default;
};

struct AnchorNegatives {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  // Descending similarity, ties by ascending index.
  std::vector<Negative> negatives;

  friend bool operator==(const AnchorNegatives&, const AnchorNegatives&) = default;
};

struct MinedNegatives {
  std::vector<AnchorNegatives> per_anchor;
  std::size_t batch_rows = 0;
  // Descriptors of retrieved pool images; constants during backprop.
  RowMatrix extra_rows;
  // Pool images whose descriptors were added, ascending.
  std::vector<std::int64_t> retrieved_images;

  double MeanSimilarity() const;
};

// In-pair mining over a single pair: for anchor i the negative is
// argmax_{j != pairing[i]} <a_i, p_j>. Indices refer to rows of `positives`.
MinedNegatives MineInPair(const RowMatrix& anchors, const RowMatrix& positives,
                          std::span<const std::size_t> pairing);

// In-pair mining applied to every pair of a batch; indices are batch rows.
MinedNegatives MineInPair(const BatchIndex& batch, const RowMatrix& descs);

// Candidates for an anchor are all batch rows from other source images.
MinedNegatives MineInBatch(const MiningStrategy& strategy, const BatchIndex& batch,
                           const RowMatrix& descs, std::uint64_t seed);

struct GlobalDescriptor {
  Eigen::VectorXd v;
};

enum class Aggregation { kSum, kGeM };

// Sum of unit rows, renormalized. kGeM uses the cubic generalized mean of
// absolute coordinates instead. Throws DegenerateError when the aggregate
// vanishes.
GlobalDescriptor AggregateGlobalDescriptor(const RowMatrix& rows,
                                           Aggregation mode = Aggregation::kSum);
inline GlobalDescriptor AggregateGlobalDescriptor(const DescriptorSet& descs,
                                                  Aggregation mode = Aggregation::kSum) {
  return AggregateGlobalDescriptor(descs.rows, mode);
}

struct NegativePool {
  std::vector<std::int64_t> ids;
  std::vector<GlobalDescriptor> globals;
  std::vector<DescriptorSet> locals;

  std::size_t size() const noexcept { return ids.size(); }
  void Validate() const;
  // Position of `id`, if present.
  std::optional<std::size_t> Find(std::int64_t id) const;
};

// For each query, the `top_r` pool images with the highest global similarity
// excluding the query's own id; ties by lowest image id. Results are
// concatenated query by query.
std::vector<std::int64_t> RetrieveNegativeImages(
    const std::vector<std::pair<std::int64_t, GlobalDescriptor>>& queries,
    const NegativePool& pool, std::size_t top_r = 1);

// Per source image, the aggregate of its anchor-crop descriptors.
std::vector<std::pair<std::int64_t, GlobalDescriptor>> BatchGlobals(
    const BatchIndex& batch, const RowMatrix& descs,
    Aggregation mode = Aggregation::kSum);

// Extends the in-batch candidates with the local descriptors of the pool
// images retrieved for the batch (minus images already in the batch) and
// keeps the top k per anchor.
MinedNegatives MineCoarseToFine(std::size_t k, const BatchIndex& batch,
                                const RowMatrix& descs, const NegativePool& pool,
                                std::size_t top_r = 1,
                                Aggregation mode = Aggregation::kSum);
MinedNegatives MineCoarseToFine(
    std::size_t k, const BatchIndex& batch, const RowMatrix& descs,
    const NegativePool& pool,
    const std::vector<std::pair<std::int64_t, GlobalDescriptor>>& batch_globals,
    std::size_t top_r = 1);

}  // namespace hardneg::mining

#endif  // HARDNEG_MINING_HPP_
