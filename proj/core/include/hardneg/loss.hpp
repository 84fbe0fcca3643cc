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

#ifndef HARDNEG_LOSS_HPP_
#define HARDNEG_LOSS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "hardneg/descriptor.hpp"
#include "hardneg/mining.hpp"

namespace hardneg::loss {

using descriptor::RowMatrix;

// One anchor's positive similarity and its mined negatives, negatives kept in
// descending order.
struct RankedList {
  double s_pos = 0.0;
  std::vector<double> s_negs;
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::vector<std::size_t> neg_indices;

  // Sorts negatives (and their indices, if given) by descending similarity.
  static RankedList Make(double s_pos, std::vector<double> s_negs,
                         std::size_t anchor = 0, std::size_t positive = 0,
                         std::vector<std::size_t> neg_indices = {});
};

struct APConfig {
  int num_bins = 25;
};

struct APResult {
  double ap = 0.0;
  double d_pos = 0.0;
  std::vector<double> d_negs;
};

// Quantized AP with triangular soft assignment to num_bins centers spanning
// [1, -1] (highest first):
//   AP' = sum_m [C_m > 0] * (C+_m / C_m) * h+_m
// where h+ / h- are the soft histograms of the positive and negatives and C+,
// C their prefix sums. Gradients are exact; at kernel kinks the right-sided
// slope is used at the center and zero at the support edge. Throws
// ValidationError for an empty negative list.
APResult SoftBinnedAP(const RankedList& list, const APConfig& cfg = {});

// 1 / rank of the single positive; ties count against the positive.
double ExactAP(const RankedList& list);

struct LossOutput {
  double value = 0.0;
  double d_s_pos = 0.0;
  std::vector<double> d_s_negs;
};

struct BatchLoss {
  double value = 0.0;
  // Gradients of the batch loss with respect to each list's entries.
  std::vector<LossOutput> per_list;
};

// mean_i (1 - AP'_i).
BatchLoss APLossBatch(std::span<const RankedList> lists, const APConfig& cfg = {});

struct TripletConfig {
  double margin = 0.4;
};

// max(0, margin - s_pos + s_neg); the hinge point counts as inactive.
LossOutput TripletLoss(double s_pos, double s_neg_hardest, const TripletConfig& cfg = {});

// Mean triplet loss using each list's first (hardest) negative.
BatchLoss TripletLossBatch(std::span<const RankedList> lists, const TripletConfig& cfg = {});

// Ranked lists from mined negatives with similarities recomputed from
// `descs` (and, past descs.rows(), from mined.extra_rows).
std::vector<RankedList> BuildRankedLists(const mining::MinedNegatives& mined,
                                         const RowMatrix& descs);

struct SimilarityGrad {
  std::size_t a = 0;
  std::size_t b = 0;
  double g = 0.0;
};

// Flattens per-list gradients into (anchor, other, dL/ds) triples.
std::vector<SimilarityGrad> CollectSimilarityGrads(std::span<const RankedList> lists,
                                                   const BatchLoss& loss);

// Chain rule through s(a, b) = <a, b>: accumulates g * b into row a and
// g * a into row b. Indices >= rows.rows() address `constant_rows`, which
// receive no gradient.
RowMatrix BackpropSimilarities(std::span<const SimilarityGrad> grads, const RowMatrix& rows,
                               const RowMatrix& constant_rows = {});

}  // namespace hardneg::loss

#endif  // HARDNEG_LOSS_HPP_
