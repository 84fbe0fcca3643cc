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

#ifndef HARDNEG_TESTS_ORACLES_HPP_
#define HARDNEG_TESTS_ORACLES_HPP_

// Brute-force reference implementations used to check the mining, loss and
// evaluation code paths. They favour obviousness over speed: full sorts,
// explicit candidate sets, no shared helpers with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "hardneg/mining.hpp"
#include "hardneg/rng.hpp"
#include "test_util.hpp"

namespace hardneg::oracle {

using descriptor::RowMatrix;
using mining::AnchorNegatives;
using mining::BatchIndex;
using mining::Negative;

inline double Dot(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  double s = 0.0;
  for (Eigen::Index c = 0; c < a.cols(); ++c) s += a(i, c) * b(j, c);
  return s;
}

inline void FullSort(std::vector<Negative>& v) {
  std::sort(v.begin(), v.end(), [](const Negative& x, const Negative& y) {
    if (x.similarity != y.similarity) return x.similarity > y.similarity;
    return x.index < y.index;
  });
}

struct RandomBatch {
  BatchIndex index;
  RowMatrix descs;
};

// `pairs` pairs with 2..max_kps correspondences each, one distinct source
// image per pair. A few rows are copied across images to create exact ties.
inline RandomBatch MakeRandomBatch(int pairs, int max_kps, int dim, CounterRng& rng,
                                   std::int64_t id_base = 0) {
  RandomBatch b;
  std::vector<int> counts;
  int total = 0;
  for (int i = 0; i < pairs; ++i) {
    counts.push_back(2 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(max_kps - 1))));
    total += 2 * counts.back();
  }
  b.descs = testing::RandomUnitRows(total, dim, rng);
  std::size_t row = 0;
  for (int i = 0; i < pairs; ++i) {
    const std::int64_t id = id_base + 7 * i + 1;
    const std::size_t n = static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < n; ++k) {
      b.index.records.push_back({id, mining::CropRole::kAnchor, static_cast<std::size_t>(i)});
    }
    for (std::size_t k = 0; k < n; ++k) {
      b.index.records.push_back({id, mining::CropRole::kPositive, static_cast<std::size_t>(i)});
    }
    for (std::size_t k = 0; k < n; ++k) b.index.pairing.emplace_back(row + k, row + n + k);
    row += 2 * n;
  }
  for (int t = 0; t < total / 10; ++t) {
    const auto src = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(total)));
    const auto dst = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(total)));
    b.descs.row(dst) = b.descs.row(src);
  }
  return b;
}

inline std::vector<AnchorNegatives> InPair(const BatchIndex& batch, const RowMatrix& descs) {
  std::vector<AnchorNegatives> out;
  for (const auto& [a, p] : batch.pairing) {
    const std::size_t pair = batch.records[a].pair_id;
    std::vector<Negative> cands;
    for (std::size_t r = 0; r < batch.records.size(); ++r) {
      const auto& rec = batch.records[r];
      if (rec.pair_id != pair || rec.role != mining::CropRole::kPositive || r == p) continue;
      cands.push_back({r, Dot(descs, static_cast<Eigen::Index>(a), descs,
                              static_cast<Eigen::Index>(r))});
    }
    FullSort(cands);
    cands.resize(1);
    out.push_back({a, p, cands});
  }
  return out;
}

inline std::vector<Negative> AllCandidates(const BatchIndex& batch, const RowMatrix& descs,
                                           std::size_t a) {
  std::vector<Negative> cands;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    if (batch.records[r].source_image_id == batch.records[a].source_image_id) continue;
    cands.push_back({r, Dot(descs, static_cast<Eigen::Index>(a), descs,
                            static_cast<Eigen::Index>(r))});
  }
  return cands;
}

inline std::vector<AnchorNegatives> InBatchAll(const BatchIndex& batch, const RowMatrix& descs) {
  std::vector<AnchorNegatives> out;
  for (const auto& [a, p] : batch.pairing) {
    auto cands = AllCandidates(batch, descs, a);
    FullSort(cands);
    out.push_back({a, p, cands});
  }
  return out;
}

inline std::vector<AnchorNegatives> InBatchTopK(const BatchIndex& batch, const RowMatrix& descs,
                                                std::size_t k) {
  auto out = InBatchAll(batch, descs);
  for (auto& a : out) {
    if (a.negatives.size() > k) a.negatives.resize(k);
  }
  return out;
}

// Random(k): per anchor, a seeded sample without replacement from the
// index-ordered candidates (stream = anchor row), then sorted by hardness.
inline std::vector<AnchorNegatives> InBatchRandom(const BatchIndex& batch,
                                                  const RowMatrix& descs, std::size_t k,
                                                  std::uint64_t seed) {
  std::vector<AnchorNegatives> out;
  for (const auto& [a, p] : batch.pairing) {
    auto cands = AllCandidates(batch, descs, a);
    CounterRng rng(seed ^ 0x3D, a);
    const std::size_t take = std::min(k, cands.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.Below(cands.size() - i));
      std::swap(cands[i], cands[j]);
    }
    cands.resize(take);
    FullSort(cands);
    out.push_back({a, p, cands});
  }
  return out;
}

inline std::vector<std::int64_t> Retrieve(
    const std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>>& queries,
    const mining::NegativePool& pool, std::size_t r) {
  std::vector<std::int64_t> out;
  for (const auto& [qid, g] : queries) {
    std::vector<std::pair<double, std::int64_t>> all;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool.ids[i] == qid) continue;
      double s = 0.0;
      for (Eigen::Index c = 0; c < g.v.size(); ++c) s += g.v(c) * pool.globals[i].v(c);
      all.emplace_back(s, pool.ids[i]);
    }
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
      return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (std::size_t i = 0; i < std::min(r, all.size()); ++i) out.push_back(all[i].second);
  }
  return out;
}

inline std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>> BatchGlobals(
    const BatchIndex& batch, const RowMatrix& descs) {
  std::vector<std::int64_t> order;
  std::map<std::int64_t, Eigen::VectorXd> sums;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.role != mining::CropRole::kAnchor) continue;
    if (!sums.contains(rec.source_image_id)) {
      order.push_back(rec.source_image_id);
      sums[rec.source_image_id] = Eigen::VectorXd::Zero(descs.cols());
    }
    sums[rec.source_image_id] += descs.row(static_cast<Eigen::Index>(r)).transpose();
  }
  std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>> out;
  for (std::int64_t id : order) out.push_back({id, {sums[id] / sums[id].norm()}});
  return out;
}

struct CoarseToFineResult {
  std::vector<AnchorNegatives> per_anchor;
  RowMatrix union_rows;  // B' = batch rows followed by retrieved pool rows
  std::vector<std::int64_t> retrieved;
};

// Builds B' explicitly (batch rows, then the locals of each newly retrieved
// pool image in ascending id order) and sorts every admissible candidate.
inline CoarseToFineResult CoarseToFine(std::size_t k, const BatchIndex& batch,
                                       const RowMatrix& descs, const mining::NegativePool& pool,
                                       std::size_t r) {
  CoarseToFineResult res;
  const auto ids = Retrieve(oracle::BatchGlobals(batch, descs), pool, r);
  std::set<std::int64_t> in_batch;
  for (const auto& rec : batch.records) in_batch.insert(rec.source_image_id);
  std::set<std::int64_t> added;
  for (auto id : ids) {
    if (!in_batch.contains(id)) added.insert(id);
  }
  res.retrieved.assign(added.begin(), added.end());
  std::vector<std::int64_t> owner;
  for (const auto& rec : batch.records) owner.push_back(rec.source_image_id);
  std::vector<Eigen::VectorXd> rows;
  for (Eigen::Index i = 0; i < descs.rows(); ++i) rows.push_back(descs.row(i).transpose());
  for (auto id : added) {
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool.ids[i] != id) continue;
      for (Eigen::Index j = 0; j < pool.locals[i].rows.rows(); ++j) {
        rows.push_back(pool.locals[i].rows.row(j).transpose());
        owner.push_back(id);
      }
    }
  }
  res.union_rows.resize(static_cast<Eigen::Index>(rows.size()), descs.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    res.union_rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  for (const auto& [a, p] : batch.pairing) {
    std::vector<Negative> cands;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (owner[j] == batch.records[a].source_image_id) continue;
      cands.push_back({j, Dot(res.union_rows, static_cast<Eigen::Index>(a), res.union_rows,
                              static_cast<Eigen::Index>(j))});
    }
    FullSort(cands);
    if (cands.size() > k) cands.resize(k);
    res.per_anchor.push_back({a, p, cands});
  }
  return res;
}

// Pool of `n` images with 1..max_kps random locals and globals aggregated
// from them. Every third batch image id is also placed in the pool.
inline mining::NegativePool MakeRandomPool(int n, int max_kps, int dim, CounterRng& rng,
                                           const BatchIndex* batch = nullptr) {
  mining::NegativePool pool;
  std::set<std::int64_t> used;
  if (batch != nullptr) {
    std::set<std::int64_t> batch_ids;
    for (const auto& r : batch->records) batch_ids.insert(r.source_image_id);
    int i = 0;
    for (auto id : batch_ids) {
      if (i++ % 3 == 0) used.insert(id);
    }
  }
  std::int64_t next = 100000;
  while (static_cast<int>(used.size()) < n) used.insert(next++);
  for (auto id : used) {
    descriptor::DescriptorSet locals;
    locals.image_id = id;
    locals.rows = testing::RandomUnitRows(
        1 + static_cast<int>(rng.Below(static_cast<std::uint64_t>(max_kps))), dim, rng);
    pool.ids.push_back(id);
    pool.globals.push_back(mining::AggregateGlobalDescriptor(locals));
    pool.locals.push_back(std::move(locals));
  }
  return pool;
}

// Staircase AP over a ranking: precision evaluated at every recall step.
inline double StaircaseAP(const std::vector<std::int64_t>& ranked,
                          const std::set<std::int64_t>& relevant) {
  double area = 0.0;
  double prev_recall = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (!relevant.contains(ranked[r])) continue;
    ++hits;
    const double recall = static_cast<double>(hits) / static_cast<double>(relevant.size());
    const double precision = static_cast<double>(hits) / static_cast<double>(r + 1);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

// Exact AP of a single positive with pessimistic ties.
inline double ExactAP(double s_pos, const std::vector<double>& negs) {
  int above = 0;
  for (double s : negs) above += s >= s_pos ? 1 : 0;
  return 1.0 / (1.0 + above);
}

}  // namespace hardneg::oracle

#endif  // HARDNEG_TESTS_ORACLES_HPP_
