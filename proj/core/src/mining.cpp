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

#include "hardneg/mining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::mining {
namespace {

constexpr std::uint64_t kRandomMiningStream = 0x3D;

// Sequential dot product; every similarity in this module goes through here
// so that batched and scalar evaluations agree bit for bit.
double Dot(const double* a, const double* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double RowDot(const RowMatrix& a, Eigen::Index i, const RowMatrix& b, Eigen::Index j) {
  return Dot(a.row(i).data(), b.row(j).data(), a.cols());
}

bool Harder(const Negative& x, const Negative& y) {
  if (x.similarity != y.similarity) return x.similarity > y.similarity;
  return x.index < y.index;
}

void KeepTop(std::vector<Negative>& negs, std::size_t k) {
  if (k < negs.size()) {
    std::partial_sort(negs.begin(), negs.begin() + static_cast<std::ptrdiff_t>(k),
                      negs.end(), Harder);
    negs.resize(k);
  } else {
    std::sort(negs.begin(), negs.end(), Harder);
  }
}

void CheckBatch(const BatchIndex& batch, const RowMatrix& descs) {
  batch.Validate();
  if (batch.records.size() != static_cast<std::size_t>(descs.rows())) {
    throw ValidationError("batch index describes " + std::to_string(batch.records.size()) +
                          " rows but the descriptor matrix has " +
                          std::to_string(descs.rows()));
  }
}

// Candidates from the batch itself: every row whose source image differs
// from the anchor's.
std::vector<Negative> InBatchCandidates(const BatchIndex& batch, const RowMatrix& descs,
                                        std::size_t anchor) {
  const std::int64_t own = batch.records[anchor].source_image_id;
  std::vector<Negative> out;
  out.reserve(batch.records.size());
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    if (batch.records[r].source_image_id == own) continue;
    out.push_back({r, RowDot(descs, static_cast<Eigen::Index>(anchor), descs,
                             static_cast<Eigen::Index>(r))});
  }
  return out;
}

}  // namespace

double Similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("similarity: dimension mismatch (" + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()) + ")");
  }
  return Dot(a.data(), b.data(), static_cast<Eigen::Index>(a.size()));
}

RowMatrix SimilarityMatrix(const RowMatrix& a, const RowMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ValidationError("similarity_matrix: dimension mismatch (" +
                          std::to_string(a.cols()) + " vs " + std::to_string(b.cols()) + ")");
  }
  RowMatrix s(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) s(i, j) = RowDot(a, i, b, j);
  }
  return s;
}

void BatchIndex::Validate() const {
  std::vector<int> seen(records.size(), 0);
  for (const auto& [a, p] : pairing) {
    if (a >= records.size() || p >= records.size()) {
      throw ValidationError("batch pairing references a row out of range");
    }
    if (records[a].role != CropRole::kAnchor || records[p].role != CropRole::kPositive) {
      throw ValidationError("batch pairing must map anchor rows to positive rows");
    }
    if (records[a].pair_id != records[p].pair_id ||
        records[a].source_image_id != records[p].source_image_id) {
      throw ValidationError("batch pairing crosses pairs");
    }
    if (++seen[a] > 1 || ++seen[p] > 1) {
      throw ValidationError("batch pairing is not a bijection");
    }
  }
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (seen[r] != 1) throw ValidationError("batch row " + std::to_string(r) + " is unpaired");
  }
}

std::size_t BatchIndex::distinct_images() const {
  std::set<std::int64_t> ids;
  for (const auto& r : records) ids.insert(r.source_image_id);
  return ids.size();
}

MiningStrategy MiningStrategy::Parse(const std::string& name, std::size_t k) {
  if (name == "in_pair") return InPair();
  if (name == "in_batch_all") return InBatchAll();
  if (k == 0) throw ValidationError("mining strategy " + name + " needs k >= 1");
  if (name == "in_batch_random") return InBatchRandom(k);
  if (name == "in_batch_topk") return InBatchTopK(k);
  if (name == "coarse_to_fine") return CoarseToFineTopK(k);
  throw ValidationError("unknown mining strategy '" + name +
                        "' (expected in_pair, in_batch_all, in_batch_random, "
                        "in_batch_topk or coarse_to_fine)");
}

std::string MiningStrategy::name() const {
  switch (kind) {
    case Kind::kInPair: return "in_pair";
    case Kind::kInBatchAll: return "in_batch_all";
    case Kind::kInBatchRandom: return "in_batch_random";
    case Kind::kInBatchTopK: return "in_batch_topk";
    case Kind::kCoarseToFineTopK: return "coarse_to_fine";
  }
  return "unknown";
}

double MinedNegatives::MeanSimilarity() const {
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& a : per_anchor) {
    if (a.negatives.empty()) continue;
    double s = 0.0;
    for (const auto& n : a.negatives) s += n.similarity;
    total += s / static_cast<double>(a.negatives.size());
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

MinedNegatives MineInPair(const RowMatrix& anchors, const RowMatrix& positives,
                          std::span<const std::size_t> pairing) {
  if (positives.rows() < 2) {
    throw ValidationError("in-pair mining needs at least 2 positives");
  }
  if (anchors.cols() != positives.cols()) {
    throw ValidationError("in-pair mining: dimension mismatch");
  }
  if (pairing.size() != static_cast<std::size_t>(anchors.rows())) {
    throw ValidationError("in-pair mining: pairing size differs from anchor count");
  }
  MinedNegatives out;
  out.batch_rows = static_cast<std::size_t>(positives.rows());
  for (Eigen::Index i = 0; i < anchors.rows(); ++i) {
    const std::size_t own = pairing[static_cast<std::size_t>(i)];
    if (own >= static_cast<std::size_t>(positives.rows())) {
      throw ValidationError("in-pair mining: pairing index out of range");
    }
    Negative best{0, -std::numeric_limits<double>::infinity()};
    bool found = false;
    for (Eigen::Index j = 0; j < positives.rows(); ++j) {
      if (static_cast<std::size_t>(j) == own) continue;
      const double s = RowDot(anchors, i, positives, j);
      if (!found || s > best.similarity) {
        best = {static_cast<std::size_t>(j), s};
        found = true;
      }
    }
    out.per_anchor.push_back({static_cast<std::size_t>(i), own, {best}});
  }
  return out;
}

MinedNegatives MineInPair(const BatchIndex& batch, const RowMatrix& descs) {
  CheckBatch(batch, descs);
  std::map<std::size_t, std::vector<std::size_t>> positives_by_pair;
  for (const auto& [a, p] : batch.pairing) {
    positives_by_pair[batch.records[p].pair_id].push_back(p);
  }
  MinedNegatives out;
  out.batch_rows = static_cast<std::size_t>(descs.rows());
  for (const auto& [a, p] : batch.pairing) {
    const auto& candidates = positives_by_pair[batch.records[a].pair_id];
    if (candidates.size() < 2) {
      throw ValidationError("in-pair mining needs at least 2 positives in pair " +
                            std::to_string(batch.records[a].pair_id));
    }
    Negative best{0, 0.0};
    bool found = false;
    for (std::size_t c : candidates) {
      if (c == p) continue;
      const double s = RowDot(descs, static_cast<Eigen::Index>(a), descs,
                              static_cast<Eigen::Index>(c));
      if (!found || Harder({c, s}, best)) {
        best = {c, s};
        found = true;
      }
    }
    out.per_anchor.push_back({a, p, {best}});
  }
  return out;
}

MinedNegatives MineInBatch(const MiningStrategy& strategy, const BatchIndex& batch,
                           const RowMatrix& descs, std::uint64_t seed) {
  using Kind = MiningStrategy::Kind;
  if (strategy.kind == Kind::kInPair) return MineInPair(batch, descs);
  if (strategy.kind == Kind::kCoarseToFineTopK) {
    throw ValidationError("coarse-to-fine mining requires a negative pool");
  }
  CheckBatch(batch, descs);
  if (batch.distinct_images() < 2) {
    throw ValidationError("in-batch mining needs at least 2 distinct source images");
  }
  MinedNegatives out;
  out.batch_rows = static_cast<std::size_t>(descs.rows());
  for (const auto& [a, p] : batch.pairing) {
    std::vector<Negative> negs = InBatchCandidates(batch, descs, a);
    switch (strategy.kind) {
      case Kind::kInBatchAll:
        std::sort(negs.begin(), negs.end(), Harder);
        break;
      case Kind::kInBatchTopK:
        KeepTop(negs, strategy.k);
        break;
      case Kind::kInBatchRandom: {
        CounterRng rng(seed ^ kRandomMiningStream, static_cast<std::uint64_t>(a));
        PartialShuffle(negs, strategy.k, rng);
        negs.resize(std::min(strategy.k, negs.size()));
        std::sort(negs.begin(), negs.end(), Harder);
        break;
      }
      default:
        break;
    }
    out.per_anchor.push_back({a, p, std::move(negs)});
  }
  return out;
}

GlobalDescriptor AggregateGlobalDescriptor(const RowMatrix& rows, Aggregation mode) {
  if (rows.rows() < 1) {
    throw ValidationError("global descriptor needs at least one local descriptor");
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(rows.cols());
  if (mode == Aggregation::kSum) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) v += rows.row(i).transpose();
  } else {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      v += rows.row(i).transpose().cwiseAbs().array().cube().matrix();
    }
    v = (v / static_cast<double>(rows.rows())).array().pow(1.0 / 3.0).matrix();
  }
  const double norm = v.norm();
  if (!(norm >= 1e-12)) {
    throw DegenerateError("global descriptor: local descriptors cancel out");
  }
  return {v / norm};
}

void NegativePool::Validate() const {
  if (globals.size() != ids.size() || (!locals.empty() && locals.size() != ids.size())) {
    throw ValidationError("negative pool: ids, globals and locals differ in length");
  }
  std::set<std::int64_t> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw ValidationError("negative pool: duplicate image ids");
  for (std::size_t i = 0; i < globals.size(); ++i) {
    if (std::abs(globals[i].v.norm() - 1.0) > 1e-6) {
      throw ValidationError("negative pool: global descriptor of image " +
                            std::to_string(ids[i]) + " is not unit-norm");
    }
  }
}

std::optional<std::size_t> NegativePool::Find(std::int64_t id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  return std::nullopt;
}

std::vector<std::int64_t> RetrieveNegativeImages(
    const std::vector<std::pair<std::int64_t, GlobalDescriptor>>& queries,
    const NegativePool& pool, std::size_t top_r) {
  if (pool.size() == 0) throw ValidationError("negative pool is empty");
  if (top_r == 0) throw ValidationError("retrieval depth must be at least 1");
  std::vector<std::int64_t> out;
  for (const auto& [qid, g] : queries) {
    std::vector<std::pair<double, std::int64_t>> scored;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool.ids[i] == qid) continue;
      if (pool.globals[i].v.size() != g.v.size()) {
        throw ValidationError("retrieval: global descriptor dimension mismatch");
      }
      scored.emplace_back(Dot(g.v.data(), pool.globals[i].v.data(), g.v.size()), pool.ids[i]);
    }
    if (scored.empty()) {
      throw ValidationError("negative pool contains only the query image " +
                            std::to_string(qid));
    }
    const std::size_t r = std::min(top_r, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(r),
                      scored.end(), [](const auto& x, const auto& y) {
                        if (x.first != y.first) return x.first > y.first;
                        return x.second < y.second;
                      });
    for (std::size_t i = 0; i < r; ++i) out.push_back(scored[i].second);
  }
  return out;
}

std::vector<std::pair<std::int64_t, GlobalDescriptor>> BatchGlobals(
    const BatchIndex& batch, const RowMatrix& descs, Aggregation mode) {
  std::vector<std::int64_t> order;
  std::map<std::int64_t, std::vector<Eigen::Index>> rows;
  for (std::size_t r = 0; r < batch.records.size(); ++r) {
    const auto& rec = batch.records[r];
    if (rec.role != CropRole::kAnchor) continue;
    if (!rows.contains(rec.source_image_id)) order.push_back(rec.source_image_id);
    rows[rec.source_image_id].push_back(static_cast<Eigen::Index>(r));
  }
  std::vector<std::pair<std::int64_t, GlobalDescriptor>> out;
  for (std::int64_t id : order) {
    const auto& idx = rows[id];
    RowMatrix sub(static_cast<Eigen::Index>(idx.size()), descs.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      sub.row(static_cast<Eigen::Index>(i)) = descs.row(idx[i]);
    }
    out.emplace_back(id, AggregateGlobalDescriptor(sub, mode));
  }
  return out;
}

MinedNegatives MineCoarseToFine(std::size_t k, const BatchIndex& batch,
                                const RowMatrix& descs, const NegativePool& pool,
                                std::size_t top_r, Aggregation mode) {
  CheckBatch(batch, descs);
  return MineCoarseToFine(k, batch, descs, pool, BatchGlobals(batch, descs, mode), top_r);
}

MinedNegatives MineCoarseToFine(
    std::size_t k, const BatchIndex& batch, const RowMatrix& descs,
    const NegativePool& pool,
    const std::vector<std::pair<std::int64_t, GlobalDescriptor>>& batch_globals,
    std::size_t top_r) {
  if (k == 0) throw ValidationError("coarse-to-fine mining needs k >= 1");
  CheckBatch(batch, descs);
  if (batch.distinct_images() < 2) {
    throw ValidationError("in-batch mining needs at least 2 distinct source images");
  }
  if (pool.locals.size() != pool.size()) {
    throw ValidationError("negative pool lacks local descriptors");
  }
  const std::vector<std::int64_t> retrieved = RetrieveNegativeImages(batch_globals, pool, top_r);
  std::set<std::int64_t> in_batch;
  for (const auto& r : batch.records) in_batch.insert(r.source_image_id);
  std::set<std::int64_t> added;
  for (std::int64_t id : retrieved) {
    if (!in_batch.contains(id)) added.insert(id);
  }

  MinedNegatives out;
  out.batch_rows = static_cast<std::size_t>(descs.rows());
  out.retrieved_images.assign(added.begin(), added.end());
  Eigen::Index extra_count = 0;
  for (std::int64_t id : added) extra_count += pool.locals[*pool.Find(id)].rows.rows();
  out.extra_rows.resize(extra_count, descs.cols());
  std::vector<std::int64_t> extra_owner;
  Eigen::Index at = 0;
  for (std::int64_t id : added) {
    const RowMatrix& rows = pool.locals[*pool.Find(id)].rows;
    if (rows.rows() > 0 && rows.cols() != descs.cols()) {
      throw ValidationError("pool descriptors differ in dimension from the batch");
    }
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      out.extra_rows.row(at++) = rows.row(r);
      extra_owner.push_back(id);
    }
  }

  for (const auto& [a, p] : batch.pairing) {
    std::vector<Negative> negs = InBatchCandidates(batch, descs, a);
    const std::int64_t own = batch.records[a].source_image_id;
    for (Eigen::Index r = 0; r < out.extra_rows.rows(); ++r) {
      if (extra_owner[static_cast<std::size_t>(r)] == own) continue;
      negs.push_back({out.batch_rows + static_cast<std::size_t>(r),
                      RowDot(descs, static_cast<Eigen::Index>(a), out.extra_rows, r)});
    }
    KeepTop(negs, k);
    out.per_anchor.push_back({a, p, std::move(negs)});
  }
  return out;
}

}  // namespace hardneg::mining
