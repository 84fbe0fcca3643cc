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

#include "hardneg/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hardneg/error.hpp"

namespace hardneg::loss {
namespace {

struct Kernel {
  double value;
  double slope;
};

// Triangular kernel of half-width `delta` centered at `center`.
Kernel Triangle(double s, double center, double delta) {
  const double t = s - center;
  const double a = std::abs(t);
  if (a >= delta) return {0.0, 0.0};
  if (t == 0.0) return {1.0, -1.0 / delta};
  return {1.0 - a / delta, (t > 0.0 ? -1.0 : 1.0) / delta};
}

struct Clamped {
  double s;
  bool inside;
};

Clamped ClampSimilarity(double s) {
  if (s > 1.0) return {1.0, false};
  if (s < -1.0) return {-1.0, false};
  return {s, true};
}

}  // namespace

RankedList RankedList::Make(double s_pos, std::vector<double> s_negs, std::size_t anchor,
                            std::size_t positive, std::vector<std::size_t> neg_indices) {
  if (!neg_indices.empty() && neg_indices.size() != s_negs.size()) {
    throw ValidationError("ranked list: index count differs from negative count");
  }
  std::vector<std::size_t> order(s_negs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return s_negs[x] > s_negs[y]; });
  RankedList list;
  list.s_pos = s_pos;
  list.anchor = anchor;
  list.positive = positive;
  for (std::size_t i : order) {
    list.s_negs.push_back(s_negs[i]);
    if (!neg_indices.empty()) list.neg_indices.push_back(neg_indices[i]);
  }
  return list;
}

APResult SoftBinnedAP(const RankedList& list, const APConfig& cfg) {
  const int bins = cfg.num_bins;
  if (bins < 2) throw ValidationError("AP needs at least 2 bins");
  if (list.s_negs.empty()) throw ValidationError("AP needs at least one negative");
  const double delta = 2.0 / (bins - 1);
  auto center = [delta](int m) { return 1.0 - m * delta; };

  const Clamped pos = ClampSimilarity(list.s_pos);
  std::vector<double> hp(bins), hn(bins, 0.0);
  for (int m = 0; m < bins; ++m) hp[m] = Triangle(pos.s, center(m), delta).value;
  std::vector<Clamped> negs(list.s_negs.size());
  for (std::size_t k = 0; k < negs.size(); ++k) {
    negs[k] = ClampSimilarity(list.s_negs[k]);
    for (int m = 0; m < bins; ++m) hn[m] += Triangle(negs[k].s, center(m), delta).value;
  }

  // Forward pass with prefix sums.
  std::vector<double> cp(bins), c(bins);
  double run_p = 0.0, run_all = 0.0, ap = 0.0;
  for (int m = 0; m < bins; ++m) {
    run_p += hp[m];
    run_all += hp[m] + hn[m];
    cp[m] = run_p;
    c[m] = run_all;
    if (c[m] > 0.0) ap += hp[m] * cp[m] / c[m];
  }

  // dAP/dh+_j = C+_j / C_j + sum_{m >= j} h+_m (1 / C_m - C+_m / C_m^2)
  // dAP/dh-_j = -sum_{m >= j} h+_m C+_m / C_m^2
  std::vector<double> d_hp(bins), d_hn(bins);
  double suffix_p = 0.0, suffix_n = 0.0;
  for (int m = bins - 1; m >= 0; --m) {
    if (c[m] > 0.0) {
      const double inv = 1.0 / c[m];
      suffix_p += hp[m] * (inv - cp[m] * inv * inv);
      suffix_n -= hp[m] * cp[m] * inv * inv;
    }
    d_hp[m] = (c[m] > 0.0 ? cp[m] / c[m] : 0.0) + suffix_p;
    d_hn[m] = suffix_n;
  }

  APResult result;
  result.ap = ap;
  if (pos.inside) {
    for (int m = 0; m < bins; ++m) {
      result.d_pos += d_hp[m] * Triangle(pos.s, center(m), delta).slope;
    }
  }
  result.d_negs.assign(negs.size(), 0.0);
  for (std::size_t k = 0; k < negs.size(); ++k) {
    if (!negs[k].inside) continue;
    double d = 0.0;
    for (int m = 0; m < bins; ++m) d += d_hn[m] * Triangle(negs[k].s, center(m), delta).slope;
    result.d_negs[k] = d;
  }
  return result;
}

double ExactAP(const RankedList& list) {
  std::size_t above = 0;
  for (double s : list.s_negs) {
    if (s >= list.s_pos) ++above;
  }
  return 1.0 / static_cast<double>(1 + above);
}

BatchLoss APLossBatch(std::span<const RankedList> lists, const APConfig& cfg) {
  if (lists.empty()) throw ValidationError("AP loss needs at least one ranked list");
  const double scale = 1.0 / static_cast<double>(lists.size());
  BatchLoss out;
  out.per_list.reserve(lists.size());
  for (const RankedList& list : lists) {
    APResult r = SoftBinnedAP(list, cfg);
    LossOutput lo;
    lo.value = 1.0 - r.ap;
    lo.d_s_pos = -scale * r.d_pos;
    lo.d_s_negs.resize(r.d_negs.size());
    for (std::size_t k = 0; k < r.d_negs.size(); ++k) lo.d_s_negs[k] = -scale * r.d_negs[k];
    out.value += lo.value;
    out.per_list.push_back(std::move(lo));
  }
  out.value *= scale;
  return out;
}

LossOutput TripletLoss(double s_pos, double s_neg_hardest, const TripletConfig& cfg) {
  if (!(cfg.margin > 0.0)) throw ValidationError("triplet margin must be positive");
  LossOutput out;
  const double v = cfg.margin - s_pos + s_neg_hardest;
  out.d_s_negs.assign(1, 0.0);
  if (v > 0.0) {
    out.value = v;
    out.d_s_pos = -1.0;
    out.d_s_negs[0] = 1.0;
  }
  return out;
}

BatchLoss TripletLossBatch(std::span<const RankedList> lists, const TripletConfig& cfg) {
  if (lists.empty()) throw ValidationError("triplet loss needs at least one ranked list");
  const double scale = 1.0 / static_cast<double>(lists.size());
  BatchLoss out;
  for (const RankedList& list : lists) {
    if (list.s_negs.empty()) throw ValidationError("triplet loss needs a negative");
    LossOutput t = TripletLoss(list.s_pos, list.s_negs.front(), cfg);
    LossOutput lo;
    lo.value = t.value;
    lo.d_s_pos = scale * t.d_s_pos;
    lo.d_s_negs.assign(list.s_negs.size(), 0.0);
    lo.d_s_negs[0] = scale * t.d_s_negs[0];
    out.value += t.value;
    out.per_list.push_back(std::move(lo));
  }
  out.value *= scale;
  return out;
}

std::vector<RankedList> BuildRankedLists(const mining::MinedNegatives& mined,
                                         const RowMatrix& descs) {
  const auto n = static_cast<std::size_t>(descs.rows());
  const auto d = static_cast<std::size_t>(descs.cols());
  auto row = [&](std::size_t i) {
    if (i < n) return std::span<const double>(descs.row(static_cast<Eigen::Index>(i)).data(), d);
    if (i - n >= static_cast<std::size_t>(mined.extra_rows.rows())) {
      throw ValidationError("mined negative index " + std::to_string(i) + " out of range");
    }
    return std::span<const double>(
        mined.extra_rows.row(static_cast<Eigen::Index>(i - n)).data(), d);
  };
  std::vector<RankedList> lists;
  lists.reserve(mined.per_anchor.size());
  for (const auto& a : mined.per_anchor) {
    if (a.anchor >= n || a.positive >= n) {
      throw ValidationError("mined anchor or positive index out of range");
    }
    RankedList list;
    list.anchor = a.anchor;
    list.positive = a.positive;
    // Similarities are recomputed from the current rows so the mined indices
    // can be held fixed while the descriptors change.
    list.s_pos = mining::Similarity(row(a.anchor), row(a.positive));
    for (const auto& neg : a.negatives) {
      list.s_negs.push_back(mining::Similarity(row(a.anchor), row(neg.index)));
      list.neg_indices.push_back(neg.index);
    }
    lists.push_back(std::move(list));
  }
  return lists;
}

std::vector<SimilarityGrad> CollectSimilarityGrads(std::span<const RankedList> lists,
                                                   const BatchLoss& loss) {
  if (loss.per_list.size() != lists.size()) {
    throw ValidationError("loss gradients do not match the ranked lists");
  }
  std::vector<SimilarityGrad> out;
  for (std::size_t i = 0; i < lists.size(); ++i) {
    const RankedList& list = lists[i];
    const LossOutput& lo = loss.per_list[i];
    if (list.neg_indices.size() != list.s_negs.size()) {
      throw ValidationError("ranked list lacks negative provenance");
    }
    out.push_back({list.anchor, list.positive, lo.d_s_pos});
    for (std::size_t k = 0; k < list.s_negs.size(); ++k) {
      out.push_back({list.anchor, list.neg_indices[k], lo.d_s_negs[k]});
    }
  }
  return out;
}

RowMatrix BackpropSimilarities(std::span<const SimilarityGrad> grads, const RowMatrix& rows,
                               const RowMatrix& constant_rows) {
  const auto n = static_cast<std::size_t>(rows.rows());
  const auto limit = n + static_cast<std::size_t>(constant_rows.rows());
  RowMatrix out = RowMatrix::Zero(rows.rows(), rows.cols());
  auto row_of = [&](std::size_t i) -> Eigen::Ref<const Eigen::RowVectorXd> {
    if (i < n) return rows.row(static_cast<Eigen::Index>(i));
    return constant_rows.row(static_cast<Eigen::Index>(i - n));
  };
  for (const SimilarityGrad& g : grads) {
    if (g.a >= limit || g.b >= limit) {
      throw ValidationError("similarity gradient references row " +
                            std::to_string(std::max(g.a, g.b)) + " of " + std::to_string(limit));
    }
    if (g.g == 0.0) continue;
    if (g.a < n) out.row(static_cast<Eigen::Index>(g.a)) += g.g * row_of(g.b);
    if (g.b < n) out.row(static_cast<Eigen::Index>(g.b)) += g.g * row_of(g.a);
  }
  return out;
}

}  // namespace hardneg::loss
