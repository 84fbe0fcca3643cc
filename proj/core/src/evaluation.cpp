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

#include "hardneg/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/imaging.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::eval {
namespace {

geometry::Point ToPoint(const Keypoint& k) { return {k.x, k.y}; }

std::span<const double> Span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

DescriptorSet OneHot(std::size_t n, std::size_t dim, const std::vector<std::size_t>& column,
                     const std::vector<Keypoint>& kps, std::int64_t id) {
  DescriptorSet d;
  d.rows = descriptor::RowMatrix::Zero(static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    d.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(column[i])) = 1.0;
  }
  d.keypoints = kps;
  d.image_id = id;
  return d;
}

Eigen::VectorXd RandomUnit(CounterRng& rng, int dim) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.Normal();
  return v / v.norm();
}

}  // namespace

MatchSet MatchMutualNN(const DescriptorSet& a, const DescriptorSet& b) {
  MatchSet out;
  out.id_a = a.image_id;
  out.id_b = b.image_id;
  if (a.size() == 0 || b.size() == 0) return out;
  if (a.dim() != b.dim()) {
    throw ValidationError("match: descriptor dimensions differ (" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.dim()) + ")");
  }
  const descriptor::RowMatrix s = mining::SimilarityMatrix(a.rows, b.rows);
  const Eigen::Index na = s.rows();
  const Eigen::Index nb = s.cols();
  std::vector<Eigen::Index> row_best(static_cast<std::size_t>(na), 0);
  std::vector<Eigen::Index> col_best(static_cast<std::size_t>(nb), 0);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 1; j < nb; ++j) {
      if (s(i, j) > s(i, row_best[i])) row_best[i] = j;
    }
  }
  for (Eigen::Index j = 0; j < nb; ++j) {
    for (Eigen::Index i = 1; i < na; ++i) {
      if (s(i, j) > s(col_best[j], j)) col_best[j] = i;
    }
  }
  for (Eigen::Index i = 0; i < na; ++i) {
    const Eigen::Index j = row_best[i];
    if (col_best[j] == i) {
      out.matches.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), s(i, j)});
    }
  }
  return out;
}

std::map<int, double> PairAccuracy(const MatchSet& matches, const std::vector<Keypoint>& kps_a,
                                   const std::vector<Keypoint>& kps_b,
                                   const geometry::Homography& h_gt,
                                   const std::vector<int>& thresholds) {
  if (matches.matches.empty()) throw ValidationError("mma: no matches");
  std::vector<double> errors;
  errors.reserve(matches.size());
  for (const Match& m : matches.matches) {
    if (m.a >= kps_a.size() || m.b >= kps_b.size()) {
      throw ValidationError("mma: match index out of range");
    }
    double err = std::numeric_limits<double>::infinity();
    try {
      err = (h_gt(ToPoint(kps_a[m.a])) - ToPoint(kps_b[m.b])).norm();
    } catch (const EstimationError&) {
    }
    errors.push_back(err);
  }
  std::map<int, double> acc;
  for (int t : thresholds) {
    const auto correct = std::count_if(errors.begin(), errors.end(),
                                       [t](double e) { return e <= t; });
    acc[t] = static_cast<double>(correct) / static_cast<double>(errors.size());
  }
  return acc;
}

MmaResult ComputeMMA(const std::vector<MmaInput>& pairs, const std::vector<int>& thresholds) {
  MmaResult out;
  out.pairs = pairs.size();
  for (int t : thresholds) out.accuracy[t] = 0.0;
  std::size_t used = 0;
  for (const MmaInput& p : pairs) {
    if (p.matches->matches.empty()) {
      ++out.skipped;
      continue;
    }
    const auto acc = PairAccuracy(*p.matches, *p.kps_a, *p.kps_b, *p.h_gt, thresholds);
    for (const auto& [t, v] : acc) out.accuracy[t] += v;
    ++used;
  }
  if (used > 0) {
    for (auto& [t, v] : out.accuracy) v /= static_cast<double>(used);
  }
  return out;
}

std::vector<EvalPair> MakeEvalPairs(const imaging::Corpus& corpus, const EvalPairConfig& cfg,
                                    int count, std::uint64_t seed, int threads) {
  if (count < 1) throw ValidationError("eval: pair count must be >= 1");
  if (corpus.size() == 0) throw ValidationError("eval: empty corpus");
  const std::uint64_t base = seed ^ kEvalSeedTag;
  const int border = cfg.patch_side / 2 + 1;
  std::vector<EvalPair> pairs(static_cast<std::size_t>(count));
  ParallelFor(pairs.size(), threads, [&](std::size_t i) {
    EvalPair& out = pairs[i];
    for (int attempt = 0; attempt < std::max(cfg.max_attempts, 1); ++attempt) {
      const std::uint64_t stream = attempt == 0 ? base : Mix64(base ^ Mix64(attempt));
      CounterRng pick(stream, i);
      const std::size_t img = static_cast<std::size_t>(pick.Below(corpus.size()));
      const std::uint64_t ps = Mix64(stream ^ Mix64(i));
      auto crop = geometry::MakePair(corpus.images[img], cfg.homography, cfg.crop_size, ps,
                                     corpus.ids[img]);
      out = EvalPair{};
      if (cfg.augment) {
        out.image_a = imaging::ToGray(
            imaging::AugmentColor(crop.anchor, imaging::SampleAugmentParams(Mix64(ps + 1))));
        out.image_b = imaging::ToGray(
            imaging::AugmentColor(crop.positive, imaging::SampleAugmentParams(Mix64(ps + 2))));
      } else {
        out.image_a = imaging::ToGray(crop.anchor);
        out.image_b = imaging::ToGray(crop.positive);
      }
      out.h_gt = crop.h_ap;
      out.source_image_id = corpus.ids[img];
      imaging::HarrisOptions harris;
      harris.border = border;
      out.kps_a = imaging::DetectHarris(out.image_a, cfg.max_keypoints, cfg.nms_radius, harris);
      if (cfg.reproject_keypoints) {
        const auto corrs = geometry::ReprojectKeypoints(out.kps_a, out.h_gt, out.image_b.width(),
                                                        out.image_b.height(), 0.0);
        for (const auto& c : corrs.pairs) {
          out.kps_b.push_back({c.positive.x(), c.positive.y(), out.kps_a[c.source_index].score});
        }
      } else {
        out.kps_b = imaging::DetectHarris(out.image_b, cfg.max_keypoints, cfg.nms_radius, harris);
      }
      const auto needed = static_cast<std::size_t>(std::max(cfg.min_keypoints, 0));
      if (out.kps_a.size() >= needed && out.kps_b.size() >= needed) break;
    }
  });
  return pairs;
}

void DescribeEvalPairs(const descriptor::ModelParams& params, std::vector<EvalPair>& pairs,
                       int threads) {
  ParallelFor(pairs.size(), threads, [&](std::size_t i) {
    EvalPair& p = pairs[i];
    p.desc_a = descriptor::Describe(params, p.image_a, p.kps_a, 2 * static_cast<std::int64_t>(i));
    p.desc_b =
        descriptor::Describe(params, p.image_b, p.kps_b, 2 * static_cast<std::int64_t>(i) + 1);
  });
}

void AssignOracleDescriptors(std::vector<EvalPair>& pairs, double pixel_thresh) {
  for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
    EvalPair& p = pairs[pi];
    const std::size_t na = p.kps_a.size();
    const std::size_t nb = p.kps_b.size();
    std::vector<std::size_t> col_a(na), col_b(nb);
    std::vector<bool> used(nb, false);
    std::size_t next = 0;
    for (std::size_t i = 0; i < na; ++i) {
      std::size_t best = nb;
      double best_d = pixel_thresh;
      try {
        const geometry::Point q = p.h_gt(ToPoint(p.kps_a[i]));
        for (std::size_t j = 0; j < nb; ++j) {
          if (used[j]) continue;
          const double d = (q - ToPoint(p.kps_b[j])).norm();
          if (d <= best_d && (best == nb || d < best_d)) {
            best = j;
            best_d = d;
          }
        }
      } catch (const EstimationError&) {
      }
      col_a[i] = next;
      if (best < nb) {
        used[best] = true;
        col_b[best] = next;
      }
      ++next;
    }
    for (std::size_t j = 0; j < nb; ++j) {
      if (!used[j]) col_b[j] = next++;
    }
    const std::size_t dim = std::max<std::size_t>(next, 1);
    p.desc_a = OneHot(na, dim, col_a, p.kps_a, 2 * static_cast<std::int64_t>(pi));
    p.desc_b = OneHot(nb, dim, col_b, p.kps_b, 2 * static_cast<std::int64_t>(pi) + 1);
  }
}

PairMetrics EvaluatePair(const EvalPair& pair, const MatchingConfig& cfg, std::uint64_t seed) {
  PairMetrics out;
  const MatchSet ms = MatchMutualNN(pair.desc_a, pair.desc_b);
  out.matches = ms.size();
  const int w = pair.image_b.width();
  const int h = pair.image_b.height();

  std::vector<bool> in_gt(pair.kps_a.size(), false);
  for (std::size_t i = 0; i < pair.kps_a.size(); ++i) {
    geometry::Point q;
    try {
      q = pair.h_gt(ToPoint(pair.kps_a[i]));
    } catch (const EstimationError&) {
      continue;
    }
    if (q.x() < 0.0 || q.y() < 0.0 || q.x() > w - 1 || q.y() > h - 1) continue;
    for (const Keypoint& kb : pair.kps_b) {
      if ((q - ToPoint(kb)).norm() <= cfg.pixel_thresh) {
        in_gt[i] = true;
        break;
      }
    }
  }
  out.ground_truth = static_cast<std::size_t>(std::count(in_gt.begin(), in_gt.end(), true));

  geometry::CorrespondenceSet corrs;
  for (const Match& m : ms.matches) {
    const geometry::Point a = ToPoint(pair.kps_a.at(m.a));
    const geometry::Point b = ToPoint(pair.kps_b.at(m.b));
    corrs.pairs.push_back({a, b, m.a});
    double err = std::numeric_limits<double>::infinity();
    try {
      err = (pair.h_gt(a) - b).norm();
    } catch (const EstimationError&) {
    }
    if (err <= cfg.pixel_thresh) {
      ++out.correct;
      if (in_gt[m.a]) ++out.correct_ground_truth;
    }
  }
  if (!ms.matches.empty()) {
    out.accuracy = PairAccuracy(ms, pair.kps_a, pair.kps_b, pair.h_gt, cfg.thresholds);
  }
  if (corrs.size() >= 4) {
    geometry::RansacConfig rc = cfg.ransac;
    rc.seed = seed;
    try {
      const auto est = geometry::RansacHomography(corrs, rc);
      out.homography_correct =
          geometry::CornerError(est.h, pair.h_gt, pair.image_a.width(), pair.image_a.height()) <=
          cfg.pixel_thresh;
    } catch (const EstimationError&) {
      out.homography_correct = false;
    }
  }
  return out;
}

MatchingReport ComputeMatchingMetrics(const std::vector<EvalPair>& pairs,
                                      const MatchingConfig& cfg) {
  if (pairs.empty()) throw ValidationError("matching metrics: no pairs");
  std::vector<PairMetrics> per(pairs.size());
  ParallelFor(pairs.size(), cfg.threads, [&](std::size_t i) {
    per[i] = EvaluatePair(pairs[i], cfg, cfg.ransac.seed ^ Mix64(i));
  });
  MatchingReport r;
  r.pairs = pairs.size();
  for (int t : cfg.thresholds) r.mma[t] = 0.0;
  std::size_t with_matches = 0;
  std::size_t with_gt = 0;
  std::size_t eta_hits = 0;
  for (const PairMetrics& m : per) {
    if (m.homography_correct) ++eta_hits;
    if (m.matches == 0) {
      ++r.skipped;
    } else {
      ++with_matches;
      for (const auto& [t, v] : m.accuracy) r.mma[t] += v;
      r.precision += static_cast<double>(m.correct) / static_cast<double>(m.matches);
    }
    if (m.ground_truth > 0) {
      ++with_gt;
      r.recall += static_cast<double>(m.correct_ground_truth) /
                  static_cast<double>(m.ground_truth);
    }
  }
  if (with_matches > 0) {
    for (auto& [t, v] : r.mma) v /= static_cast<double>(with_matches);
    r.precision /= static_cast<double>(with_matches);
  }
  if (with_gt > 0) r.recall /= static_cast<double>(with_gt);
  r.eta = static_cast<double>(eta_hits) / static_cast<double>(pairs.size());
  return r;
}

std::vector<std::int64_t> RankByGlobal(
    const mining::GlobalDescriptor& query,
    const std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>>& database) {
  std::vector<std::pair<double, std::int64_t>> scored;
  scored.reserve(database.size());
  for (const auto& [id, g] : database) {
    if (g.v.size() != query.v.size()) {
      throw ValidationError("rank: global descriptor dimensions differ");
    }
    scored.emplace_back(mining::Similarity(Span(query.v), Span(g.v)), id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
    if (x.first != y.first) return x.first > y.first;
    return x.second < y.second;
  });
  std::vector<std::int64_t> ids;
  ids.reserve(scored.size());
  for (const auto& s : scored) ids.push_back(s.second);
  return ids;
}

RerankResult RerankByInliers(const DescriptorSet& query,
                             const std::vector<const DescriptorSet*>& candidates,
                             const geometry::RansacConfig& cfg) {
  std::vector<std::size_t> score(candidates.size(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const DescriptorSet& cand = *candidates[c];
    const MatchSet ms = MatchMutualNN(query, cand);
    if (ms.size() < 4) continue;
    geometry::CorrespondenceSet corrs;
    for (const Match& m : ms.matches) {
      corrs.pairs.push_back({ToPoint(query.keypoints.at(m.a)), ToPoint(cand.keypoints.at(m.b)),
                             m.a});
    }
    try {
      score[c] = geometry::RansacHomography(corrs, cfg).inlier_count;
    } catch (const EstimationError&) {
      score[c] = 0;
    }
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return score[x] > score[y]; });
  RerankResult out;
  for (std::size_t c : order) {
    out.ids.push_back(candidates[c]->image_id);
    out.inliers.push_back(score[c]);
  }
  return out;
}

double AveragePrecision(const std::vector<std::int64_t>& ranked,
                        const std::set<std::int64_t>& relevant) {
  if (relevant.empty()) throw ValidationError("average precision: empty relevant set");
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (relevant.contains(ranked[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant.size());
}

double PrecisionAtK(const std::vector<std::int64_t>& ranked,
                    const std::set<std::int64_t>& relevant, int k) {
  if (k < 1) throw ValidationError("precision@k: k must be >= 1");
  const std::size_t top = std::min(ranked.size(), static_cast<std::size_t>(k));
  const auto hits = std::count_if(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top),
                                  [&](std::int64_t id) { return relevant.contains(id); });
  return static_cast<double>(hits) / k;
}

double RecallAtN(const std::vector<std::int64_t>& ranked,
                 const std::set<std::int64_t>& relevant, int n) {
  if (n < 1) throw ValidationError("recall@n: n must be >= 1");
  const std::size_t top = std::min(ranked.size(), static_cast<std::size_t>(n));
  for (std::size_t r = 0; r < top; ++r) {
    if (relevant.contains(ranked[r])) return 1.0;
  }
  return 0.0;
}

RetrievalReport ComputeRetrievalMetrics(const std::vector<std::vector<std::int64_t>>& rankings,
                                        const std::vector<std::set<std::int64_t>>& relevant) {
  if (rankings.size() != relevant.size()) {
    throw ValidationError("retrieval metrics: rankings and relevant sets differ in length");
  }
  RetrievalReport r;
  r.queries = rankings.size();
  for (int k : kRetrievalCutoffs) {
    r.mp[k] = 0.0;
    r.recall[k] = 0.0;
  }
  if (rankings.empty()) return r;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    r.map += AveragePrecision(rankings[q], relevant[q]);
    for (int k : kRetrievalCutoffs) {
      r.mp[k] += PrecisionAtK(rankings[q], relevant[q], k);
      r.recall[k] += RecallAtN(rankings[q], relevant[q], k);
    }
  }
  const double n = static_cast<double>(rankings.size());
  r.map /= n;
  for (int k : kRetrievalCutoffs) {
    r.mp[k] /= n;
    r.recall[k] /= n;
  }
  return r;
}

RetrievalEvaluation EvaluateRetrieval(const std::vector<RetrievalItem>& items,
                                      const RetrievalConfig& cfg) {
  const std::size_t n = items.size();
  std::vector<std::vector<std::int64_t>> before(n), after(n);
  std::vector<std::set<std::int64_t>> relevant(n);
  std::map<std::int64_t, std::size_t> position;
  for (std::size_t i = 0; i < n; ++i) position[items[i].id] = i;
  if (position.size() != n) throw ValidationError("retrieval: duplicate item ids");

  ParallelFor(n, cfg.threads, [&](std::size_t q) {
    std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>> db;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == q) continue;
      db.emplace_back(items[i].id, items[i].global);
      if (items[i].scene == items[q].scene) relevant[q].insert(items[i].id);
    }
    before[q] = RankByGlobal(items[q].global, db);
    const std::size_t depth =
        std::min(before[q].size(), static_cast<std::size_t>(std::max(cfg.rerank_depth, 0)));
    std::vector<const DescriptorSet*> cands;
    for (std::size_t r = 0; r < depth; ++r) cands.push_back(&items[position.at(before[q][r])].locals);
    geometry::RansacConfig rc = cfg.ransac;
    rc.seed = cfg.ransac.seed ^ Mix64(q);
    after[q] = RerankByInliers(items[q].locals, cands, rc).ids;
    for (std::size_t r = depth; r < before[q].size(); ++r) after[q].push_back(before[q][r]);
  });

  // Queries without another view of their scene have no relevant items.
  std::vector<std::vector<std::int64_t>> rb, ra;
  std::vector<std::set<std::int64_t>> rel;
  for (std::size_t q = 0; q < n; ++q) {
    if (relevant[q].empty()) continue;
    rb.push_back(std::move(before[q]));
    ra.push_back(std::move(after[q]));
    rel.push_back(std::move(relevant[q]));
  }
  return {ComputeRetrievalMetrics(rb, rel), ComputeRetrievalMetrics(ra, rel)};
}

std::vector<RetrievalItem> MakePlantedRetrievalSet(const PlantedRetrievalConfig& cfg,
                                                   std::uint64_t seed) {
  if (cfg.scenes < 1 || cfg.views < 2) {
    throw ValidationError("planted retrieval: need scenes >= 1 and views >= 2");
  }
  if (cfg.dim < 2 || cfg.scene_points < 4 || cfg.frame < 64) {
    throw ValidationError("planted retrieval: dim >= 2, scene_points >= 4, frame >= 64 required");
  }
  const std::uint64_t base = seed ^ kEvalSeedTag;
  std::vector<RetrievalItem> items;
  for (int g = 0; g < cfg.scenes; ++g) {
    CounterRng scene_rng(base, 0x5C000000ULL + static_cast<std::uint64_t>(g));
    std::vector<geometry::Point> pts;
    std::vector<Eigen::VectorXd> descs;
    for (int k = 0; k < cfg.scene_points; ++k) {
      pts.emplace_back(scene_rng.Uniform(0.0, cfg.frame - 1.0),
                       scene_rng.Uniform(0.0, cfg.frame - 1.0));
      descs.push_back(RandomUnit(scene_rng, cfg.dim));
    }
    const Eigen::VectorXd scene_global = RandomUnit(scene_rng, cfg.dim);
    for (int v = 0; v < cfg.views; ++v) {
      const std::uint64_t view_seed = Mix64(base ^ Mix64((static_cast<std::uint64_t>(g) << 20) +
                                                         static_cast<std::uint64_t>(v)));
      CounterRng rng(view_seed, 1);
      const geometry::Homography h =
          v == 0 ? geometry::Homography::Identity()
                 : geometry::SampleHomography(geometry::HomographyConfig{}, cfg.frame, cfg.frame,
                                              view_seed);
      const int total = cfg.scene_points + cfg.clutter_points;
      RetrievalItem item;
      item.id = static_cast<std::int64_t>(g) * cfg.views + v;
      item.scene = g;
      item.locals.image_id = item.id;
      item.locals.rows.resize(total, cfg.dim);
      for (int k = 0; k < total; ++k) {
        Eigen::VectorXd d;
        geometry::Point p;
        if (k < cfg.scene_points) {
          d = descs[static_cast<std::size_t>(k)];
          for (int c = 0; c < cfg.dim; ++c) d(c) += cfg.descriptor_noise * rng.Normal();
          d.normalize();
          p = h(pts[static_cast<std::size_t>(k)]);
          p.x() += cfg.keypoint_noise * rng.Normal();
          p.y() += cfg.keypoint_noise * rng.Normal();
        } else {
          d = RandomUnit(rng, cfg.dim);
          p = {rng.Uniform(0.0, cfg.frame - 1.0), rng.Uniform(0.0, cfg.frame - 1.0)};
        }
        item.locals.rows.row(k) = d.transpose();
        item.locals.keypoints.push_back({p.x(), p.y(), 1.0});
      }
      Eigen::VectorXd gv = scene_global;
      const double sigma = cfg.global_noise / std::sqrt(static_cast<double>(cfg.dim));
      for (int c = 0; c < cfg.dim; ++c) gv(c) += sigma * rng.Normal();
      item.global.v = gv / gv.norm();
      items.push_back(std::move(item));
    }
  }
  return items;
}

std::vector<RetrievalItem> MakeSceneRetrievalSet(const descriptor::ModelParams& params,
                                                 const SceneRetrievalConfig& cfg,
                                                 std::uint64_t seed) {
  if (cfg.views < 2) throw ValidationError("scene retrieval: views must be >= 2");
  if (cfg.scenes < 1) throw ValidationError("scene retrieval: scenes must be >= 1");
  const std::uint64_t base = seed ^ kEvalSeedTag;
  const std::size_t n = static_cast<std::size_t>(cfg.scenes) * static_cast<std::size_t>(cfg.views);
  std::vector<imaging::ImageRGB> scenes(static_cast<std::size_t>(cfg.scenes));
  ParallelFor(scenes.size(), cfg.threads, [&](std::size_t g) {
    scenes[g] = imaging::GenerateSyntheticImage(cfg.spec, Mix64(base ^ (0x5C3E0000ULL + g)));
  });
  std::vector<RetrievalItem> items(n);
  imaging::HarrisOptions harris;
  harris.border = params.patch_side / 2 + 1;
  ParallelFor(n, cfg.threads, [&](std::size_t i) {
    const std::size_t g = i / static_cast<std::size_t>(cfg.views);
    const std::uint64_t vs = Mix64(base ^ Mix64(0x71E30000ULL + i));
    const auto pair = geometry::MakePair(scenes[g], cfg.homography, cfg.crop_size, vs,
                                         static_cast<std::int64_t>(i));
    const imaging::ImageGray view =
        cfg.augment ? imaging::ToGray(imaging::AugmentColor(
                          pair.positive, imaging::SampleAugmentParams(Mix64(vs + 1))))
                    : imaging::ToGray(pair.positive);
    const auto kps = imaging::DetectHarris(view, cfg.max_keypoints, cfg.nms_radius, harris);
    RetrievalItem& item = items[i];
    item.id = static_cast<std::int64_t>(i);
    item.scene = static_cast<int>(g);
    item.locals = descriptor::Describe(params, view, kps, item.id);
    if (item.locals.size() == 0) {
      throw DegenerateError("scene retrieval: view " + std::to_string(i) + " has no keypoints");
    }
    item.global = mining::AggregateGlobalDescriptor(item.locals, cfg.aggregation);
  });
  return items;
}

}  // namespace hardneg::eval
