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

#include "hardneg/training.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/imaging.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/rng.hpp"

namespace hardneg::training {
namespace {

constexpr std::uint64_t kSelectStream = 0x5E;
constexpr int kMaxPairRetries = 8;
constexpr int kMinSurvivors = 4;

struct PairSample {
  std::vector<imaging::PatchTensor> anchor_patches;
  std::vector<imaging::PatchTensor> positive_patches;
  std::vector<imaging::Keypoint> anchor_kps;
  std::vector<imaging::Keypoint> positive_kps;
  geometry::CorrespondenceSet correspondences;
};

PairSample SamplePair(const imaging::ImageRGB& img, std::int64_t id, const TrainConfig& cfg,
                      std::uint64_t pair_seed) {
  const int margin = cfg.patch_side / 2 + 1;
  for (int attempt = 0; attempt <= kMaxPairRetries; ++attempt) {
    const std::uint64_t seed = Mix64(pair_seed ^ Mix64(static_cast<std::uint64_t>(attempt)));
    auto pair = geometry::MakePair(img, cfg.homography, cfg.crop_size, seed, id);
    imaging::ImageGray anchor, positive;
    if (cfg.augment) {
      anchor = imaging::ToGray(
          imaging::AugmentColor(pair.anchor, imaging::SampleAugmentParams(Mix64(seed + 1))));
      positive = imaging::ToGray(
          imaging::AugmentColor(pair.positive, imaging::SampleAugmentParams(Mix64(seed + 2))));
    } else {
      anchor = imaging::ToGray(pair.anchor);
      positive = imaging::ToGray(pair.positive);
    }
    imaging::HarrisOptions harris;
    harris.border = margin;
    const auto kps = imaging::DetectHarris(anchor, cfg.detect_keypoints, cfg.nms_radius, harris);
    auto corrs = geometry::ReprojectKeypoints(kps, pair.h_ap, cfg.crop_size, cfg.crop_size, margin);
    if (corrs.size() < static_cast<std::size_t>(kMinSurvivors)) continue;
    if (corrs.size() > static_cast<std::size_t>(cfg.keypoints_per_crop)) {
      corrs.pairs.resize(static_cast<std::size_t>(cfg.keypoints_per_crop));
    }
    PairSample out;
    for (const auto& c : corrs.pairs) {
      const imaging::Keypoint a{c.anchor.x(), c.anchor.y(), kps[c.source_index].score};
      const imaging::Keypoint p{c.positive.x(), c.positive.y(), kps[c.source_index].score};
      out.anchor_kps.push_back(a);
      out.positive_kps.push_back(p);
      out.anchor_patches.push_back(imaging::ExtractPatch(anchor, a, cfg.patch_side));
      out.positive_patches.push_back(imaging::ExtractPatch(positive, p, cfg.patch_side));
    }
    out.correspondences = std::move(corrs);
    return out;
  }
  throw Error("image " + std::to_string(id) + " yields fewer than " +
              std::to_string(kMinSurvivors) + " correspondences after " +
              std::to_string(kMaxPairRetries) + " resamples");
}

void CheckFinite(const descriptor::ParamTensors& t, const char* what) {
  static constexpr const char* kNames[] = {"w1", "b1", "w2", "b2"};
  const auto spans = t.tensors();
  for (std::size_t k = 0; k < spans.size(); ++k) {
    for (std::size_t i = 0; i < spans[k].size(); ++i) {
      if (!std::isfinite(spans[k][i])) {
        throw NumericalError(std::string(what) + ": non-finite value in " + kNames[k] +
                             "[" + std::to_string(i) + "]");
      }
    }
  }
}

}  // namespace

std::vector<std::string> TrainConfig::Validate() const {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  need(pairs_per_batch >= 2, "pairs_per_batch must be >= 2");
  need(keypoints_per_crop >= 4, "keypoints_per_crop must be >= 4");
  need(top_k >= 1, "top_k must be >= 1");
  need(lr > 0.0, "lr must be > 0");
  need(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1 must lie in [0, 1)");
  need(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2 must lie in [0, 1)");
  need(adam_eps > 0.0, "adam_eps must be > 0");
  need(epochs >= 0, "epochs must be >= 0");
  need(steps_per_epoch >= 1, "steps_per_epoch must be >= 1");
  need(patch_side == 8 || patch_side == 16 || patch_side == 32, "patch_side must be 8, 16 or 32");
  need(crop_size >= 2 * patch_side + 8, "crop_size is too small for patch_side");
  need(dim >= 8 && hidden >= dim, "model dims require dim >= 8 and hidden >= dim");
  need(ap_bins >= 2, "ap_bins must be >= 2");
  need(triplet_margin > 0.0, "triplet_margin must be > 0");
  need(detect_keypoints >= keypoints_per_crop, "detect_keypoints must be >= keypoints_per_crop");
  need(nms_radius >= 1, "nms_radius must be >= 1");
  need(pool_refresh_epochs >= 1, "pool_refresh_epochs must be >= 1");
  need(pool_keypoints >= 1, "pool_keypoints must be >= 1");
  need(retrieve_top_r >= 1, "retrieve_top_r must be >= 1");
  need(threads >= 1, "threads must be >= 1");
  try {
    geometry::Validate(homography);
  } catch (const ValidationError& e) {
    problems.push_back(e.what());
  }
  return problems;
}

Batch BuildBatch(const imaging::Corpus& corpus, const TrainConfig& cfg,
                 std::uint64_t batch_seed) {
  const auto m = static_cast<std::size_t>(cfg.pairs_per_batch);
  if (corpus.size() < m) {
    throw ValidationError("corpus has " + std::to_string(corpus.size()) +
                          " images, fewer than pairs_per_batch = " + std::to_string(m));
  }
  std::vector<std::size_t> pick(corpus.size());
  std::iota(pick.begin(), pick.end(), 0);
  CounterRng rng(batch_seed, kSelectStream);
  PartialShuffle(pick, m, rng);
  pick.resize(m);

  std::vector<PairSample> samples(m);
  ParallelFor(m, cfg.threads, [&](std::size_t i) {
    const std::uint64_t pair_seed = Mix64(batch_seed ^ Mix64(0x9A1 + i));
    samples[i] = SamplePair(corpus.images[pick[i]], corpus.ids[pick[i]], cfg, pair_seed);
  });

  Batch batch;
  for (std::size_t i = 0; i < m; ++i) {
    PairSample& s = samples[i];
    const std::int64_t id = corpus.ids[pick[i]];
    const std::size_t base = batch.patches.size();
    const std::size_t n = s.anchor_patches.size();
    for (std::size_t k = 0; k < n; ++k) {
      batch.patches.push_back(std::move(s.anchor_patches[k]));
      batch.keypoints.push_back(s.anchor_kps[k]);
      batch.index.records.push_back({id, mining::CropRole::kAnchor, i});
    }
    for (std::size_t k = 0; k < n; ++k) {
      batch.patches.push_back(std::move(s.positive_patches[k]));
      batch.keypoints.push_back(s.positive_kps[k]);
      batch.index.records.push_back({id, mining::CropRole::kPositive, i});
    }
    for (std::size_t k = 0; k < n; ++k) batch.index.pairing.emplace_back(base + k, base + n + k);
    batch.correspondences.push_back(std::move(s.correspondences));
    batch.image_ids.push_back(id);
  }
  return batch;
}

AdamState AdamState::For(const descriptor::ModelParams& params) {
  AdamState s;
  s.m.SetZero(params.patch_side, params.hidden, params.dim);
  s.v.SetZero(params.patch_side, params.hidden, params.dim);
  return s;
}

void AdamUpdate(descriptor::ModelParams& params, const descriptor::GradBuffer& grads,
                AdamState& state, const AdamConfig& cfg) {
  if (grads.parameter_count() != params.parameter_count() ||
      state.m.parameter_count() != params.parameter_count()) {
    throw ValidationError("adam: gradient or state shape differs from parameters");
  }
  CheckFinite(grads, "adam gradient");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      m[k][i] = cfg.beta1 * m[k][i] + (1.0 - cfg.beta1) * g[k][i];
      v[k][i] = cfg.beta2 * v[k][i] + (1.0 - cfg.beta2) * g[k][i] * g[k][i];
      const double mhat = m[k][i] / c1;
      const double vhat = v[k][i] / c2;
      p[k][i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

LossEvaluation LossAndGradient(const descriptor::ModelParams& params,
                               const descriptor::ForwardResult& forward,
                               const mining::MinedNegatives& mined, const TrainConfig& cfg) {
  const auto& rows = forward.descriptors.rows;
  const std::vector<loss::RankedList> lists = loss::BuildRankedLists(mined, rows);
  loss::BatchLoss batch_loss;
  if (cfg.loss_kind == LossKind::kAP) {
    batch_loss = loss::APLossBatch(lists, loss::APConfig{cfg.ap_bins});
  } else {
    batch_loss = loss::TripletLossBatch(lists, loss::TripletConfig{cfg.triplet_margin});
  }
  const auto sim_grads = loss::CollectSimilarityGrads(lists, batch_loss);
  const descriptor::RowMatrix d_rows =
      loss::BackpropSimilarities(sim_grads, rows, mined.extra_rows);
  LossEvaluation out;
  out.loss = batch_loss.value;
  out.mean_neg_sim = mined.MeanSimilarity();
  out.grad = descriptor::Backward(params, forward.cache, d_rows);
  return out;
}

mining::MinedNegatives Mine(const TrainConfig& cfg, const mining::BatchIndex& index,
                            const descriptor::RowMatrix& descs, std::uint64_t seed,
                            const mining::NegativePool* pool) {
  if (cfg.strategy.kind == mining::MiningStrategy::Kind::kCoarseToFineTopK) {
    if (pool == nullptr) throw ValidationError("coarse-to-fine mining requires a pool");
    return mining::MineCoarseToFine(cfg.strategy.k, index, descs, *pool,
                                    static_cast<std::size_t>(cfg.retrieve_top_r),
                                    cfg.aggregation);
  }
  return mining::MineInBatch(cfg.strategy, index, descs, seed);
}

PoolImages PreparePool(const imaging::Corpus& pool, const TrainConfig& cfg) {
  PoolImages out;
  out.ids = pool.ids;
  out.images.resize(pool.size());
  out.keypoints.resize(pool.size());
  imaging::HarrisOptions harris;
  harris.border = cfg.patch_side / 2 + 1;
  ParallelFor(pool.size(), cfg.threads, [&](std::size_t i) {
    out.images[i] = imaging::ToGray(pool.images[i]);
    out.keypoints[i] =
        imaging::DetectHarris(out.images[i], cfg.pool_keypoints, cfg.nms_radius, harris);
  });
  return out;
}

mining::NegativePool RefreshPool(const descriptor::ModelParams& params,
                                 const PoolImages& images, const TrainConfig& cfg) {
  const std::size_t n = images.ids.size();
  if (cfg.pool_external_globals && images.external_globals.size() != n) {
    throw ValidationError("pool: external globals missing for some images");
  }
  mining::NegativePool pool;
  pool.ids = images.ids;
  pool.globals.resize(n);
  pool.locals.resize(n);
  ParallelFor(n, cfg.threads, [&](std::size_t i) {
    pool.locals[i] =
        descriptor::Describe(params, images.images[i], images.keypoints[i], images.ids[i]);
    if (cfg.pool_external_globals) {
      pool.globals[i] = images.external_globals[i];
    } else if (pool.locals[i].size() > 0) {
      pool.globals[i] = mining::AggregateGlobalDescriptor(pool.locals[i], cfg.aggregation);
    }
  });
  // Images without keypoints cannot be retrieved.
  mining::NegativePool kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (pool.locals[i].size() == 0) continue;
    kept.ids.push_back(pool.ids[i]);
    kept.globals.push_back(std::move(pool.globals[i]));
    kept.locals.push_back(std::move(pool.locals[i]));
  }
  kept.Validate();
  return kept;
}

TrainResult Train(const imaging::Corpus& corpus, const TrainConfig& cfg,
                  const PoolImages* pool_images, const EpochCallback& on_epoch) {
  using Clock = std::chrono::steady_clock;
  const auto problems = cfg.Validate();
  if (!problems.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw ValidationError(msg);
  }
  const bool coarse_to_fine = cfg.strategy.kind == mining::MiningStrategy::Kind::kCoarseToFineTopK;
  if (coarse_to_fine && pool_images == nullptr) {
    throw ValidationError("coarse-to-fine mining requires a pool");
  }
  TrainResult result;
  result.params = descriptor::InitParams(cfg.patch_side, cfg.hidden, cfg.dim, cfg.seed);
  AdamState adam = AdamState::For(result.params);
  const AdamConfig adam_cfg{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  mining::NegativePool pool;
  const auto start = Clock::now();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto epoch_start = Clock::now();
    if (coarse_to_fine && epoch % cfg.pool_refresh_epochs == 0) {
      pool = RefreshPool(result.params, *pool_images, cfg);
    }
    double loss_sum = 0.0;
    double sim_sum = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      const std::uint64_t step_seed =
          cfg.seed ^ (static_cast<std::uint64_t>(epoch) * 65536u + static_cast<std::uint64_t>(step));
      const Batch batch = BuildBatch(corpus, cfg, step_seed);
      const auto forward = descriptor::Forward(result.params, batch.patches, batch.keypoints);
      const auto mined =
          Mine(cfg, batch.index, forward.descriptors.rows, step_seed, coarse_to_fine ? &pool : nullptr);
      const LossEvaluation eval = LossAndGradient(result.params, forward, mined, cfg);
      if (!std::isfinite(eval.loss)) {
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                             std::to_string(step));
      }
      AdamUpdate(result.params, eval.grad, adam, adam_cfg);
      loss_sum += eval.loss;
      sim_sum += eval.mean_neg_sim;
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / cfg.steps_per_epoch;
    stats.mean_neg_sim = sim_sum / cfg.steps_per_epoch;
    stats.seconds = std::chrono::duration<double>(Clock::now() - epoch_start).count();
    result.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.report.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace hardneg::training
