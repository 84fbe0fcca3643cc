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

#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "hardneg/corpus.hpp"
#include "hardneg/error.hpp"
#include "hardneg/training.hpp"
#include "test_util.hpp"

namespace hardneg::training {
namespace {

TrainConfig SmallConfig() {
  TrainConfig cfg;
  cfg.pairs_per_batch = 4;
  cfg.keypoints_per_crop = 16;
  cfg.top_k = 10;
  cfg.strategy = mining::MiningStrategy::InBatchTopK(10);
  cfg.crop_size = 96;
  cfg.patch_side = 8;
  cfg.hidden = 32;
  cfg.dim = 16;
  cfg.detect_keypoints = 64;
  cfg.epochs = 2;
  cfg.steps_per_epoch = 3;
  cfg.seed = 5;
  return cfg;
}

const imaging::Corpus& SmallCorpus() {
  static const imaging::Corpus corpus =
      imaging::GenerateCorpus(imaging::CorpusSpec{160, 160, 12}, 8, 77);
  return corpus;
}

TEST(Config, DefaultsAreValid) {
  EXPECT_TRUE(TrainConfig{}.Validate().empty());
  const TrainConfig d;
  EXPECT_EQ(d.pairs_per_batch, 8);
  EXPECT_EQ(d.keypoints_per_crop, 32);
  EXPECT_EQ(d.top_k, 30);
  EXPECT_DOUBLE_EQ(d.lr, 1e-3);
  EXPECT_DOUBLE_EQ(d.adam_beta1, 0.9);
  EXPECT_DOUBLE_EQ(d.adam_beta2, 0.999);
  EXPECT_DOUBLE_EQ(d.adam_eps, 1e-8);
  EXPECT_EQ(d.crop_size, 128);
  EXPECT_EQ(d.ap_bins, 25);
}

TEST(Config, ReportsEveryProblem) {
  TrainConfig cfg;
  cfg.pairs_per_batch = 1;
  cfg.keypoints_per_crop = 3;
  cfg.top_k = 0;
  cfg.lr = 0.0;
  cfg.patch_side = 12;
  cfg.homography.scale_lo = 2.0;
  const auto problems = cfg.Validate();
  EXPECT_GE(problems.size(), 6u);
  EXPECT_THROW(Train(SmallCorpus(), cfg), ValidationError);
}

TEST(BuildBatch, IdentityWithoutAugmentationGivesEqualPatches) {
  TrainConfig cfg = SmallConfig();
  cfg.homography = geometry::HomographyConfig::IdentityOnly();
  cfg.augment = false;
  const Batch b = BuildBatch(SmallCorpus(), cfg, 11);
  ASSERT_FALSE(b.index.pairing.empty());
  for (const auto& [a, p] : b.index.pairing) {
    EXPECT_EQ(b.patches[a], b.patches[p]);
    EXPECT_NEAR(b.keypoints[a].x, b.keypoints[p].x, 1e-9);
    EXPECT_NEAR(b.keypoints[a].y, b.keypoints[p].y, 1e-9);
  }
}

TEST(BuildBatch, CountsAndStructure) {
  const TrainConfig cfg = SmallConfig();
  const Batch b = BuildBatch(SmallCorpus(), cfg, 12);
  EXPECT_NO_THROW(b.index.Validate());
  EXPECT_EQ(b.image_ids.size(), 4u);
  EXPECT_EQ(b.index.distinct_images(), 4u);
  std::size_t anchors = 0, positives = 0;
  for (const auto& r : b.index.records) {
    (r.role == mining::CropRole::kAnchor ? anchors : positives)++;
  }
  EXPECT_EQ(anchors, positives);
  EXPECT_EQ(anchors, b.index.pairing.size());
  EXPECT_LE(anchors, 4u * 16u);
  EXPECT_EQ(b.patches.size(), b.index.records.size());
  std::size_t total = 0;
  for (const auto& c : b.correspondences) {
    EXPECT_GE(c.size(), 4u);
    total += c.size();
  }
  EXPECT_EQ(total, anchors);
  for (const auto& p : b.patches) EXPECT_EQ(p.side, 8);
}

TEST(BuildBatch, DeterministicAndThreadIndependent) {
  TrainConfig cfg = SmallConfig();
  const Batch a = BuildBatch(SmallCorpus(), cfg, 13);
  cfg.threads = 4;
  const Batch b = BuildBatch(SmallCorpus(), cfg, 13);
  const Batch c = BuildBatch(SmallCorpus(), cfg, 14);
  EXPECT_EQ(a.patches, b.patches);
  EXPECT_EQ(a.image_ids, b.image_ids);
  EXPECT_NE(a.patches, c.patches);
}

TEST(BuildBatch, RejectsSmallCorpus) {
  TrainConfig cfg = SmallConfig();
  cfg.pairs_per_batch = 9;
  EXPECT_THROW(BuildBatch(SmallCorpus(), cfg, 1), ValidationError);
}

descriptor::ModelParams Scalar(double v) {
  descriptor::ModelParams p;
  p.SetZero(8, 8, 8);
  p.w1(0, 0) = v;
  return p;
}

TEST(Adam, FirstStepMovesByLearningRate) {
  descriptor::ModelParams p = Scalar(0.5);
  descriptor::GradBuffer g;
  g.SetZero(8, 8, 8);
  g.w1(0, 0) = 1.0;
  AdamState s = AdamState::For(p);
  AdamUpdate(p, g, s, {});
  EXPECT_NEAR(p.w1(0, 0) - 0.5, -0.001, 1e-6);
  EXPECT_EQ(p.w1(0, 1), 0.0);
  EXPECT_EQ(s.step, 1);
}

TEST(Adam, ZeroGradientsLeaveParamsAndDecayMoments) {
  descriptor::ModelParams p = Scalar(0.5);
  descriptor::GradBuffer g;
  g.SetZero(8, 8, 8);
  g.w1(0, 0) = 2.0;
  AdamState s = AdamState::For(p);
  AdamUpdate(p, g, s, {});
  const double m = s.m.w1(0, 0), v = s.v.w1(0, 0);
  const descriptor::ModelParams before = p;
  g.w1(0, 0) = 0.0;
  s.m.w1(0, 0) = 0.0;
  s.v.w1(0, 0) = 0.0;
  AdamUpdate(p, g, s, {});
  EXPECT_EQ(p.w1, before.w1);
  EXPECT_EQ(p.b2, before.b2);
  // Restore the moments and check decay on a fresh zero-gradient step.
  s.m.w1(0, 0) = m;
  s.v.w1(0, 0) = v;
  AdamUpdate(p, g, s, {});
  EXPECT_DOUBLE_EQ(s.m.w1(0, 0), 0.9 * m);
  EXPECT_DOUBLE_EQ(s.v.w1(0, 0), 0.999 * v);
  EXPECT_GE(s.v.w1(0, 0), 0.0);
}

TEST(Adam, UpdatesScaleWithLearningRate) {
  CounterRng rng(3);
  descriptor::GradBuffer g;
  g.SetZero(8, 8, 8);
  const auto spans = g.tensors();
  for (double& x : spans[0]) x = rng.Normal();
  const descriptor::ModelParams start = descriptor::InitParams(8, 8, 8, 1);
  auto step = [&](double lr) {
    descriptor::ModelParams p = start;
    AdamState s = AdamState::For(p);
    AdamUpdate(p, g, s, {lr});
    return descriptor::RowMatrix(p.w1 - start.w1);
  };
  const auto d1 = step(1e-3);
  const auto d3 = step(3e-3);
  EXPECT_LT((d3 - 3.0 * d1).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Adam, RejectsNonFiniteAndMismatchedGradients) {
  descriptor::ModelParams p = Scalar(0.5);
  descriptor::GradBuffer g;
  g.SetZero(8, 8, 8);
  g.b1(2) = std::nan("");
  AdamState s = AdamState::For(p);
  EXPECT_THROW(AdamUpdate(p, g, s, {}), NumericalError);
  descriptor::GradBuffer small;
  small.SetZero(8, 4, 8);
  EXPECT_THROW(AdamUpdate(p, small, s, {}), ValidationError);
}

double BatchLossAt(const descriptor::ModelParams& params, const Batch& b,
                   const mining::MinedNegatives& mined, const TrainConfig& cfg) {
  const auto fwd = descriptor::Forward(params, b.patches, b.keypoints);
  return LossAndGradient(params, fwd, mined, cfg).loss;
}

void CheckModelGradient(LossKind kind) {
  TrainConfig cfg = SmallConfig();
  cfg.pairs_per_batch = 2;
  cfg.keypoints_per_crop = 6;
  cfg.hidden = 8;
  cfg.dim = 8;
  cfg.loss_kind = kind;
  const Batch b = BuildBatch(SmallCorpus(), cfg, 21);
  descriptor::ModelParams params = descriptor::InitParams(8, 8, 8, 4);
  const auto fwd = descriptor::Forward(params, b.patches, b.keypoints);
  const auto mined = Mine(cfg, b.index, fwd.descriptors.rows, 21);
  const auto eval = LossAndGradient(params, fwd, mined, cfg);
  const auto grads = eval.grad.tensors();
  auto tensors = params.tensors();
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t].size(); ++i) {
      const double keep = tensors[t][i];
      tensors[t][i] = keep + h;
      const double up = BatchLossAt(params, b, mined, cfg);
      tensors[t][i] = keep - h;
      const double down = BatchLossAt(params, b, mined, cfg);
      tensors[t][i] = keep;
      worst = std::max(worst, testing::RelErr((up - down) / (2 * h), grads[t][i]));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(LossAndGradient, ModelGradientMatchesFiniteDifferencesAP) {
  CheckModelGradient(LossKind::kAP);
}

TEST(LossAndGradient, ModelGradientMatchesFiniteDifferencesTriplet) {
  CheckModelGradient(LossKind::kTriplet);
}

TEST(Mine, TopKNegativesAreAtLeastAsHardAsRandom) {
  const TrainConfig cfg = SmallConfig();
  const auto params = descriptor::InitParams(8, 32, 16, 9);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Batch b = BuildBatch(SmallCorpus(), cfg, seed);
    const auto rows = descriptor::Forward(params, b.patches, b.keypoints).descriptors.rows;
    const auto top = mining::MineInBatch(mining::MiningStrategy::InBatchTopK(10), b.index, rows, seed);
    const auto rnd =
        mining::MineInBatch(mining::MiningStrategy::InBatchRandom(10), b.index, rows, seed);
    for (std::size_t i = 0; i < top.per_anchor.size(); ++i) {
      double st = 0.0, sr = 0.0;
      for (const auto& n : top.per_anchor[i].negatives) st += n.similarity;
      for (const auto& n : rnd.per_anchor[i].negatives) sr += n.similarity;
      EXPECT_GE(st / top.per_anchor[i].negatives.size(),
                sr / rnd.per_anchor[i].negatives.size());
    }
  }
}

TEST(Mine, CoarseToFineNeedsPool) {
  TrainConfig cfg = SmallConfig();
  cfg.strategy = mining::MiningStrategy::CoarseToFineTopK(10);
  EXPECT_THROW(Train(SmallCorpus(), cfg), ValidationError);
}

TEST(Train, ZeroEpochsReturnsInitialParams) {
  TrainConfig cfg = SmallConfig();
  cfg.epochs = 0;
  const auto r = Train(SmallCorpus(), cfg);
  EXPECT_TRUE(r.report.epochs.empty());
  const auto init = descriptor::InitParams(8, 32, 16, cfg.seed);
  EXPECT_EQ(r.params.w1, init.w1);
  EXPECT_EQ(r.params.b2, init.b2);
}

TEST(Train, DeterministicAcrossRunsAndThreads) {
  TrainConfig cfg = SmallConfig();
  std::vector<EpochStats> seen;
  const auto a = Train(SmallCorpus(), cfg, nullptr, [&](const EpochStats& s) { seen.push_back(s); });
  cfg.threads = 3;
  const auto b = Train(SmallCorpus(), cfg);
  EXPECT_EQ(descriptor::CheckpointToString(a.params), descriptor::CheckpointToString(b.params));
  ASSERT_EQ(a.report.epochs.size(), 2u);
  ASSERT_EQ(seen.size(), 2u);
  for (std::size_t e = 0; e < 2; ++e) {
    EXPECT_EQ(seen[e].epoch, static_cast<int>(e));
    EXPECT_EQ(a.report.epochs[e].mean_loss, b.report.epochs[e].mean_loss);
    EXPECT_EQ(a.report.epochs[e].mean_neg_sim, b.report.epochs[e].mean_neg_sim);
    EXPECT_TRUE(std::isfinite(a.report.epochs[e].mean_loss));
  }
  cfg.seed = 6;
  const auto c = Train(SmallCorpus(), cfg);
  EXPECT_NE(descriptor::CheckpointToString(a.params), descriptor::CheckpointToString(c.params));
}

TEST(Train, CoarseToFineWithPool) {
  TrainConfig cfg = SmallConfig();
  cfg.strategy = mining::MiningStrategy::CoarseToFineTopK(10);
  cfg.pool_keypoints = 16;
  const auto pool_corpus = imaging::GenerateCorpus(imaging::CorpusSpec{128, 128, 12}, 6, 91);
  const PoolImages pool = PreparePool(pool_corpus, cfg);
  const auto r = Train(SmallCorpus(), cfg, &pool);
  ASSERT_EQ(r.report.epochs.size(), 2u);
  EXPECT_TRUE(std::isfinite(r.report.epochs[1].mean_loss));
  const auto refreshed = RefreshPool(r.params, pool, cfg);
  EXPECT_LE(refreshed.size(), 6u);
  EXPECT_NO_THROW(refreshed.Validate());
}

// Two far-apart texture classes: horizontal versus vertical stripes, each
// patch with independent pixel noise.
imaging::PatchTensor Stripes(bool horizontal, CounterRng& rng, double noise) {
  imaging::PatchTensor p;
  p.side = 8;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double t = horizontal ? y : x;
      p.values.push_back(0.5 + 0.4 * std::sin(t * std::numbers::pi / 2 + 0.5) +
                         noise * rng.Normal());
    }
  }
  return p;
}

TEST(Train, SeparableToyDataReachesLowLoss) {
  const double kNoise = 0.3;
  double first = -1;
  TrainConfig cfg = SmallConfig();
  cfg.strategy = mining::MiningStrategy::InBatchAll();
  cfg.hidden = 16;
  cfg.dim = 8;
  auto params = descriptor::InitParams(8, 16, 8, 1);
  AdamState adam = AdamState::For(params);
  CounterRng rng(17);
  double last = 1.0;
  int steps = 0;
  for (; steps < 250 && last >= 0.05; ++steps) {
    Batch b;
    for (std::size_t pair = 0; pair < 2; ++pair) {
      const std::int64_t id = static_cast<std::int64_t>(pair) + 1;
      const std::size_t base = b.patches.size();
      for (int k = 0; k < 8; ++k) {
        b.patches.push_back(Stripes(pair == 0, rng, kNoise));
        b.index.records.push_back({id, mining::CropRole::kAnchor, pair});
      }
      for (int k = 0; k < 8; ++k) {
        b.patches.push_back(Stripes(pair == 0, rng, kNoise));
        b.index.records.push_back({id, mining::CropRole::kPositive, pair});
      }
      for (std::size_t k = 0; k < 8; ++k) b.index.pairing.emplace_back(base + k, base + 8 + k);
    }
    const auto fwd = descriptor::Forward(params, b.patches);
    const auto mined = Mine(cfg, b.index, fwd.descriptors.rows, 0);
    const auto eval = LossAndGradient(params, fwd, mined, cfg);
    last = eval.loss;
    if (first < 0) first = last;
    AdamUpdate(params, eval.grad, adam, {});
  }
  EXPECT_LT(last, 0.05) << "after " << steps << " steps";
  EXPECT_GT(first, 0.5);
}

}  // namespace
}  // namespace hardneg::training
