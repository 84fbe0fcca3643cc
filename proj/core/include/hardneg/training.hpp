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

#ifndef HARDNEG_TRAINING_HPP_
#define HARDNEG_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/descriptor.hpp"
#include "hardneg/geometry.hpp"
#include "hardneg/loss.hpp"
#include "hardneg/mining.hpp"

namespace hardneg::training {

enum class LossKind { kAP, kTriplet };

struct TrainConfig {
  int pairs_per_batch = 8;
  int keypoints_per_crop = 32;
  int top_k = 30;
  mining::MiningStrategy strategy = mining::MiningStrategy::InBatchTopK(30);
  LossKind loss_kind = LossKind::kAP;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 5;
  int steps_per_epoch = 50;
  int crop_size = 128;
  std::uint64_t seed = 0;

  int patch_side = 16;
  int hidden = 128;
  int dim = 32;
  int ap_bins = 25;
  double triplet_margin = 0.4;

  bool augment = true;
  geometry::HomographyConfig homography;
  // Harris candidates detected on each anchor crop before reprojection.
  int detect_keypoints = 128;
  int nms_radius = 4;

  // Coarse-to-fine pool settings.
  int pool_refresh_epochs = 1;
  int pool_keypoints = 64;
  int retrieve_top_r = 1;
  mining::Aggregation aggregation = mining::Aggregation::kSum;
  // Keep the pool's global descriptors as supplied instead of recomputing
  // them from the current model.
  bool pool_external_globals = false;

  int threads = 1;

  // Every violated constraint, one message per field.
  std::vector<std::string> Validate() const;
};

// Rows are laid out pair by pair: the pair's anchors, then its positives in
// matching order.
struct Batch {
  std::vector<imaging::PatchTensor> patches;
  std::vector<imaging::Keypoint> keypoints;
  mining::BatchIndex index;
  std::vector<geometry::CorrespondenceSet> correspondences;
  std::vector<std::int64_t> image_ids;
};

// Samples pairs_per_batch distinct images, builds homography pairs, augments
// both crops independently, detects on the anchor, transfers keypoints to the
// positive and keeps the top keypoints_per_crop survivors. A pair with fewer
// than 4 survivors is resampled up to 8 times.
Batch BuildBatch(const imaging::Corpus& corpus, const TrainConfig& cfg,
                 std::uint64_t batch_seed);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  descriptor::GradBuffer m;
  descriptor::GradBuffer v;
  std::int64_t step = 0;

  static AdamState For(const descriptor::ModelParams& params);
};

// Bias-corrected Adam. Throws NumericalError on non-finite gradients.
void AdamUpdate(descriptor::ModelParams& params, const descriptor::GradBuffer& grads,
                AdamState& state, const AdamConfig& cfg);

struct LossEvaluation {
  double loss = 0.0;
  double mean_neg_sim = 0.0;
  descriptor::GradBuffer grad;
};

// Loss of the mined lists under the current forward pass and its gradient
// with respect to the parameters. Mined indices are treated as constants.
LossEvaluation LossAndGradient(const descriptor::ModelParams& params,
                               const descriptor::ForwardResult& forward,
                               const mining::MinedNegatives& mined,
                               const TrainConfig& cfg);

// Dispatches on cfg.strategy. `pool` is required for coarse-to-fine mining.
mining::MinedNegatives Mine(const TrainConfig& cfg, const mining::BatchIndex& index,
                            const descriptor::RowMatrix& descs, std::uint64_t seed,
                            const mining::NegativePool* pool = nullptr);

// Fixed per-image keypoints used to describe pool images.
struct PoolImages {
  std::vector<std::int64_t> ids;
  std::vector<imaging::ImageGray> images;
  std::vector<std::vector<imaging::Keypoint>> keypoints;
  // Optional externally supplied globals, parallel to ids.
  std::vector<mining::GlobalDescriptor> external_globals;
};

PoolImages PreparePool(const imaging::Corpus& pool, const TrainConfig& cfg);

// Describes every pool image with the current model.
mining::NegativePool RefreshPool(const descriptor::ModelParams& params,
                                 const PoolImages& images, const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_neg_sim = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double seconds = 0.0;
};

struct TrainResult {
  descriptor::ModelParams params;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Step seeds are seed ^ (epoch * 65536 + step).
TrainResult Train(const imaging::Corpus& corpus, const TrainConfig& cfg,
                  const PoolImages* pool = nullptr, const EpochCallback& on_epoch = {});

}  // namespace hardneg::training

#endif  // HARDNEG_TRAINING_HPP_
