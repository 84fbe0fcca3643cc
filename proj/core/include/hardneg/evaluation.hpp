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

#ifndef HARDNEG_EVALUATION_HPP_
#define HARDNEG_EVALUATION_HPP_

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "hardneg/corpus.hpp"
#include "hardneg/descriptor.hpp"
#include "hardneg/geometry.hpp"
#include "hardneg/mining.hpp"

namespace hardneg::eval {

using descriptor::DescriptorSet;
using imaging::Keypoint;

// Namespace tag mixed into user seeds so evaluation draws never coincide
// with training draws.
inline constexpr std::uint64_t kEvalSeedTag = 0x45564C5441470000ULL;

struct Match {
  std::size_t a = 0;
  std::size_t b = 0;
  double similarity = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct MatchSet {
  std::vector<Match> matches;
  std::int64_t id_a = 0;
  std::int64_t id_b = 0;

  std::size_t size() const noexcept { return matches.size(); }
};

// (i, j) is kept iff j is the best match of i and i the best match of j;
// ties resolve to the lowest index. Sorted by i. Empty inputs give an empty
// set; mismatched dimensions throw ValidationError.
MatchSet MatchMutualNN(const DescriptorSet& a, const DescriptorSet& b);

// Fraction of matches with |h_gt(kp_a) - kp_b| <= t for each threshold t.
// Throws ValidationError when `matches` is empty.
std::map<int, double> PairAccuracy(const MatchSet& matches, const std::vector<Keypoint>& kps_a,
                                   const std::vector<Keypoint>& kps_b,
                                   const geometry::Homography& h_gt,
                                   const std::vector<int>& thresholds);

struct MmaResult {
  // Mean over pairs with at least one match.
  std::map<int, double> accuracy;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
};

struct MmaInput {
  const MatchSet* matches = nullptr;
  const std::vector<Keypoint>* kps_a = nullptr;
  const std::vector<Keypoint>* kps_b = nullptr;
  const geometry::Homography* h_gt = nullptr;
};

MmaResult ComputeMMA(const std::vector<MmaInput>& pairs, const std::vector<int>& thresholds);

struct EvalPair {
  imaging::ImageGray image_a;
  imaging::ImageGray image_b;
  geometry::Homography h_gt;
  std::vector<Keypoint> kps_a;
  std::vector<Keypoint> kps_b;
  DescriptorSet desc_a;
  DescriptorSet desc_b;
  std::int64_t source_image_id = 0;
};

struct EvalPairConfig {
  int crop_size = 128;
  geometry::HomographyConfig homography;
  bool augment = true;
  int max_keypoints = 128;
  int nms_radius = 4;
  int patch_side = 16;
  // Keypoints of B are the exact images of A's keypoints instead of an
  // independent detection.
  bool reproject_keypoints = false;
  // Crops with fewer keypoints on either side are redrawn, up to
  // max_attempts times; the last draw is kept.
  int min_keypoints = 16;
  int max_attempts = 8;
};

// Pair i crops a corpus image chosen by the namespaced seed and detects
// keypoints on both crops. Descriptors are left empty.
std::vector<EvalPair> MakeEvalPairs(const imaging::Corpus& corpus, const EvalPairConfig& cfg,
                                    int count, std::uint64_t seed, int threads = 1);

void DescribeEvalPairs(const descriptor::ModelParams& params, std::vector<EvalPair>& pairs,
                       int threads = 1);

// One-hot descriptors: a keypoint in A and its nearest unused keypoint in B
// within `pixel_thresh` share a coordinate; every other keypoint gets a
// coordinate of its own.
void AssignOracleDescriptors(std::vector<EvalPair>& pairs, double pixel_thresh = 3.0);

struct MatchingConfig {
  double pixel_thresh = 3.0;
  std::vector<int> thresholds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  geometry::RansacConfig ransac;
  int threads = 1;
};

struct MatchingReport {
  std::map<int, double> mma;
  double eta = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t pairs = 0;
  // Pairs without a single mutual match; left out of the MMA mean.
  std::size_t skipped = 0;
};

struct PairMetrics {
  std::size_t matches = 0;
  std::size_t correct = 0;
  std::size_t ground_truth = 0;
  std::size_t correct_ground_truth = 0;
  bool homography_correct = false;
  std::map<int, double> accuracy;
};

// Metrics of a single described pair.
PairMetrics EvaluatePair(const EvalPair& pair, const MatchingConfig& cfg, std::uint64_t seed);

// Averages over pairs: eta over all pairs, precision over pairs with
// matches, recall over pairs with ground-truth correspondences.
MatchingReport ComputeMatchingMetrics(const std::vector<EvalPair>& pairs,
                                      const MatchingConfig& cfg = {});

// Database ids by descending dot product with the query; ties by lowest id.
std::vector<std::int64_t> RankByGlobal(
    const mining::GlobalDescriptor& query,
    const std::vector<std::pair<std::int64_t, mining::GlobalDescriptor>>& database);

struct RerankResult {
  std::vector<std::int64_t> ids;
  // Inlier count per entry of `ids`.
  std::vector<std::size_t> inliers;
};

// Candidates (in global-rank order) sorted by descending RANSAC inlier count
// of their mutual matches with the query; failures score zero and ties keep
// the global order.
RerankResult RerankByInliers(const DescriptorSet& query,
                             const std::vector<const DescriptorSet*>& candidates,
                             const geometry::RansacConfig& cfg);

// Mean over relevant items of the precision at their rank; relevant items
// missing from the ranking contribute zero. Throws ValidationError for an
// empty relevant set.
double AveragePrecision(const std::vector<std::int64_t>& ranked,
                        const std::set<std::int64_t>& relevant);
double PrecisionAtK(const std::vector<std::int64_t>& ranked,
                    const std::set<std::int64_t>& relevant, int k);
double RecallAtN(const std::vector<std::int64_t>& ranked,
                 const std::set<std::int64_t>& relevant, int n);

struct RetrievalReport {
  double map = 0.0;
  std::map<int, double> mp;
  std::map<int, double> recall;
  std::size_t queries = 0;
};

inline const std::vector<int> kRetrievalCutoffs = {1, 5, 10};

RetrievalReport ComputeRetrievalMetrics(const std::vector<std::vector<std::int64_t>>& rankings,
                                        const std::vector<std::set<std::int64_t>>& relevant);

// One database image: its scene label, local and global descriptors.
struct RetrievalItem {
  std::int64_t id = 0;
  int scene = 0;
  DescriptorSet locals;
  mining::GlobalDescriptor global;
};

struct RetrievalConfig {
  int rerank_depth = 100;
  geometry::RansacConfig ransac;
  int threads = 1;
};

struct RetrievalEvaluation {
  RetrievalReport before;
  RetrievalReport after;
};

// Every item queries all other items; relevant = same scene.
RetrievalEvaluation EvaluateRetrieval(const std::vector<RetrievalItem>& items,
                                      const RetrievalConfig& cfg = {});

struct PlantedRetrievalConfig {
  int scenes = 8;
  int views = 4;
  int dim = 32;
  // Scene points shared by all views of a scene.
  int scene_points = 60;
  // Extra points unique to each view.
  int clutter_points = 20;
  double descriptor_noise = 0.05;
  // Noise added to the scene global before renormalization.
  double global_noise = 1.5;
  double keypoint_noise = 0.3;
  int frame = 256;
};

// Scene groups with known geometry: views share warped scene points whose
// descriptors agree up to noise, while the globals are noisy enough to
// misrank scenes.
std::vector<RetrievalItem> MakePlantedRetrievalSet(const PlantedRetrievalConfig& cfg,
                                                   std::uint64_t seed);

struct SceneRetrievalConfig {
  int scenes = 4;
  int views = 3;
  imaging::CorpusSpec spec{192, 192, 12};
  int crop_size = 128;
  geometry::HomographyConfig homography;
  bool augment = true;
  int max_keypoints = 128;
  int nms_radius = 4;
  mining::Aggregation aggregation = mining::Aggregation::kSum;
  int threads = 1;
};

// Renders G synthetic scenes, takes V warped and augmented views of each and
// describes them with the model. Throws ValidationError when views < 2.
std::vector<RetrievalItem> MakeSceneRetrievalSet(const descriptor::ModelParams& params,
                                                 const SceneRetrievalConfig& cfg,
                                                 std::uint64_t seed);

}  // namespace hardneg::eval

#endif  // HARDNEG_EVALUATION_HPP_
