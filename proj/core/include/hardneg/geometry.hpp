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

#ifndef HARDNEG_GEOMETRY_HPP_
#define HARDNEG_GEOMETRY_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hardneg/image.hpp"

namespace hardneg::geometry {

using Point = Eigen::Vector2d;

// Projective map of the plane, stored with m(2,2) == 1.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  // Normalizes so that m(2,2) == 1; throws EstimationError when the matrix
  // is singular or m(2,2) vanishes.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography Identity() { return Homography(); }
  static Homography Translation(double tx, double ty);

  const Eigen::Matrix3d& matrix() const noexcept { return m_; }
  Homography Inverse() const { return Homography(m_.inverse()); }

  // Throws EstimationError for points mapped to infinity.
  Point Apply(const Point& p) const;
  Point operator()(const Point& p) const { return Apply(p); }

  // (a * b)(p) == a(b(p)).
  friend Homography operator*(const Homography& a, const Homography& b) {
    return Homography(a.m_ * b.m_);
  }

  std::array<double, 9> RowMajor() const;

 private:
  Eigen::Matrix3d m_;
};

inline Point ApplyHomography(const Homography& h, const Point& p) {
  return h.Apply(p);
}

struct HomographyConfig {
  double max_translation_frac = 0.1;
  double max_rotation_deg = 15.0;
  double scale_lo = 0.85;
  double scale_hi = 1.15;
  double perspective_amplitude = 0.1;

  static HomographyConfig IdentityOnly() { return {0.0, 0.0, 1.0, 1.0, 0.0}; }
};

void Validate(const HomographyConfig& cfg);

// One draw of the warp parameters.
struct WarpParams {
  double tx = 0.0;
  double ty = 0.0;
  double rotation_deg = 0.0;
  double scale = 1.0;
  // Entries of the perspective row, pre-division by the crop size.
  double perspective_x = 0.0;
  double perspective_y = 0.0;
};

// C * T * R * S * P * C^-1 with C the translation to the crop center
// (w/2, h/2).
Homography ComposeHomography(const WarpParams& p, int crop_w, int crop_h);

// T * R * S * P about the crop center with every parameter drawn uniformly
// from its range.
Homography SampleHomography(const HomographyConfig& cfg, int crop_w,
                            int crop_h, std::uint64_t seed);

// dst(q) = src(h^-1(q)), edge-clamped bilinear.
template <int C>
imaging::Image<C> WarpImage(const imaging::Image<C>& src, const Homography& h,
                            int out_w, int out_h);

template <int C>
imaging::Image<C> Crop(const imaging::Image<C>& src, int x0, int y0, int w, int h);

template <typename Img>
struct CropPairT {
  Img anchor;
  Img positive;
  // Maps anchor pixel coordinates to positive pixel coordinates.
  Homography h_ap;
  std::int64_t source_image_id = 0;
  // Top-left corner of the anchor crop in the source image.
  int offset_x = 0;
  int offset_y = 0;
};
using CropPair = CropPairT<imaging::ImageGray>;

// Random axis-aligned anchor crop plus its warp under a sampled homography.
// The crop offset is drawn so that the preimage of the positive crop also
// lies inside the source. Throws ValidationError when the image is too
// small for the sampled warp.
template <int C>
CropPairT<imaging::Image<C>> MakePair(const imaging::Image<C>& img,
                                      const HomographyConfig& cfg,
                                      int crop_size, std::uint64_t seed,
                                      std::int64_t source_image_id = 0);

// Same as MakePair with an explicit homography (crop coordinates) and offset.
template <int C>
CropPairT<imaging::Image<C>> MakePairWith(const imaging::Image<C>& img,
                                          const Homography& h, int crop_size,
                                          int offset_x, int offset_y,
                                          std::int64_t source_image_id = 0);

struct Correspondence {
  Point anchor;
  Point positive;
  // Index of the originating keypoint in the input list.
  std::size_t source_index = 0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  std::size_t size() const noexcept { return pairs.size(); }
};

// Keeps keypoints whose image under h lies at least `border_margin` px inside
// [0, width-1] x [0, height-1]; input order is preserved.
CorrespondenceSet ReprojectKeypoints(const std::vector<imaging::Keypoint>& kps,
                                     const Homography& h, int width, int height,
                                     double border_margin);

// Hartley-normalized DLT. Throws EstimationError on rank deficiency or fewer
// than four correspondences.
Homography DltHomography(const CorrespondenceSet& corrs);

struct RansacConfig {
  double inlier_threshold = 3.0;
  int max_iterations = 2000;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography h;
  // Indexed like the input matches.
  std::vector<bool> inliers;
  std::size_t inlier_count = 0;
  int iterations = 0;
};

// Mean of forward and backward transfer distance; infinity when either
// mapping hits the line at infinity.
double SymmetricTransferError(const Homography& h, const Correspondence& c);

// Four-point RANSAC with adaptive stopping and a final DLT refit on all
// inliers. Matches are canonically sorted before sampling so the outcome does
// not depend on input order. Throws EstimationError with fewer than four
// matches or fewer than four inliers.
RansacResult RansacHomography(const CorrespondenceSet& matches,
                              const RansacConfig& cfg);

// Mean distance between the images of the four corners under both maps.
double CornerError(const Homography& estimate, const Homography& truth,
                   int width, int height);

}  // namespace hardneg::geometry

#endif  // HARDNEG_GEOMETRY_HPP_
