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

#ifndef HARDNEG_IMAGING_HPP_
#define HARDNEG_IMAGING_HPP_

#include <cstdint>
#include <limits>
#include <vector>

#include "hardneg/image.hpp"

namespace hardneg::imaging {

inline constexpr int kDefaultPatchSide = 16;

struct CorpusSpec {
  int width = 256;
  int height = 256;
  int element_count = 12;
};

// Procedural textured scene: a gradient background overlaid with filled
// polygons, gradient rectangles, checker boards and value-noise blobs.
// Throws ValidationError when either side is below 64 px.
ImageRGB GenerateSyntheticImage(const CorpusSpec& spec, std::uint64_t seed);

struct HarrisOptions {
  double k = 0.04;
  // Candidates must exceed this fraction of the strongest response.
  double relative_threshold = 0.01;
  // Minimum distance from every border; kDefaultPatchSide / 2 + 1.
  int border = kDefaultPatchSide / 2 + 1;
};

// Harris corners from 3x3 Sobel gradients summed over a 3x3 window, followed
// by greedy non-maximum suppression. Output is sorted by descending score and
// no two keypoints are within `nms_radius` (Chebyshev).
std::vector<Keypoint> DetectHarris(const ImageGray& img, int max_keypoints,
                                   int nms_radius,
                                   const HarrisOptions& options = {});

struct AugmentParams {
  double blur_sigma = 0.0;
  double noise_sigma = 0.0;
  bool clahe_enabled = false;
  double clahe_clip = 2.0;
  int clahe_tiles = 4;
  double brightness_delta = 0.0;
  double contrast_factor = 1.0;
  double hue_delta = 0.0;  // degrees
  double saturation_factor = 1.0;
  std::uint64_t seed = 0;
};

// Draws every field uniformly from the training ranges; CLAHE is enabled
// with probability 0.3.
AugmentParams SampleAugmentParams(std::uint64_t seed);

// brightness -> contrast -> hue -> saturation -> blur -> noise -> CLAHE,
// clamping to [0, 1] after every stage. Identity parameters leave the image
// bit-identical.
ImageRGB AugmentColor(const ImageRGB& img, const AugmentParams& params);
// Grayscale pipeline: hue and saturation are skipped.
ImageGray AugmentColor(const ImageGray& img, const AugmentParams& params);

// Contrast-limited adaptive histogram equalization over a tiles x tiles grid
// with 256 bins. `clip` is relative to the mean bin height; pass infinity to
// disable clipping. Throws ValidationError when a cell would be under 8 px.
ImageGray Clahe(const ImageGray& img, double clip, int tiles);

ImageGray GaussianBlur(const ImageGray& img, double sigma);

void RgbToHsv(double r, double g, double b, double& h, double& s, double& v);
void HsvToRgb(double h, double s, double v, double& r, double& g, double& b);

// side x side bilinear samples at offsets [-side/2, side/2) around the
// keypoint, edge-clamped. `side` must be even and at least 8.
PatchTensor ExtractPatch(const ImageGray& img, const Keypoint& kp, int side);

}  // namespace hardneg::imaging

#endif  // HARDNEG_IMAGING_HPP_
