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

#ifndef HARDNEG_DESCRIPTOR_HPP_
#define HARDNEG_DESCRIPTOR_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hardneg/image.hpp"

namespace hardneg::descriptor {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Weights of the two-layer patch embedder
//   y = w2 * tanh(w1 * x + b1) + b2,   descriptor = y / |y|.
struct ParamTensors {
  int patch_side = 0;
  int hidden = 0;
  int dim = 0;
  RowMatrix w1;  // hidden x patch_side^2
  Eigen::VectorXd b1;
  RowMatrix w2;  // dim x hidden
  Eigen::VectorXd b2;

  int input_size() const noexcept { return patch_side * patch_side; }
  std::size_t parameter_count() const noexcept {
    return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size());
  }
  // w1, b1, w2, b2 in that order.
  std::array<std::span<double>, 4> tensors();
  std::array<std::span<const double>, 4> tensors() const;

  void SetZero(int p, int h, int d);
  bool AllFinite() const;
};

struct ModelParams : ParamTensors {};
struct GradBuffer : ParamTensors {};

// N unit-norm descriptors with the keypoints they were computed at.
struct DescriptorSet {
  RowMatrix rows;  // N x dim
  std::vector<imaging::Keypoint> keypoints;
  std::int64_t image_id = 0;

  Eigen::Index size() const noexcept { return rows.rows(); }
  Eigen::Index dim() const noexcept { return rows.cols(); }
};

struct ForwardCache {
  RowMatrix inputs;       // N x P^2
  RowMatrix activations;  // N x hidden, tanh(z1)
  RowMatrix outputs;      // N x dim, pre-normalization y
  Eigen::VectorXd norms;  // |y| per row
};

struct ForwardResult {
  DescriptorSet descriptors;
  ForwardCache cache;
};

// Glorot-uniform weights, zero biases. Requires patch_side in {8, 16, 32},
// hidden >= dim and dim >= 8.
ModelParams InitParams(int patch_side, int hidden, int dim, std::uint64_t seed);

// Throws DegenerateError when any |y| < 1e-12.
ForwardResult Forward(const ModelParams& params,
                      std::span<const imaging::PatchTensor> patches,
                      std::span<const imaging::Keypoint> keypoints = {});

// Exact gradient of sum_i <grad_out_i, descriptor_i> with respect to every
// parameter, accumulated over the batch.
GradBuffer Backward(const ModelParams& params, const ForwardCache& cache,
                    const RowMatrix& grad_out);

// Extracts patches at the keypoints and embeds them.
DescriptorSet Describe(const ModelParams& params, const imaging::ImageGray& img,
                       const std::vector<imaging::Keypoint>& keypoints,
                       std::int64_t image_id = 0);

// {"patch_side","hidden","dim","w1","b1","w2","b2"} with row-major arrays;
// doubles round-trip exactly.
void SaveCheckpoint(const ModelParams& params, const std::filesystem::path& path);
// Throws ParseError on malformed JSON and ValidationError on dimension
// mismatches.
ModelParams LoadCheckpoint(const std::filesystem::path& path);

std::string CheckpointToString(const ModelParams& params);
ModelParams CheckpointFromString(const std::string& text);

}  // namespace hardneg::descriptor

#endif  // HARDNEG_DESCRIPTOR_HPP_
