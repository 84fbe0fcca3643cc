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

#include "hardneg/descriptor.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/imaging.hpp"
#include "hardneg/rng.hpp"
#include "json.hpp"

namespace hardneg::descriptor {
namespace {

constexpr std::uint64_t kInitStream = 0x1A;

template <typename M>
void FillUniform(M& m, double bound, CounterRng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.Uniform(-bound, bound);
  }
}

template <typename M>
nlohmann::json ToArray(const M& m) {
  return nlohmann::json(std::vector<double>(m.data(), m.data() + m.size()));
}

template <typename M>
void FromArray(const nlohmann::json& doc, const char* key, M& m,
               std::string& problems) {
  const auto& arr = doc.at(key);
  if (!arr.is_array()) {
    problems += std::string(" ") + key + " is not an array;";
    return;
  }
  if (arr.size() != static_cast<std::size_t>(m.size())) {
    problems += std::string(" ") + key + " has " + std::to_string(arr.size()) +
                " entries, expected " + std::to_string(m.size()) + ";";
    return;
  }
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = arr[static_cast<std::size_t>(i)].get<double>();
  }
}

}  // namespace

std::array<std::span<double>, 4> ParamTensors::tensors() {
  return {std::span<double>(w1.data(), static_cast<std::size_t>(w1.size())),
          std::span<double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<double>(w2.data(), static_cast<std::size_t>(w2.size())),
          std::span<double>(b2.data(), static_cast<std::size_t>(b2.size()))};
}

std::array<std::span<const double>, 4> ParamTensors::tensors() const {
  return {std::span<const double>(w1.data(), static_cast<std::size_t>(w1.size())),
          std::span<const double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<const double>(w2.data(), static_cast<std::size_t>(w2.size())),
          std::span<const double>(b2.data(), static_cast<std::size_t>(b2.size()))};
}

void ParamTensors::SetZero(int p, int h, int d) {
  patch_side = p;
  hidden = h;
  dim = d;
  w1 = RowMatrix::Zero(h, p * p);
  b1 = Eigen::VectorXd::Zero(h);
  w2 = RowMatrix::Zero(d, h);
  b2 = Eigen::VectorXd::Zero(d);
}

bool ParamTensors::AllFinite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

ModelParams InitParams(int patch_side, int hidden, int dim, std::uint64_t seed) {
  if (patch_side != 8 && patch_side != 16 && patch_side != 32) {
    throw ValidationError("patch_side must be 8, 16 or 32, got " +
                          std::to_string(patch_side));
  }
  if (dim < 8 || hidden < dim) {
    throw ValidationError("model dims require dim >= 8 and hidden >= dim (hidden=" +
                          std::to_string(hidden) + ", dim=" + std::to_string(dim) + ")");
  }
  ModelParams params;
  params.SetZero(patch_side, hidden, dim);
  CounterRng rng(seed, kInitStream);
  const int in = patch_side * patch_side;
  FillUniform(params.w1, std::sqrt(6.0 / (in + hidden)), rng);
  FillUniform(params.w2, std::sqrt(6.0 / (hidden + dim)), rng);
  return params;
}

ForwardResult Forward(const ModelParams& params,
                      std::span<const imaging::PatchTensor> patches,
                      std::span<const imaging::Keypoint> keypoints) {
  const Eigen::Index n = static_cast<Eigen::Index>(patches.size());
  const int in = params.input_size();
  if (!keypoints.empty() && keypoints.size() != patches.size()) {
    throw ValidationError("forward: keypoint count differs from patch count");
  }
  ForwardResult result;
  ForwardCache& cache = result.cache;
  cache.inputs.resize(n, in);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& patch = patches[static_cast<std::size_t>(i)];
    if (patch.side != params.patch_side ||
        patch.values.size() != static_cast<std::size_t>(in)) {
      throw ValidationError("forward: patch side " + std::to_string(patch.side) +
                            " does not match model patch_side " +
                            std::to_string(params.patch_side));
    }
    cache.inputs.row(i) = Eigen::Map<const Eigen::RowVectorXd>(patch.values.data(), in);
  }
  cache.activations = cache.inputs * params.w1.transpose();
  cache.activations.rowwise() += params.b1.transpose();
  cache.activations = cache.activations.array().tanh().matrix();
  cache.outputs = cache.activations * params.w2.transpose();
  cache.outputs.rowwise() += params.b2.transpose();
  cache.norms = cache.outputs.rowwise().norm();

  DescriptorSet& d = result.descriptors;
  d.rows.resize(n, params.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(cache.norms(i) >= 1e-12)) {
      throw DegenerateError("forward: pre-normalization norm of row " +
                            std::to_string(i) + " is " +
                            std::to_string(cache.norms(i)) +
                            " (embedding collapse)");
    }
    d.rows.row(i) = cache.outputs.row(i) / cache.norms(i);
  }
  d.keypoints.assign(keypoints.begin(), keypoints.end());
  return result;
}

GradBuffer Backward(const ModelParams& params, const ForwardCache& cache,
                    const RowMatrix& grad_out) {
  const Eigen::Index n = cache.outputs.rows();
  if (grad_out.rows() != n || grad_out.cols() != params.dim ||
      cache.inputs.cols() != params.input_size() ||
      cache.activations.cols() != params.hidden) {
    throw ValidationError("backward: gradient shape does not match forward cache");
  }
  // Through normalization: dy = (I - yhat yhat^T) g / |y|.
  RowMatrix dy(n, params.dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv_norm = 1.0 / cache.norms(i);
    const Eigen::RowVectorXd yhat = cache.outputs.row(i) * inv_norm;
    const double radial = grad_out.row(i).dot(yhat);
    dy.row(i) = (grad_out.row(i) - radial * yhat) * inv_norm;
  }
  GradBuffer g;
  g.patch_side = params.patch_side;
  g.hidden = params.hidden;
  g.dim = params.dim;
  g.w2 = dy.transpose() * cache.activations;
  g.b2 = dy.colwise().sum().transpose();
  const RowMatrix dz =
      ((dy * params.w2).array() * (1.0 - cache.activations.array().square())).matrix();
  g.w1 = dz.transpose() * cache.inputs;
  g.b1 = dz.colwise().sum().transpose();
  return g;
}

DescriptorSet Describe(const ModelParams& params, const imaging::ImageGray& img,
                       const std::vector<imaging::Keypoint>& keypoints,
                       std::int64_t image_id) {
  std::vector<imaging::PatchTensor> patches;
  patches.reserve(keypoints.size());
  for (const auto& kp : keypoints) {
    patches.push_back(imaging::ExtractPatch(img, kp, params.patch_side));
  }
  DescriptorSet d = Forward(params, patches, keypoints).descriptors;
  if (keypoints.empty()) d.rows.resize(0, params.dim);
  d.image_id = image_id;
  return d;
}

std::string CheckpointToString(const ModelParams& params) {
  const nlohmann::json doc = {{"patch_side", params.patch_side},
                              {"hidden", params.hidden},
                              {"dim", params.dim},
                              {"w1", ToArray(params.w1)},
                              {"b1", ToArray(params.b1)},
                              {"w2", ToArray(params.w2)},
                              {"b2", ToArray(params.b2)}};
  return doc.dump();
}

ModelParams CheckpointFromString(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseError::Kind::kBadValue,
                     std::string("checkpoint: malformed JSON: ") + e.what());
  }
  ModelParams params;
  try {
    const int p = doc.at("patch_side").get<int>();
    const int h = doc.at("hidden").get<int>();
    const int d = doc.at("dim").get<int>();
    if (p <= 0 || h <= 0 || d <= 0) {
      throw ValidationError("checkpoint: dimensions must be positive");
    }
    params.SetZero(p, h, d);
    std::string problems;
    FromArray(doc, "w1", params.w1, problems);
    FromArray(doc, "b1", params.b1, problems);
    FromArray(doc, "w2", params.w2, problems);
    FromArray(doc, "b2", params.b2, problems);
    if (!problems.empty()) throw ValidationError("checkpoint:" + problems);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::kBadValue,
                     std::string("checkpoint: missing or mistyped field: ") + e.what());
  }
  if (!params.AllFinite()) throw ValidationError("checkpoint: non-finite weights");
  return params;
}

void SaveCheckpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out << CheckpointToString(params) << '\n';
}

ModelParams LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ParseError(ParseError::Kind::kIo, "cannot open checkpoint " + path.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return CheckpointFromString(ss.str());
}

}  // namespace hardneg::descriptor
