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

#ifndef HARDNEG_TOOLS_RUN_CONFIG_HPP_
#define HARDNEG_TOOLS_RUN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hardneg/imaging.hpp"
#include "hardneg/training.hpp"

namespace hardneg::cli {

struct CorpusSettings {
  int count = 64;
  imaging::CorpusSpec spec;
  std::uint64_t seed = 0;
};

struct EvalSettings {
  int pairs = 20;
  std::uint64_t seed = 0;
  int crop_size = 128;
  int max_keypoints = 128;
  int nms_radius = 4;
  bool augment = true;
  double pixel_thresh = 3.0;
  std::vector<int> thresholds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  double ransac_threshold = 3.0;
  int ransac_iterations = 2000;
  double ransac_confidence = 0.999;
  int scenes = 4;
  int views = 3;
  int rerank_depth = 100;
};

struct RunConfig {
  CorpusSettings corpus;
  training::TrainConfig train;
  EvalSettings eval;
};

// Parses a {"version": 1, "corpus": {...}, "train": {...}, "eval": {...}}
// document. Every section and key is optional; unknown keys, wrong types and
// out-of-range values are all collected and reported in one
// ValidationError.
RunConfig ParseRunConfig(const std::string& text);
RunConfig LoadRunConfig(const std::filesystem::path& path);

// Problems with the combined settings, one message per field.
std::vector<std::string> ValidateRunConfig(const RunConfig& cfg);

// The effective configuration in the same schema; thread counts are not
// part of it.
std::string RunConfigToJson(const RunConfig& cfg);

// "a..b" (inclusive) or a single integer.
std::vector<int> ParseIntRange(const std::string& text);

// "WxH".
std::pair<int, int> ParseSize(const std::string& text);

}  // namespace hardneg::cli

#endif  // HARDNEG_TOOLS_RUN_CONFIG_HPP_
