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

#ifndef HARDNEG_CORPUS_HPP_
#define HARDNEG_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hardneg/imaging.hpp"

namespace hardneg::imaging {

// An in-memory image collection with stable integer ids.
struct Corpus {
  std::vector<ImageRGB> images;
  std::vector<std::int64_t> ids;
  std::vector<std::uint64_t> seeds;

  std::size_t size() const noexcept { return images.size(); }
};

// Image i is generated with seed (seed ^ i).
Corpus GenerateCorpus(const CorpusSpec& spec, int count, std::uint64_t seed,
                      int threads = 1);

// Writes dir/img_%05d.ppm and dir/manifest.json. Refuses a non-empty
// directory unless `force` is set.
void WriteCorpus(const Corpus& corpus, const CorpusSpec& spec,
                 std::uint64_t seed, const std::filesystem::path& dir,
                 bool force = false);

// Reads a directory written by WriteCorpus. Directories without a manifest
// are accepted too: every *.ppm / *.pgm file is loaded in name order and
// numbered from zero.
Corpus LoadCorpus(const std::filesystem::path& dir);

}  // namespace hardneg::imaging

#endif  // HARDNEG_CORPUS_HPP_
