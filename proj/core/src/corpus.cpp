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

#include "hardneg/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "hardneg/error.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/pnm.hpp"
#include "json.hpp"

namespace hardneg::imaging {
namespace {

std::string ImageFileName(std::int64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "img_%05lld.ppm", static_cast<long long>(id));
  return buf;
}

}  // namespace

Corpus GenerateCorpus(const CorpusSpec& spec, int count, std::uint64_t seed,
                      int threads) {
  if (count <= 0) throw ValidationError("corpus count must be positive");
  Corpus corpus;
  corpus.images.resize(count);
  corpus.ids.resize(count);
  corpus.seeds.resize(count);
  ParallelFor(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
    corpus.ids[i] = static_cast<std::int64_t>(i);
    corpus.seeds[i] = seed ^ static_cast<std::uint64_t>(i);
    corpus.images[i] = GenerateSyntheticImage(spec, corpus.seeds[i]);
  });
  return corpus;
}

void WriteCorpus(const Corpus& corpus, const CorpusSpec& spec,
                 std::uint64_t seed, const std::filesystem::path& dir,
                 bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw ValidationError("output directory " + dir.string() +
                          " is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
  nlohmann::json images = nlohmann::json::array();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::string name = ImageFileName(corpus.ids[i]);
    SavePnm(corpus.images[i], dir / name);
    images.push_back({{"id", corpus.ids[i]},
                      {"file", name},
                      {"width", corpus.images[i].width()},
                      {"height", corpus.images[i].height()},
                      {"seed", corpus.seeds[i]}});
  }
  const nlohmann::json manifest = {{"version", 1},
                                   {"count", corpus.size()},
                                   {"seed", seed},
                                   {"width", spec.width},
                                   {"height", spec.height},
                                   {"elements", spec.element_count},
                                   {"images", images}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Corpus LoadCorpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw ValidationError("corpus directory " + dir.string() + " does not exist");
  }
  Corpus corpus;
  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    nlohmann::json manifest;
    try {
      manifest = nlohmann::json::parse(in);
      for (const auto& entry : manifest.at("images")) {
        corpus.images.push_back(LoadPnmRGB(dir / entry.at("file").get<std::string>()));
        corpus.ids.push_back(entry.at("id").get<std::int64_t>());
        corpus.seeds.push_back(entry.value("seed", std::uint64_t{0}));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(ParseError::Kind::kBadValue,
                       "malformed corpus manifest " + manifest_path.string() +
                           ": " + e.what());
    }
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      const auto ext = e.path().extension();
      if (ext == ".ppm" || ext == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (std::size_t i = 0; i < files.size(); ++i) {
      corpus.images.push_back(LoadPnmRGB(files[i]));
      corpus.ids.push_back(static_cast<std::int64_t>(i));
      corpus.seeds.push_back(0);
    }
  }
  if (corpus.size() == 0) {
    throw ValidationError("corpus directory " + dir.string() + " holds no images");
  }
  return corpus;
}

}  // namespace hardneg::imaging
