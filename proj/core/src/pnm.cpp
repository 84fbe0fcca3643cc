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

#include "hardneg/pnm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace hardneg::imaging {
namespace {

using Kind = ParseError::Kind;

class HeaderReader {
 public:
  explicit HeaderReader(const std::vector<unsigned char>& bytes)
      : bytes_(bytes) {}

  void SkipSpaceAndComments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int ReadInt(const char* field) {
    SkipSpaceAndComments();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1 << 24) {
        throw ParseError(Kind::kBadHeader,
                         std::string("pnm: ") + field + " out of range");
      }
      ++pos_;
    }
    if (pos_ == start) {
      throw ParseError(Kind::kBadHeader,
                       std::string("pnm: missing or malformed ") + field);
    }
    return static_cast<int>(value);
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void ConsumeRasterSeparator() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw ParseError(Kind::kBadHeader,
                       "pnm: expected whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void Advance(std::size_t n) { pos_ += n; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

std::vector<unsigned char> ReadAll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError(Kind::kIo, "pnm: cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <int C>
void Write(const Image<C>& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("pnm: cannot write " + path.string());
  out << (C == 1 ? "P5" : "P6") << '\n'
      << img.width() << ' ' << img.height() << '\n'
      << 255 << '\n';
  std::vector<unsigned char> raster(img.data().size());
  for (std::size_t i = 0; i < raster.size(); ++i) {
    const double v = std::clamp(img.data()[i], 0.0, 1.0);
    raster[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error("pnm: short write to " + path.string());
}

}  // namespace

AnyImage LoadPnm(const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = ReadAll(path);
  if (bytes.size() < 2 || bytes[0] != 'P' ||
      (bytes[1] != '5' && bytes[1] != '6')) {
    throw ParseError(Kind::kBadHeader, "pnm: unsupported magic in " +
                                           path.string() +
                                           " (expected P5 or P6)");
  }
  const int channels = bytes[1] == '5' ? 1 : 3;
  HeaderReader reader(bytes);
  reader.Advance(2);
  const int width = reader.ReadInt("width");
  const int height = reader.ReadInt("height");
  const int maxval = reader.ReadInt("maxval");
  if (width <= 0 || height <= 0) {
    throw ParseError(Kind::kBadHeader, "pnm: non-positive dimensions");
  }
  if (maxval != 255) {
    throw ParseError(Kind::kBadHeader,
                     "pnm: only maxval 255 is supported, got " +
                         std::to_string(maxval));
  }
  reader.ConsumeRasterSeparator();
  const std::size_t need =
      static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - reader.pos() < need) {
    throw ParseError(Kind::kTruncated,
                     "pnm: truncated raster in " + path.string() + " (" +
                         std::to_string(bytes.size() - reader.pos()) + " of " +
                         std::to_string(need) + " bytes)");
  }
  std::vector<double> data(need);
  for (std::size_t i = 0; i < need; ++i) {
    data[i] = bytes[reader.pos() + i] / 255.0;
  }
  if (channels == 1) return ImageGray(width, height, std::move(data));
  return ImageRGB(width, height, std::move(data));
}

ImageRGB LoadPnmRGB(const std::filesystem::path& path) {
  AnyImage any = LoadPnm(path);
  if (auto* rgb = std::get_if<ImageRGB>(&any)) return std::move(*rgb);
  return ToRGB(std::get<ImageGray>(any));
}

void SavePnm(const ImageGray& img, const std::filesystem::path& path) {
  Write(img, path);
}

void SavePnm(const ImageRGB& img, const std::filesystem::path& path) {
  Write(img, path);
}

}  // namespace hardneg::imaging
