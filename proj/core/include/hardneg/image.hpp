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

#ifndef HARDNEG_IMAGE_HPP_
#define HARDNEG_IMAGE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hardneg/error.hpp"

namespace hardneg::imaging {

// Row-major image with `Channels` interleaved real channels in [0, 1].
template <int Channels>
class Image {
 public:
  static constexpr int kChannels = Channels;

  Image() = default;
  Image(int width, int height, double fill = 0.0)
      : width_(width), height_(height) {
    if (width <= 0 || height <= 0) {
      throw ValidationError("image dimensions must be positive, got " +
                            std::to_string(width) + "x" +
                            std::to_string(height));
    }
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }
  Image(int width, int height, std::vector<double> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0 ||
        data_.size() != static_cast<std::size_t>(width) * height * Channels) {
      throw ValidationError("pixel buffer does not match image dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y, int c = 0) noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }
  double at(int x, int y, int c = 0) const noexcept {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }

  // Edge-clamped bilinear sample.
  double Sample(double x, double y, int c = 0) const noexcept {
    x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
    y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, width_ - 1);
    const int y1 = std::min(y0 + 1, height_ - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = at(x0, y0, c) + fx * (at(x1, y0, c) - at(x0, y0, c));
    const double bot = at(x0, y1, c) + fx * (at(x1, y1, c) - at(x0, y1, c));
    return top + fy * (bot - top);
  }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  void Clamp01() noexcept {
    for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

using ImageGray = Image<1>;
using ImageRGB = Image<3>;

// Rec. 601 luma.
inline ImageGray ToGray(const ImageRGB& rgb) {
  ImageGray out(rgb.width(), rgb.height());
  for (int y = 0; y < rgb.height(); ++y) {
    for (int x = 0; x < rgb.width(); ++x) {
      out.at(x, y) = 0.299 * rgb.at(x, y, 0) + 0.587 * rgb.at(x, y, 1) +
                     0.114 * rgb.at(x, y, 2);
    }
  }
  return out;
}

inline ImageGray ToGray(const ImageGray& gray) { return gray; }

inline ImageRGB ToRGB(const ImageGray& gray) {
  ImageRGB out(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = gray.at(x, y);
    }
  }
  return out;
}

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// side x side grayscale samples, row-major.
struct PatchTensor {
  int side = 0;
  std::vector<double> values;

  friend bool operator==(const PatchTensor&, const PatchTensor&) = default;
};

}  // namespace hardneg::imaging

#endif  // HARDNEG_IMAGE_HPP_
