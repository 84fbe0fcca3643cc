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

#ifndef HARDNEG_PNM_HPP_
#define HARDNEG_PNM_HPP_

#include <filesystem>
#include <variant>

#include "hardneg/image.hpp"

namespace hardneg::imaging {

using AnyImage = std::variant<ImageGray, ImageRGB>;

// Binary PGM (P5) or PPM (P6) with maxval 255. Throws ParseError with kind
// kBadHeader or kTruncated; never returns a partial image.
AnyImage LoadPnm(const std::filesystem::path& path);
ImageRGB LoadPnmRGB(const std::filesystem::path& path);

// Pixels are rounded to the nearest of 256 levels.
void SavePnm(const ImageGray& img, const std::filesystem::path& path);
void SavePnm(const ImageRGB& img, const std::filesystem::path& path);

}  // namespace hardneg::imaging

#endif  // HARDNEG_PNM_HPP_
