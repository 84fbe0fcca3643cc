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

#ifndef HARDNEG_DESCRIPTOR_IO_HPP_
#define HARDNEG_DESCRIPTOR_IO_HPP_

#include <filesystem>
#include <string>

#include "hardneg/descriptor.hpp"
#include "hardneg/mining.hpp"

namespace hardneg::mining {

// "DSC1" file: magic, u32 count, u32 dim (little-endian), count*dim float32
// descriptor values, then count*2 float32 keypoint coordinates (x, y).
void WriteDescriptorFile(const DescriptorSet& set, const std::filesystem::path& path);
DescriptorSet ReadDescriptorFile(const std::filesystem::path& path);

// "GDC1" sidecar: magic, u32 dim, dim float32 values.
void WriteGlobalFile(const GlobalDescriptor& g, const std::filesystem::path& path);
GlobalDescriptor ReadGlobalFile(const std::filesystem::path& path);

std::string EncodeDescriptors(const DescriptorSet& set);
DescriptorSet DecodeDescriptors(const std::string& bytes);
std::string EncodeGlobal(const GlobalDescriptor& g);
GlobalDescriptor DecodeGlobal(const std::string& bytes);

}  // namespace hardneg::mining

#endif  // HARDNEG_DESCRIPTOR_IO_HPP_
