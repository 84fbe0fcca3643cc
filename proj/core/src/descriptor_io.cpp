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

#include "hardneg/descriptor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hardneg/error.hpp"

namespace hardneg::mining {
namespace {

using Kind = ParseError::Kind;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutF32(std::string& out, double v) {
  PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class Reader {
 public:
  Reader(const std::string& bytes, const char* what) : bytes_(bytes), what_(what) {}

  void Magic(const char* magic) {
    if (bytes_.size() < 4 || std::memcmp(bytes_.data(), magic, 4) != 0) {
      throw ParseError(Kind::kBadHeader, std::string(what_) + ": bad magic, expected " + magic);
    }
    pos_ = 4;
  }

  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  double F32() { return std::bit_cast<float>(U32()); }

  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(Kind::kTruncated, std::string(what_) + ": truncated payload");
    }
  }

  void ExpectEnd() const {
    if (pos_ != bytes_.size()) {
      throw ParseError(Kind::kBadValue, std::string(what_) + ": trailing bytes");
    }
  }

 private:
  const std::string& bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(Kind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void Dump(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

std::string EncodeDescriptors(const DescriptorSet& set) {
  if (!set.keypoints.empty() &&
      set.keypoints.size() != static_cast<std::size_t>(set.size())) {
    throw ValidationError("descriptor set has mismatched keypoint count");
  }
  std::string out = "DSC1";
  PutU32(out, static_cast<std::uint32_t>(set.size()));
  PutU32(out, static_cast<std::uint32_t>(set.dim()));
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    for (Eigen::Index j = 0; j < set.dim(); ++j) PutF32(out, set.rows(i, j));
  }
  for (Eigen::Index i = 0; i < set.size(); ++i) {
    const bool has = !set.keypoints.empty();
    PutF32(out, has ? set.keypoints[static_cast<std::size_t>(i)].x : 0.0);
    PutF32(out, has ? set.keypoints[static_cast<std::size_t>(i)].y : 0.0);
  }
  return out;
}

DescriptorSet DecodeDescriptors(const std::string& bytes) {
  Reader r(bytes, "DSC1");
  r.Magic("DSC1");
  const std::uint32_t count = r.U32();
  const std::uint32_t dim = r.U32();
  r.Need(static_cast<std::size_t>(count) * (dim + 2) * 4);
  DescriptorSet set;
  set.rows.resize(count, dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    for (std::uint32_t j = 0; j < dim; ++j) set.rows(i, j) = r.F32();
  }
  set.keypoints.resize(count);
  for (auto& kp : set.keypoints) {
    kp.x = r.F32();
    kp.y = r.F32();
  }
  r.ExpectEnd();
  return set;
}

std::string EncodeGlobal(const GlobalDescriptor& g) {
  std::string out = "GDC1";
  PutU32(out, static_cast<std::uint32_t>(g.v.size()));
  for (Eigen::Index i = 0; i < g.v.size(); ++i) PutF32(out, g.v(i));
  return out;
}

GlobalDescriptor DecodeGlobal(const std::string& bytes) {
  Reader r(bytes, "GDC1");
  r.Magic("GDC1");
  const std::uint32_t dim = r.U32();
  r.Need(static_cast<std::size_t>(dim) * 4);
  GlobalDescriptor g{Eigen::VectorXd(dim)};
  for (std::uint32_t i = 0; i < dim; ++i) g.v(i) = r.F32();
  r.ExpectEnd();
  return g;
}

void WriteDescriptorFile(const DescriptorSet& set, const std::filesystem::path& path) {
  Dump(EncodeDescriptors(set), path);
}

DescriptorSet ReadDescriptorFile(const std::filesystem::path& path) {
  return DecodeDescriptors(Slurp(path));
}

void WriteGlobalFile(const GlobalDescriptor& g, const std::filesystem::path& path) {
  Dump(EncodeGlobal(g), path);
}

GlobalDescriptor ReadGlobalFile(const std::filesystem::path& path) {
  return DecodeGlobal(Slurp(path));
}

}  // namespace hardneg::mining
