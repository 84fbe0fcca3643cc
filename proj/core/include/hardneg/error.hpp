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

#ifndef HARDNEG_ERROR_HPP_
#define HARDNEG_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace hardneg {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition on an argument does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated file content.
class ParseError : public Error {
 public:
  enum class Kind { kIo, kBadHeader, kTruncated, kBadValue };
  ParseError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Geometric estimation failed (rank deficiency, too few inliers, point at
// infinity).
class EstimationError : public Error {
 public:
  using Error::Error;
};

// A normalization would divide by a vanishing norm.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Training produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hardneg

#endif  // HARDNEG_ERROR_HPP_
