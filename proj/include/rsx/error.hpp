// Copyright 2026 The rsx Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RSX_ERROR_HPP_
#define RSX_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rsx {

// Base for every error the library raises. `kind()` is a short stable tag
// ("io", "parse", "shape", ...) that the CLI prints as the error class.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io", what) {}
};
struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error("parse", what) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};
struct ChecksumError : Error {
  explicit ChecksumError(const std::string& what) : Error("checksum", what) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("argument", what) {}
};

}  // namespace rsx

#endif  // RSX_ERROR_HPP_
