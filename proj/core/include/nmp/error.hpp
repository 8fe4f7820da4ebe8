// Copyright 2026 The NMP Authors.
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

#ifndef NMP_ERROR_HPP_
#define NMP_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace nmp {

// Base of every domain error raised by the toolchain. The CLI maps these
// to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& message, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " +
              message),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// Builtin called with unbound arguments it needs.
class InstantiationError : public Error {
 public:
  using Error::Error;
};

// Answer-count or derivation-depth cap exceeded.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

// Invalid interpreted rule, grounding failure or invalid network.
class CompileError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent serialized document.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Dataset or parameter problems at runtime.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace nmp

#endif  // NMP_ERROR_HPP_
