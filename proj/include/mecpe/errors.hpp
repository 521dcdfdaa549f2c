// Copyright 2026 The mecpe Authors. All Rights Reserved.
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

#pragma once

#include <stdexcept>
#include <string>

namespace mecpe {

/// Base for every error raised by the library. Each subclass maps onto one
/// CLI exit-code class.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input syntax. Carries the 1-based line and column when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(line == 0 ? what
                        : what + " (line " + std::to_string(line) + ", column " +
                              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Data that parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Reference to an utterance, key, or entry that does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Tensor or vector dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or parameters during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Timeout, transport failure, or malformed reply from a generative client.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Cross-record inconsistency, e.g. a cause decision for an unknown target.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace mecpe
