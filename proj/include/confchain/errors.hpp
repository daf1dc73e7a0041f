// Copyright 2026 The confchain Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace confchain {

/// Base class of every error raised by the library. The CLI maps all of
/// these to the data-error exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// trace_model
class SchemaError : public Error { using Error::Error; };
class DimensionError : public Error { using Error::Error; };
class ValueError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };

/// A trace-level error annotated with its 1-based line in a JSONL file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// segmentation
class RuleError : public Error { using Error::Error; };

// attention_chain / rcc_core
class MissingVectorsError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class EmptyChainError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };

// baselines
class MissingAnswerKeyError : public Error { using Error::Error; };
class MissingFieldError : public Error { using Error::Error; };

// calib_metrics
class EmptyInputError : public Error { using Error::Error; };

// synth_harness
class ConfigError : public Error { using Error::Error; };
class MissingMetadataError : public Error { using Error::Error; };

}  // namespace confchain
