// Copyright 2026 The floorloc Authors
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

namespace floorloc {

/// Coarse error families. The CLI maps each family onto one exit code.
enum class ErrorCategory {
  kUsage,         // caller violated a documented precondition
  kData,          // input data is missing, malformed or insufficient
  kModelMismatch, // artifacts were produced by a different encoder
  kLocalization,  // a frame could not be localized
  kNumeric,       // training diverged
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  virtual const char* name() const noexcept { return "Error"; }

 private:
  ErrorCategory category_;
};

#define FLOORLOC_DEFINE_ERROR(Name, Category)                          \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what)                             \
        : Error(ErrorCategory::Category, what) {}                      \
    const char* name() const noexcept override { return #Name; }       \
  }

FLOORLOC_DEFINE_ERROR(PreconditionError, kUsage);
FLOORLOC_DEFINE_ERROR(ShapeError, kUsage);
FLOORLOC_DEFINE_ERROR(EmptyView, kData);
FLOORLOC_DEFINE_ERROR(InvalidExtent, kData);
FLOORLOC_DEFINE_ERROR(InsufficientData, kData);
FLOORLOC_DEFINE_ERROR(VersionError, kData);
FLOORLOC_DEFINE_ERROR(JoinError, kData);
FLOORLOC_DEFINE_ERROR(SchemaError, kData);
FLOORLOC_DEFINE_ERROR(FormatError, kData);
FLOORLOC_DEFINE_ERROR(EmptyDatabase, kData);
FLOORLOC_DEFINE_ERROR(LeakageError, kData);
FLOORLOC_DEFINE_ERROR(EncoderMismatch, kModelMismatch);
FLOORLOC_DEFINE_ERROR(TooFewMatches, kLocalization);
FLOORLOC_DEFINE_ERROR(DegenerateConfiguration, kLocalization);
FLOORLOC_DEFINE_ERROR(NoCluster, kLocalization);

#undef FLOORLOC_DEFINE_ERROR

/// Malformed input line; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorCategory::kData,
              "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  const char* name() const noexcept override { return "ParseError"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace floorloc
