// Copyright 2026 The parasearch Authors.
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

#ifndef PARASEARCH_ERROR_H_
#define PARASEARCH_ERROR_H_

#include <stdexcept>
#include <string>

namespace parasearch {

/// Base class for every error raised by the library. Carries the name of the
/// module that raised it so the CLI can report where a run failed.
class Error : public std::runtime_error {
 public:
  Error(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module() const { return module_; }

 private:
  std::string module_;
};

/// Malformed input file (bad JSON, bad CSV row, unreadable path).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string module, std::string field,
                  const std::string& message)
      : Error(std::move(module), field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Strategy shape the simulator does not model (MoE).
class UnsupportedStrategy : public Error {
 public:
  using Error::Error;
};

}  // namespace parasearch

#endif  // PARASEARCH_ERROR_H_
