// Copyright 2026 The QHM Lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QHM_ERROR_HPP
#define QHM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qhm {

enum class ErrorKind {
  invalid_argument,
  range,
  validation,
  config,
  numeric,
  diverged,
  bound_violation,
  io,
};

/// Base exception for the library. The C API maps `kind()` onto status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what,
        std::vector<std::string> details = {})
      : std::runtime_error(what), kind_(kind), details_(std::move(details)) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Structured detail lines, e.g. one entry per offending config field.
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorKind kind_;
  std::vector<std::string> details_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace qhm

#endif  // QHM_ERROR_HPP
