// Copyright 2026 The csqpt Authors
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

#ifndef CSQPT_ERRORS_HPP_
#define CSQPT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace csqpt {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class InvalidDimension : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quantity requested on a state or process for which it is undefined
// (zero trace, degenerate POVM, underdetermined fit, ...).
class UndefinedQuantity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content; carries the offending line when known.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        message_(what),
        line_(line) {}
  long line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

  // Same error with a location prefix such as a file name.
  FormatError with_prefix(const std::string& prefix) const { return {prefix + message_, line_}; }

 private:
  std::string message_;
  long line_;
};

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace csqpt

#endif  // CSQPT_ERRORS_HPP_
