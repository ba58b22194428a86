// Copyright 2026 The streamtune Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace streamtune {

// Input outside an operation's mathematical domain (non-positive times,
// empty lists, malformed configurations).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Not enough samples or rows for a statistic or a fit.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column sets or vector dimensions that do not match a fitted artifact.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Syntax error in a text input. Line and column are 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

// Reference to an array or parameter that was never declared.
class UndeclaredReferenceError : public ParseError {
 public:
  UndeclaredReferenceError(const std::string& name, std::size_t line, std::size_t column)
      : ParseError("undeclared reference '" + name + "'", line, column), name_(name) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

// Stream configuration that the platform or workload cannot host.
class InfeasibleConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Profiling run requested on a loop that is too short.
class ProfileTooSmallError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupt or truncated binary file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File written by a format version this reader does not understand.
class VersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root finder could not bracket a solution.
class NoSolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant was violated; indicates a bug rather than bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace streamtune
