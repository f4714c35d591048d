// Copyright (c) 2026 valsched Authors. All Rights Reserved.
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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace valsched {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries a 1-based line/column when known.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& message)
      : Error("line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}
  explicit ParseError(const std::string& message) : Error(message) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_ = 0;
  int column_ = 0;
};

/// A pipeline that breaks one of its structural invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class CycleError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// An action that violates a LayerSchedule invariant. `rule()` names the
/// invariant so callers (and the CLI) can report it.
class IllegalActionError : public Error {
 public:
  IllegalActionError(std::string rule, const std::string& detail)
      : Error("illegal action [" + rule + "]: " + detail), rule_(std::move(rule)) {}
  const std::string& rule() const { return rule_; }

 private:
  std::string rule_;
};

class IncompleteScheduleError : public Error {
 public:
  using Error::Error;
};

class StateSpaceTooLargeError : public Error {
 public:
  StateSpaceTooLargeError(double count, double limit)
      : Error("schedule space has " + format_count(count) + " complete schedules, limit is " +
              format_count(limit)),
        count_(count) {}
  double count() const { return count_; }

 private:
  static std::string format_count(double v);
  double count_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace valsched
