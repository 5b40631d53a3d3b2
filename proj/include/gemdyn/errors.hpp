// Copyright 2026 The gemdyn Authors
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

#ifndef GEMDYN_ERRORS_HPP_
#define GEMDYN_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace gemdyn {

// Shapes or kinds of two operands disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A NaN or infinity was produced or supplied.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Logarithm requested at a rotation angle of +-pi.
class BranchError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Rotation axis is not a unit vector.
class NormalizationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// StateLayout does not describe the state it is applied to.
class LayoutError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller violated a documented precondition (empty batch, non-scalar loss).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed file or config. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                    : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownEnvError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace gemdyn

#endif  // GEMDYN_ERRORS_HPP_
