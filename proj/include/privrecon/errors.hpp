// Copyright 2026 The privrecon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace privrecon {

// Shapes of two operands disagree, or an image is too small for an operation.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A privacy parameter makes the requested quantity undefined (e.g. sigma = 0
// for the MSE bound or the accountant).
class DegenerateParameterError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The observation noise is at or above the largest noise level the schedule
// can represent.
class ScheduleOverflowError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// The clipping factor is unknown and no approximation was supplied.
class MissingKnowledgeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TrainingDivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AccountantOverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// Requested epsilon is not reachable on the supported mu range.
class EpsilonRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed file or payload.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace privrecon
