/*
 * Copyright 2026 The fcbm Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FCBM_ERRORS_HPP_
#define FCBM_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace fcbm {

// Bad arguments, shape mismatches and invalid configurations.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An estimator precondition failed (class counts, sample size, degenerate
// labels).
class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values produced or consumed by a numerical routine.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input files (datasets, configs).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checkpoint container problems: corrupt, truncated, wrong version, or
// inconsistent with the data it is applied to.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fcbm

#endif  // FCBM_ERRORS_HPP_
