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

#ifndef FCBM_STATS_HPP_
#define FCBM_STATS_HPP_

#include <optional>
#include <span>
#include <vector>

namespace fcbm {

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // one-tailed, H1: mean(a - b) > 0
  bool defined = false;  // false for zero variance or fewer than 2 pairs
};

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

// Ranks starting at 1; ties share their average rank.
std::vector<double> average_ranks(std::span<const double> x);

// Empty when either input has zero variance or fewer than 2 values.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace fcbm

#endif  // FCBM_STATS_HPP_
