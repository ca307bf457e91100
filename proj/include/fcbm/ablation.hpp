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

#ifndef FCBM_ABLATION_HPP_
#define FCBM_ABLATION_HPP_

#include <cstddef>
#include <vector>

#include "fcbm/evaluation.hpp"
#include "fcbm/training.hpp"
#include "json.hpp"

namespace fcbm {

struct AblationCell {
  HeadKind head = HeadKind::kKan;
  bool use_leakage_loss = true;
  std::size_t repeat = 0;
  TrainConfig config;
  TrainResult result;
  FaithfulnessReport report;  // test split
};

struct AblationOptions {
  std::size_t repeats = 1;
  std::size_t threads = 0;  // 0: FCBM_THREADS or the hardware count
  EvalConfig eval;
};

// {linear, kan} x {no leakage loss, leakage loss} x repeats, in that order.
// Repeat r trains with seed base.seed + r in every cell, so the ablation
// pairs share seeds. Cells run as isolated jobs on up to `threads` workers.
std::vector<AblationCell> ablation_matrix(const Dataset& dataset, const TrainConfig& base,
                                          const AblationOptions& options);

std::string cell_label(const AblationCell& cell);
nlohmann::json ablation_report(const std::vector<AblationCell>& cells);

}  // namespace fcbm

#endif  // FCBM_ABLATION_HPP_
