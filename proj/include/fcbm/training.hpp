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

#ifndef FCBM_TRAINING_HPP_
#define FCBM_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fcbm/data.hpp"
#include "fcbm/density.hpp"
#include "fcbm/model.hpp"
#include "json.hpp"

namespace fcbm {

enum class Regime { kJoint, kIndependent, kSequential };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& name);

struct TrainConfig {
  Regime regime = Regime::kJoint;
  HeadKind head = HeadKind::kKan;
  bool use_leakage_loss = true;
  double lambda_concept = 1.0;
  double lambda_leak = 1.0;
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  double lr_init = 1e-2;
  double running_mean_decay = 0.99;
  std::size_t patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 42;
  KdeConfig kde;
  KanGrid grid;

  // Throws ArgumentError. `n_classes` enables the batch-size check.
  void validate(std::size_t n_classes = 0) const;
};

nlohmann::json to_json(const TrainConfig& config);
// Unknown keys are errors; missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
std::string config_fingerprint(const TrainConfig& config);

// Exponential moving averages of the three raw loss terms, initialized to
// the first observed value.
struct RunningMeans {
  struct Ema {
    double value = 0.0;
    bool initialized = false;
  };
  Ema cls;
  Ema concepts;
  Ema leak;
  double decay = 0.99;

  static void observe(Ema& ema, double value, double decay);
};

enum class Phase { kJoint, kConcepts, kHeadOnTrue, kHeadOnPredicted };

std::string to_string(Phase phase);

struct StepRecord {
  std::size_t step = 0;  // global across phases
  Phase phase = Phase::kJoint;
  std::string input_source;  // "predicted" or "true": what the head consumed
  std::optional<double> loss_cls;
  std::optional<double> loss_concept;
  std::optional<double> loss_leak;
  bool leak_skipped = false;
  std::optional<double> lambda_concept_tilde;
  std::optional<double> lambda_leak_tilde;
  // Pre-step running means backing the tilde factors.
  std::optional<double> mean_cls_before;
  std::optional<double> mean_concept_before;
  std::optional<double> mean_leak_before;
  double alpha = 0.0;
  double lr = 0.0;
  double total = 0.0;
  std::string bottleneck_hash;  // after the update
};

struct EpochRecord {
  Phase phase = Phase::kJoint;
  std::size_t epoch = 0;
  double train_loss_cls = 0.0;  // mean over the epoch's steps, 0 if unused
  double val_accuracy = 0.0;    // percent
  double val_concept_mse = 0.0;
  std::optional<double> val_mean_ctl;  // absent when the split cannot support KDE
  std::size_t leak_skipped_batches = 0;
  bool selected = false;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
  std::size_t leak_skipped_batches = 0;
};

nlohmann::json to_json(const StepRecord& record);
nlohmann::json to_json(const EpochRecord& record);
// JSONL: step lines, epoch lines, then a summary line carrying the tool
// version and config fingerprint.
void write_train_log(const TrainLog& log, const std::filesystem::path& path,
                     const std::string& config_fingerprint = "");

struct Batch {
  Matrix z;
  Matrix c;
  std::vector<int> y;
};

struct ModelGrads {
  std::vector<double> bottleneck_weight;
  std::vector<double> bottleneck_bias;
  std::vector<std::vector<double>> head;  // order of head_parameters()
};

struct TotalLossResult {
  double loss = 0.0;
  ModelGrads grads;
  RunningMeans means;  // updated with this step's raw losses
  StepRecord record;
};

// L = L_cls + lambda_c~ * L_C + lambda_leak~ * alpha * L_leak with
// lambda_x~ = lambda_x * mean_cls / mean_x from the means before this step
// and alpha = cosine_anneal(step, total_steps - 1, 0, 1). The tilde factors
// are constants for differentiation.
TotalLossResult total_loss(const Batch& batch, const CbmModel& model, const TrainConfig& config,
                           const RunningMeans& means, std::size_t step, std::size_t total_steps);

// Mini-batch index lists for one epoch. Stratified batches interleave the
// classes so every batch holds close to the global class proportions.
std::vector<std::vector<std::size_t>> make_batches(std::span<const int> y,
                                                   std::size_t batch_size, bool stratified,
                                                   Rng& rng);

struct TrainResult {
  CbmModel model;
  TrainLog log;
};

// Trains under config.regime and returns the best-validation checkpoint.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

}  // namespace fcbm

#endif  // FCBM_TRAINING_HPP_
