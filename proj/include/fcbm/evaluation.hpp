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

#ifndef FCBM_EVALUATION_HPP_
#define FCBM_EVALUATION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcbm/data.hpp"
#include "fcbm/density.hpp"
#include "fcbm/model.hpp"
#include "fcbm/stats.hpp"
#include "json.hpp"

namespace fcbm {

inline constexpr int kReportVersion = 1;

struct EvalConfig {
  KdeConfig kde;
  BinnedConfig binned;
};

struct ConceptRmse {
  std::vector<double> per_concept;
  double aggregate = 0.0;  // mean over concepts
};

ConceptRmse concept_rmse(const Matrix& c_hat, const Matrix& c);

double ctl_metric(std::span<const double> c_hat, std::span<const double> c,
                  std::span<const int> y, const KdeConfig& config);

// Zero when either predicted column is constant.
double icl_metric(std::span<const double> c_hat_i, std::span<const double> c_hat_j,
                  std::span<const double> c_i, std::span<const double> c_j,
                  const BinnedConfig& config);

struct FaithfulnessReport {
  std::string split;
  double accuracy = 0.0;  // percent
  std::vector<std::string> concept_names;
  std::vector<double> rmse;
  double c_rmse = 0.0;
  std::vector<double> ctl;
  double mean_ctl = 0.0;
  Matrix icl;  // k x k, symmetric, zero diagonal
  double mean_icl = 0.0;  // over pairs i < j
  double aggregate_leakage = 0.0;
  std::string config_fingerprint;
  std::uint64_t seed = 0;
  std::string head_kind;

  // Row means of the ICL matrix excluding the diagonal.
  std::vector<double> mean_icl_per_concept() const;
};

nlohmann::json to_json(const FaithfulnessReport& report);
FaithfulnessReport report_from_json(const nlohmann::json& j);

// Throws ArgumentError naming the first mismatch.
void check_compatibility(const CbmModel& model, const Dataset& dataset);

FaithfulnessReport evaluate(const CbmModel& model, const Dataset& dataset, Split split,
                            const EvalConfig& config);

struct Tier {
  std::string name;  // "high", "average", "low" accuracy
  std::vector<std::size_t> concepts;
  std::vector<double> ctl;
  double mean_ctl = 0.0;
};

struct TierAnalysis {
  std::array<Tier, 3> tiers;  // high, average, low accuracy
  // One-tailed paired tests of CTL(low) > CTL(tier) for high and average.
  TTestResult high_vs_low;
  TTestResult average_vs_low;
};

// Terciles of per-concept rmse (ascending, ties by index); the first
// k mod 3 tiers take one extra concept. Pairs match by within-tier rank.
TierAnalysis rmse_tier_analysis(std::span<const double> rmse, std::span<const double> ctl);
nlohmann::json to_json(const TierAnalysis& analysis);

struct LeakageCorrelation {
  std::optional<double> pearson;
  std::optional<double> spearman;
};

LeakageCorrelation leakage_correlation(std::span<const double> ctl,
                                       std::span<const double> mean_icl);

struct ActivationHistogram {
  std::size_t concept_index = 0;
  std::string concept_name;
  std::vector<double> edges;  // 31 edges over the observed range
  std::vector<std::string> labels;  // predicted classes present
  std::vector<std::vector<std::size_t>> counts;  // one row per label
};

inline constexpr std::size_t kActivationBins = 30;

ActivationHistogram activation_distributions(const CbmModel& model, const Dataset& dataset,
                                             Split split, std::size_t concept_index);
// {"series": [{"label", "x": bin centers, "y": counts}], "edges": [...]}
nlohmann::json to_json(const ActivationHistogram& histogram);

struct InterventionCurve {
  std::vector<std::size_t> order;  // by validation gain, ties by index
  std::vector<double> gains;       // validation accuracy gain per concept, index order
  std::vector<double> accuracy;    // k + 1 entries, test split
};

InterventionCurve intervene(const CbmModel& model, const Dataset& dataset);
nlohmann::json to_json(const InterventionCurve& curve);

// Head logits after replacing the listed columns of c_hat with c.
Matrix intervened_logits(const Matrix& c_hat, const Matrix& c,
                         std::span<const std::size_t> columns, const Head& head);

struct ParetoInput {
  std::string label;
  FaithfulnessReport report;
};

// Points (aggregate_leakage, c_rmse) flagged dominated when another point is
// no worse on both axes and strictly better on one.
nlohmann::json pareto_export(std::span<const ParetoInput> reports);

}  // namespace fcbm

#endif  // FCBM_EVALUATION_HPP_
