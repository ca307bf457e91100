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

#include "fcbm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcbm/checkpoint.hpp"
#include "fcbm/errors.hpp"

namespace fcbm {

using nlohmann::json;

ConceptRmse concept_rmse(const Matrix& c_hat, const Matrix& c) {
  if (c_hat.rows() != c.rows() || c_hat.cols() != c.cols())
    throw ArgumentError("concept_rmse: shape mismatch");
  if (c.rows() == 0 || c.cols() == 0) throw ArgumentError("concept_rmse: empty split");
  ConceptRmse out;
  out.per_concept.assign(c.cols(), 0.0);
  for (std::size_t j = 0; j < c.cols(); ++j) {
    double ss = 0.0;
    for (std::size_t r = 0; r < c.rows(); ++r) {
      const double d = c_hat(r, j) - c(r, j);
      ss += d * d;
    }
    out.per_concept[j] = std::sqrt(ss / static_cast<double>(c.rows()));
  }
  out.aggregate = std::accumulate(out.per_concept.begin(), out.per_concept.end(), 0.0) /
                  static_cast<double>(c.cols());
  return out;
}

double ctl_metric(std::span<const double> c_hat, std::span<const double> c,
                  std::span<const int> y, const KdeConfig& config) {
  return task_leakage(c_hat, c, y, config);
}

double icl_metric(std::span<const double> c_hat_i, std::span<const double> c_hat_j,
                  std::span<const double> c_i, std::span<const double> c_j,
                  const BinnedConfig& config) {
  if (c_hat_i.size() != c_hat_j.size() || c_i.size() != c_j.size() ||
      c_hat_i.size() != c_i.size())
    throw ArgumentError("icl_metric: column length mismatch");
  const BinnedInfo hat = binned_mi(c_hat_i, c_hat_j, config);
  if (!(hat.entropy_u > 0.0) || !(hat.entropy_v > 0.0)) return 0.0;
  const BinnedInfo truth = binned_mi(c_i, c_j, config);
  const double norm = std::sqrt(hat.entropy_u * hat.entropy_v);
  return std::max(0.0, (hat.mutual_information - truth.mutual_information) / norm);
}

std::vector<double> FaithfulnessReport::mean_icl_per_concept() const {
  const std::size_t k = icl.rows();
  std::vector<double> out(k, 0.0);
  if (k < 2) return out;
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) sum += icl(i, j);
    out[i] = sum / static_cast<double>(k - 1);
  }
  return out;
}

json to_json(const FaithfulnessReport& r) {
  json icl = json::array();
  for (std::size_t i = 0; i < r.icl.rows(); ++i) {
    const auto row = r.icl.row(i);
    icl.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return json{{"report_version", kReportVersion},
              {"tool_version", kToolVersion},
              {"split", r.split},
              {"accuracy", r.accuracy},
              {"concept_names", r.concept_names},
              {"rmse", r.rmse},
              {"c_rmse", r.c_rmse},
              {"ctl", r.ctl},
              {"mean_ctl", r.mean_ctl},
              {"icl", icl},
              {"mean_icl", r.mean_icl},
              {"aggregate_leakage", r.aggregate_leakage},
              {"config_fingerprint", r.config_fingerprint},
              {"seed", r.seed},
              {"head_kind", r.head_kind}};
}

FaithfulnessReport report_from_json(const json& j) {
  try {
    if (j.at("report_version").get<int>() != kReportVersion)
      throw ArgumentError("unsupported report version " + j.at("report_version").dump());
    FaithfulnessReport r;
    r.split = j.at("split").get<std::string>();
    r.accuracy = j.at("accuracy").get<double>();
    r.concept_names = j.at("concept_names").get<std::vector<std::string>>();
    r.rmse = j.at("rmse").get<std::vector<double>>();
    r.c_rmse = j.at("c_rmse").get<double>();
    r.ctl = j.at("ctl").get<std::vector<double>>();
    r.mean_ctl = j.at("mean_ctl").get<double>();
    const auto rows = j.at("icl").get<std::vector<std::vector<double>>>();
    r.icl = Matrix(rows.size(), rows.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
      if (rows[a].size() != rows.size()) throw ArgumentError("report icl matrix is not square");
      for (std::size_t b = 0; b < rows.size(); ++b) r.icl(a, b) = rows[a][b];
    }
    r.mean_icl = j.at("mean_icl").get<double>();
    r.aggregate_leakage = j.at("aggregate_leakage").get<double>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.head_kind = j.at("head_kind").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad report: ") + e.what());
  }
}

void check_compatibility(const CbmModel& model, const Dataset& dataset) {
  if (model.input_width != dataset.input_width())
    throw ArgumentError("model expects input width " + std::to_string(model.input_width) +
                        ", dataset has " + std::to_string(dataset.input_width()));
  if (model.concepts() != dataset.concepts.size())
    throw ArgumentError("model has k=" + std::to_string(model.concepts()) +
                        " concepts, dataset has k=" + std::to_string(dataset.concepts.size()));
  if (model.concept_names != dataset.concepts.names())
    throw ArgumentError("model and dataset concept names differ");
  if (model.label_names != dataset.label_names)
    throw ArgumentError("model and dataset label names differ");
}

namespace {

double accuracy_percent(const std::vector<int>& pred, std::span<const int> y) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(y.size());
}

SplitData require_split(const Dataset& dataset, Split split) {
  if (!has_split(dataset, split))
    throw ArgumentError("dataset has no " + to_string(split) + " split");
  return extract_split(dataset, split);
}

}  // namespace

FaithfulnessReport evaluate(const CbmModel& model, const Dataset& dataset, Split split,
                            const EvalConfig& config) {
  check_compatibility(model, dataset);
  const SplitData data = require_split(dataset, split);
  const ForwardResult fw = model_forward(data.z, model);
  const std::size_t k = model.concepts();

  FaithfulnessReport r;
  r.split = to_string(split);
  r.accuracy = accuracy_percent(argmax_rows(fw.logits), data.y);
  r.concept_names = model.concept_names;
  const ConceptRmse rm = concept_rmse(fw.concepts, data.c);
  r.rmse = rm.per_concept;
  r.c_rmse = rm.aggregate;

  std::vector<std::vector<double>> hat_cols(k), true_cols(k);
  for (std::size_t i = 0; i < k; ++i) {
    hat_cols[i] = fw.concepts.column(i);
    true_cols[i] = data.c.column(i);
  }
  r.ctl.resize(k);
  for (std::size_t i = 0; i < k; ++i)
    r.ctl[i] = ctl_metric(hat_cols[i], true_cols[i], data.y, config.kde);
  r.mean_ctl = std::accumulate(r.ctl.begin(), r.ctl.end(), 0.0) / static_cast<double>(k);

  r.icl = Matrix(k, k);
  double icl_sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v =
          icl_metric(hat_cols[i], hat_cols[j], true_cols[i], true_cols[j], config.binned);
      r.icl(i, j) = v;
      r.icl(j, i) = v;
      icl_sum += v;
    }
  }
  const std::size_t pairs = k * (k - 1) / 2;
  r.mean_icl = pairs > 0 ? icl_sum / static_cast<double>(pairs) : 0.0;
  r.aggregate_leakage = (r.mean_ctl + r.mean_icl) / 2.0;
  r.config_fingerprint = model.config_fingerprint;
  r.seed = model.seed;
  r.head_kind = to_string(head_kind(model.head));
  return r;
}

TierAnalysis rmse_tier_analysis(std::span<const double> rmse, std::span<const double> ctl) {
  const std::size_t k = rmse.size();
  if (ctl.size() != k) throw ArgumentError("rmse_tier_analysis: rmse and ctl differ in length");
  if (k < 3) throw ArgumentError("rmse_tier_analysis needs at least 3 concepts");
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rmse[a] < rmse[b]; });
  TierAnalysis out;
  const std::array<const char*, 3> names{"high", "average", "low"};
  std::size_t pos = 0;
  for (std::size_t t = 0; t < 3; ++t) {
    const std::size_t size = k / 3 + (t < k % 3 ? 1 : 0);
    Tier& tier = out.tiers[t];
    tier.name = names[t];
    for (std::size_t m = 0; m < size; ++m, ++pos) {
      tier.concepts.push_back(order[pos]);
      tier.ctl.push_back(ctl[order[pos]]);
    }
    tier.mean_ctl = std::accumulate(tier.ctl.begin(), tier.ctl.end(), 0.0) /
                    static_cast<double>(tier.ctl.size());
  }
  const auto versus_low = [&](const Tier& tier) {
    const Tier& low = out.tiers[2];
    const std::size_t n = std::min(low.ctl.size(), tier.ctl.size());
    return paired_t_test(std::span<const double>(low.ctl).first(n),
                         std::span<const double>(tier.ctl).first(n));
  };
  out.high_vs_low = versus_low(out.tiers[0]);
  out.average_vs_low = versus_low(out.tiers[1]);
  return out;
}

namespace {

json to_json(const TTestResult& r) {
  return json{{"t", r.defined ? json(r.t) : json(nullptr)},
              {"df", r.df},
              {"p_value", r.p_value},
              {"defined", r.defined}};
}

}  // namespace

json to_json(const TierAnalysis& a) {
  json tiers = json::array();
  for (const auto& t : a.tiers)
    tiers.push_back({{"name", t.name}, {"concepts", t.concepts}, {"ctl", t.ctl},
                     {"mean_ctl", t.mean_ctl}});
  return json{{"tiers", tiers},
              {"high_vs_low", to_json(a.high_vs_low)},
              {"average_vs_low", to_json(a.average_vs_low)}};
}

LeakageCorrelation leakage_correlation(std::span<const double> ctl,
                                       std::span<const double> mean_icl) {
  if (ctl.size() != mean_icl.size())
    throw ArgumentError("leakage_correlation: inputs differ in length");
  if (ctl.size() < 3) throw ArgumentError("leakage_correlation needs at least 3 concepts");
  return {pearson(ctl, mean_icl), spearman(ctl, mean_icl)};
}

ActivationHistogram activation_distributions(const CbmModel& model, const Dataset& dataset,
                                             Split split, std::size_t concept_index) {
  check_compatibility(model, dataset);
  if (concept_index >= model.concepts())
    throw ArgumentError("concept index " + std::to_string(concept_index) + " out of range");
  const SplitData data = require_split(dataset, split);
  const ForwardResult fw = model_forward(data.z, model);
  const auto values = fw.concepts.column(concept_index);
  const auto pred = argmax_rows(fw.logits);

  ActivationHistogram h;
  h.concept_index = concept_index;
  h.concept_name = model.concept_names[concept_index];
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double width = (hi - lo) / static_cast<double>(kActivationBins);
  h.edges.resize(kActivationBins + 1);
  for (std::size_t b = 0; b <= kActivationBins; ++b)
    h.edges[b] = b == kActivationBins ? hi : lo + width * static_cast<double>(b);

  std::vector<std::vector<std::size_t>> per_class(model.classes(),
                                                  std::vector<std::size_t>(kActivationBins, 0));
  std::vector<bool> present(model.classes(), false);
  for (std::size_t r = 0; r < values.size(); ++r) {
    auto bin = static_cast<std::size_t>((values[r] - lo) / width);
    bin = std::min(bin, kActivationBins - 1);
    const auto cls = static_cast<std::size_t>(pred[r]);
    per_class[cls][bin] += 1;
    present[cls] = true;
  }
  for (std::size_t o = 0; o < model.classes(); ++o) {
    if (!present[o]) continue;
    h.labels.push_back(model.label_names[o]);
    h.counts.push_back(std::move(per_class[o]));
  }
  return h;
}

json to_json(const ActivationHistogram& h) {
  std::vector<double> centers(kActivationBins);
  for (std::size_t b = 0; b < kActivationBins; ++b)
    centers[b] = (h.edges[b] + h.edges[b + 1]) / 2.0;
  json series = json::array();
  for (std::size_t s = 0; s < h.labels.size(); ++s)
    series.push_back({{"label", h.labels[s]}, {"x", centers}, {"y", h.counts[s]}});
  return json{{"kind", "activation_distribution"},
              {"concept_index", h.concept_index},
              {"concept", h.concept_name},
              {"edges", h.edges},
              {"series", series}};
}

Matrix intervened_logits(const Matrix& c_hat, const Matrix& c,
                         std::span<const std::size_t> columns, const Head& head) {
  if (c_hat.rows() != c.rows() || c_hat.cols() != c.cols())
    throw ArgumentError("intervention: predicted and true concept shapes differ");
  Matrix mixed = c_hat;
  for (const std::size_t col : columns) {
    if (col >= c.cols()) throw ArgumentError("intervention: concept index out of range");
    for (std::size_t r = 0; r < c.rows(); ++r) mixed(r, col) = c(r, col);
  }
  return head_forward(mixed, head);
}

InterventionCurve intervene(const CbmModel& model, const Dataset& dataset) {
  check_compatibility(model, dataset);
  const SplitData val = require_split(dataset, Split::kVal);
  const SplitData test = require_split(dataset, Split::kTest);
  const std::size_t k = model.concepts();

  InterventionCurve curve;
  const Matrix val_hat = bottleneck_forward(val.z, model.bottleneck);
  const double val_base = accuracy_percent(argmax_rows(head_forward(val_hat, model.head)), val.y);
  curve.gains.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::array<std::size_t, 1> one{i};
    curve.gains[i] =
        accuracy_percent(argmax_rows(intervened_logits(val_hat, val.c, one, model.head)), val.y) -
        val_base;
  }
  curve.order.resize(k);
  std::iota(curve.order.begin(), curve.order.end(), std::size_t{0});
  std::stable_sort(curve.order.begin(), curve.order.end(),
                   [&](std::size_t a, std::size_t b) { return curve.gains[a] > curve.gains[b]; });

  const Matrix test_hat = bottleneck_forward(test.z, model.bottleneck);
  for (std::size_t j = 0; j <= k; ++j) {
    const std::span<const std::size_t> top(curve.order.data(), j);
    curve.accuracy.push_back(
        accuracy_percent(argmax_rows(intervened_logits(test_hat, test.c, top, model.head)), test.y));
  }
  return curve;
}

json to_json(const InterventionCurve& curve) {
  std::vector<std::size_t> x(curve.accuracy.size());
  std::iota(x.begin(), x.end(), std::size_t{0});
  return json{{"kind", "intervention"},
              {"order", curve.order},
              {"gains", curve.gains},
              {"series", json::array({{{"label", "test accuracy"}, {"x", x}, {"y", curve.accuracy}}})}};
}

json pareto_export(std::span<const ParetoInput> reports) {
  if (reports.empty()) throw ArgumentError("pareto_export needs at least one report");
  json points = json::array();
  for (std::size_t a = 0; a < reports.size(); ++a) {
    const auto& ra = reports[a].report;
    bool dominated = false;
    for (std::size_t b = 0; b < reports.size() && !dominated; ++b) {
      if (a == b) continue;
      const auto& rb = reports[b].report;
      const bool no_worse =
          rb.aggregate_leakage <= ra.aggregate_leakage && rb.c_rmse <= ra.c_rmse;
      const bool better = rb.aggregate_leakage < ra.aggregate_leakage || rb.c_rmse < ra.c_rmse;
      dominated = no_worse && better;
    }
    points.push_back({{"label", reports[a].label},
                      {"aggregate_leakage", ra.aggregate_leakage},
                      {"c_rmse", ra.c_rmse},
                      {"accuracy", ra.accuracy},
                      {"config_fingerprint", ra.config_fingerprint},
                      {"dominated", dominated}});
  }
  return json{{"kind", "pareto"},
              {"report_version", kReportVersion},
              {"x_axis", "aggregate_leakage"},
              {"y_axis", "c_rmse"},
              {"points", points}};
}

}  // namespace fcbm
