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

#include "fcbm/density.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>

#include "fcbm/errors.hpp"

namespace fcbm {
namespace {

constexpr double kScottFactor = 1.06;

struct LabelIndex {
  std::vector<int> labels;           // sorted distinct labels
  std::vector<std::size_t> dense;    // dense class id per sample
  std::vector<std::size_t> counts;   // samples per dense class
};

LabelIndex index_labels(std::span<const int> y) {
  LabelIndex idx;
  idx.labels.assign(y.begin(), y.end());
  std::sort(idx.labels.begin(), idx.labels.end());
  idx.labels.erase(std::unique(idx.labels.begin(), idx.labels.end()), idx.labels.end());
  idx.counts.assign(idx.labels.size(), 0);
  idx.dense.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto pos = static_cast<std::size_t>(
        std::lower_bound(idx.labels.begin(), idx.labels.end(), y[i]) - idx.labels.begin());
    idx.dense[i] = pos;
    idx.counts[pos] += 1;
  }
  return idx;
}

double population_std(std::span<const double> x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

void check_kde_inputs(std::span<const double> x, std::span<const int> y,
                      const KdeConfig& config, const LabelIndex& idx) {
  config.validate();
  if (x.size() != y.size()) {
    throw ArgumentError("kde_mi: x has " + std::to_string(x.size()) + " values but y has " +
                        std::to_string(y.size()));
  }
  if (x.size() < 4) {
    throw EstimatorError("kde_mi: need at least 4 samples, got " + std::to_string(x.size()));
  }
  for (std::size_t c = 0; c < idx.labels.size(); ++c) {
    if (idx.counts[c] < config.min_class_count) {
      throw EstimatorError("kde_mi: class " + std::to_string(idx.labels[c]) + " has " +
                           std::to_string(idx.counts[c]) + " samples, need at least " +
                           std::to_string(config.min_class_count));
    }
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericError("kde_mi: non-finite sample value");
  }
}

// Log of the un-normalized leave-one-out kernel sums, over all samples and
// over same-class samples. The Gaussian normalization constant cancels in
// the MI ratio and is left out.
struct LooLogSums {
  std::vector<double> all;
  std::vector<double> same_class;
};

LooLogSums loo_log_sums(std::span<const double> x, const LabelIndex& idx, double sigma) {
  const std::size_t n = x.size();
  const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
  LooLogSums out{std::vector<double>(n), std::vector<double>(n)};
  std::vector<double> exponent(n);
  for (std::size_t i = 0; i < n; ++i) {
    double max_all = -std::numeric_limits<double>::infinity();
    double max_same = max_all;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double u = x[i] - x[j];
      exponent[j] = -u * u * inv_two_var;
      max_all = std::max(max_all, exponent[j]);
      if (idx.dense[j] == idx.dense[i]) max_same = std::max(max_same, exponent[j]);
    }
    double sum_all = 0.0, sum_same = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      sum_all += std::exp(exponent[j] - max_all);
      if (idx.dense[j] == idx.dense[i]) sum_same += std::exp(exponent[j] - max_same);
    }
    out.all[i] = max_all + std::log(sum_all);
    out.same_class[i] = max_same + std::log(sum_same);
  }
  return out;
}

double mi_from_sums(const LooLogSums& sums, const LabelIndex& idx) {
  const std::size_t n = sums.all.size();
  const double log_n_minus_1 = std::log(static_cast<double>(n - 1));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double log_cond =
        sums.same_class[i] - std::log(static_cast<double>(idx.counts[idx.dense[i]] - 1));
    const double log_marg = sums.all[i] - log_n_minus_1;
    total += log_cond - log_marg;
  }
  return total / static_cast<double>(n);
}

double entropy_from_counts(std::span<const std::size_t> counts, std::size_t n) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

void KdeConfig::validate() const {
  if (bandwidth_rule == BandwidthRule::kFixed && !(fixed_sigma > 0.0)) {
    throw ArgumentError("KdeConfig: fixed sigma must be > 0");
  }
  if (!(sigma_floor > 0.0)) throw ArgumentError("KdeConfig: sigma_floor must be > 0");
  if (min_class_count < 2) throw ArgumentError("KdeConfig: min_class_count must be >= 2");
}

void BinnedConfig::validate() const {
  if (n_bins < 2) throw ArgumentError("BinnedConfig: n_bins must be >= 2");
}

double scott_bandwidth(std::span<const double> x, const KdeConfig& config) {
  if (x.empty()) throw ArgumentError("scott_bandwidth: empty sample");
  const double n = static_cast<double>(x.size());
  const double sigma = kScottFactor * population_std(x) * std::pow(n, -0.2);
  return std::max(sigma, config.sigma_floor);
}

double kde_bandwidth(std::span<const double> x, const KdeConfig& config) {
  if (config.bandwidth_rule == BandwidthRule::kFixed) return config.fixed_sigma;
  return scott_bandwidth(x, config);
}

double gaussian_kernel(double u, double sigma) {
  return std::exp(-u * u / (2.0 * sigma * sigma)) /
         std::sqrt(2.0 * std::numbers::pi * sigma * sigma);
}

double kde_marginal_density(std::span<const double> x, std::size_t i, double sigma) {
  if (x.size() < 2) throw EstimatorError("kde_marginal_density: need at least 2 samples");
  if (i >= x.size()) throw ArgumentError("kde_marginal_density: index out of range");
  if (!(sigma > 0.0)) throw ArgumentError("kde_marginal_density: sigma must be > 0");
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != i) sum += gaussian_kernel(x[i] - x[j], sigma);
  }
  return sum / static_cast<double>(x.size() - 1);
}

double kde_conditional_density(std::span<const double> x, std::span<const int> y,
                               std::size_t i, int label, double sigma,
                               std::size_t min_class_count) {
  if (x.size() != y.size()) throw ArgumentError("kde_conditional_density: length mismatch");
  if (i >= x.size()) throw ArgumentError("kde_conditional_density: index out of range");
  if (!(sigma > 0.0)) throw ArgumentError("kde_conditional_density: sigma must be > 0");
  const auto class_count =
      static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
  if (class_count < min_class_count) {
    throw EstimatorError("kde_conditional_density: class " + std::to_string(label) + " has " +
                         std::to_string(class_count) + " samples, need at least " +
                         std::to_string(min_class_count));
  }
  const std::size_t self = y[i] == label ? 1 : 0;
  double sum = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (j != i && y[j] == label) sum += gaussian_kernel(x[i] - x[j], sigma);
  }
  return sum / static_cast<double>(class_count - self);
}

double kde_mi(std::span<const double> x, std::span<const int> y, const KdeConfig& config) {
  const LabelIndex idx = index_labels(y);
  check_kde_inputs(x, y, config, idx);
  const double sigma = kde_bandwidth(x, config);
  return mi_from_sums(loo_log_sums(x, idx, sigma), idx);
}

std::vector<double> kde_mi_backward(std::span<const double> x, std::span<const int> y,
                                    const KdeConfig& config) {
  const LabelIndex idx = index_labels(y);
  check_kde_inputs(x, y, config, idx);
  const std::size_t n = x.size();
  const double sigma = kde_bandwidth(x, config);
  const LooLogSums sums = loo_log_sums(x, idx, sigma);

  // I = N^-1 sum_i [log B_i - log A_i] + const, with A_i, B_i the all-sample
  // and same-class kernel sums. q_ij = dI/dE_ij * E_ij.
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_var = 1.0 / (sigma * sigma);
  const double inv_two_var = 0.5 * inv_var;
  std::vector<double> grad(n, 0.0);
  double d_sigma = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double u = x[i] - x[j];
      const double e = -u * u * inv_two_var;
      double q = -std::exp(e - sums.all[i]);
      if (idx.dense[j] == idx.dense[i]) q += std::exp(e - sums.same_class[i]);
      q *= inv_n;
      const double g = q * u * inv_var;
      grad[i] -= g;
      grad[j] += g;
      d_sigma += q * u * u * inv_var / sigma;
    }
  }

  if (config.bandwidth_rule == BandwidthRule::kScott) {
    const double sd = population_std(x);
    const double scale = kScottFactor * std::pow(static_cast<double>(n), -0.2);
    if (scale * sd > config.sigma_floor) {
      double mean = 0.0;
      for (double v : x) mean += v;
      mean /= static_cast<double>(n);
      for (std::size_t k = 0; k < n; ++k) {
        grad[k] += d_sigma * scale * (x[k] - mean) / (static_cast<double>(n) * sd);
      }
    }
  }
  return grad;
}

double discrete_entropy(std::span<const int> y) {
  if (y.empty()) throw ArgumentError("discrete_entropy: empty label vector");
  const LabelIndex idx = index_labels(y);
  return entropy_from_counts(idx.counts, y.size());
}

std::vector<std::size_t> equal_width_bins(std::span<const double> values,
                                          std::size_t n_bins) {
  std::vector<std::size_t> bins(values.size(), 0);
  if (values.empty()) return bins;
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) return bins;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::floor((values[i] - lo) / width));
    bins[i] = std::min(b, n_bins - 1);
  }
  return bins;
}

BinnedInfo binned_mi(std::span<const double> u, std::span<const double> v,
                     const BinnedConfig& config) {
  config.validate();
  if (u.size() != v.size()) {
    throw ArgumentError("binned_mi: u has " + std::to_string(u.size()) + " values but v has " +
                        std::to_string(v.size()));
  }
  const std::size_t n = u.size();
  if (n < config.n_bins) {
    throw ArgumentError("binned_mi: need at least n_bins=" + std::to_string(config.n_bins) +
                        " samples, got " + std::to_string(n));
  }
  const std::size_t bins = config.n_bins;
  const auto bu = equal_width_bins(u, bins);
  const auto bv = equal_width_bins(v, bins);
  std::vector<std::size_t> cu(bins, 0), cv(bins, 0), joint(bins * bins, 0);
  for (std::size_t i = 0; i < n; ++i) {
    cu[bu[i]] += 1;
    cv[bv[i]] += 1;
    joint[bu[i] * bins + bv[i]] += 1;
  }
  BinnedInfo info;
  info.entropy_u = entropy_from_counts(cu, n);
  info.entropy_v = entropy_from_counts(cv, n);
  const double nd = static_cast<double>(n);
  std::vector<double> terms;
  for (std::size_t a = 0; a < bins; ++a) {
    for (std::size_t b = 0; b < bins; ++b) {
      const std::size_t c = joint[a * bins + b];
      if (c == 0) continue;
      const double pj = static_cast<double>(c) / nd;
      terms.push_back(pj * std::log(static_cast<double>(c) * nd /
                                    (static_cast<double>(cu[a]) * static_cast<double>(cv[b]))));
    }
  }
  // Sorted summation makes binned_mi(u, v) and binned_mi(v, u) bit-identical.
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  // Plug-in MI is non-negative; clear rounding residue.
  info.mutual_information = std::max(mi, 0.0);
  return info;
}

CtlLoss ctl_loss(std::span<const double> c_hat, std::span<const double> c,
                 std::span<const int> y, const KdeConfig& config) {
  if (c_hat.size() != c.size()) throw ArgumentError("ctl_loss: column length mismatch");
  const double h_y = discrete_entropy(y);
  if (!(h_y > 0.0)) throw EstimatorError("ctl_loss: degenerate labels, H(y) = 0");
  const double mi_hat = kde_mi(c_hat, y, config);
  const double mi_true = kde_mi(c, y, config);
  CtlLoss out;
  out.delta = (mi_hat - mi_true) / h_y;
  out.loss = out.delta * out.delta;
  out.grad = kde_mi_backward(c_hat, y, config);
  const double factor = 2.0 * out.delta / h_y;
  for (double& g : out.grad) g *= factor;
  return out;
}

double task_leakage(std::span<const double> c_hat, std::span<const double> c,
                    std::span<const int> y, const KdeConfig& config) {
  if (c_hat.size() != c.size() || c.size() != y.size())
    throw ArgumentError("task_leakage: column length mismatch");
  const double h_y = discrete_entropy(y);
  if (!(h_y > 0.0)) throw EstimatorError("task_leakage: degenerate labels, H(y) = 0");
  return std::max(0.0, (kde_mi(c_hat, y, config) - kde_mi(c, y, config)) / h_y);
}

std::string leakage_batch_infeasibility(std::span<const int> y, const KdeConfig& config) {
  if (y.size() < 4) return "batch has fewer than 4 samples";
  const LabelIndex idx = index_labels(y);
  if (idx.labels.size() < 2) return "batch contains a single class";
  for (std::size_t c = 0; c < idx.labels.size(); ++c) {
    if (idx.counts[c] < config.min_class_count) {
      return "class " + std::to_string(idx.labels[c]) + " has " +
             std::to_string(idx.counts[c]) + " samples in batch";
    }
  }
  return {};
}

LeakageLoss leakage_loss_batch(const Matrix& c_hat, const Matrix& c, std::span<const int> y,
                               const KdeConfig& config) {
  if (c_hat.rows() != c.rows() || c_hat.cols() != c.cols()) {
    throw ArgumentError("leakage_loss_batch: predicted and true concept shapes differ");
  }
  if (c_hat.rows() != y.size()) {
    throw ArgumentError("leakage_loss_batch: label count does not match batch rows");
  }
  LeakageLoss out;
  out.grad = Matrix(c_hat.rows(), c_hat.cols());
  out.skip_reason = leakage_batch_infeasibility(y, config);
  if (!out.skip_reason.empty()) {
    out.skipped = true;
    return out;
  }
  const std::size_t k = c_hat.cols();
  const double inv_k = 1.0 / static_cast<double>(k);
  for (std::size_t col = 0; col < k; ++col) {
    const auto hat = c_hat.column(col);
    const auto truth = c.column(col);
    const CtlLoss term = ctl_loss(hat, truth, y, config);
    out.loss += term.loss * inv_k;
    for (std::size_t r = 0; r < hat.size(); ++r) out.grad(r, col) = term.grad[r] * inv_k;
  }
  return out;
}

}  // namespace fcbm
