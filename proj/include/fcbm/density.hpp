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

#ifndef FCBM_DENSITY_HPP_
#define FCBM_DENSITY_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fcbm/numerics.hpp"

namespace fcbm {

// Information quantities are in nats throughout.

enum class BandwidthRule { kScott, kFixed };

struct KdeConfig {
  BandwidthRule bandwidth_rule = BandwidthRule::kScott;
  double fixed_sigma = 1.0;
  double sigma_floor = 1e-6;
  std::size_t min_class_count = 2;

  void validate() const;
};

struct BinnedConfig {
  std::size_t n_bins = 16;

  void validate() const;
};

// max(1.06 * std(x) * N^(-1/5), sigma_floor), population std.
double scott_bandwidth(std::span<const double> x, const KdeConfig& config);

// Bandwidth selected by `config` for the sample `x`.
double kde_bandwidth(std::span<const double> x, const KdeConfig& config);

double gaussian_kernel(double u, double sigma);

// Leave-one-out density of x[i] under the Gaussian KDE of the other samples.
double kde_marginal_density(std::span<const double> x, std::size_t i, double sigma);

// Leave-one-out density of x[i] under the KDE of the samples labelled `label`.
double kde_conditional_density(std::span<const double> x, std::span<const int> y,
                               std::size_t i, int label, double sigma,
                               std::size_t min_class_count = 2);

// N^-1 sum_i log[p(x_i | y_i) / p(x_i)] with leave-one-out KDE densities.
// May be slightly negative.
double kde_mi(std::span<const double> x, std::span<const int> y,
              const KdeConfig& config);

// d kde_mi / d x_i, including the dependence of the Scott bandwidth on x.
std::vector<double> kde_mi_backward(std::span<const double> x, std::span<const int> y,
                                    const KdeConfig& config);

double discrete_entropy(std::span<const int> y);

struct BinnedInfo {
  double mutual_information = 0.0;
  double entropy_u = 0.0;
  double entropy_v = 0.0;
};

// Plug-in MI and marginal entropies on equal-width bins over each variable's
// [min, max]. A constant variable occupies one bin.
BinnedInfo binned_mi(std::span<const double> u, std::span<const double> v,
                     const BinnedConfig& config);

// Equal-width bin index of every value; exposed for tests and histograms.
std::vector<std::size_t> equal_width_bins(std::span<const double> values,
                                          std::size_t n_bins);

struct CtlLoss {
  double loss = 0.0;
  double delta = 0.0;  // (I(c_hat; y) - I(c; y)) / H(y)
  std::vector<double> grad;
};

// [(I(c_hat; y) - I(c; y)) / H(y)]^2 and its gradient w.r.t. c_hat. The
// true-concept term is a constant.
CtlLoss ctl_loss(std::span<const double> c_hat, std::span<const double> c,
                 std::span<const int> y, const KdeConfig& config);

// max(0, (I(c_hat; y) - I(c; y)) / H(y)) with KDE estimates.
double task_leakage(std::span<const double> c_hat, std::span<const double> c,
                    std::span<const int> y, const KdeConfig& config);

struct LeakageLoss {
  double loss = 0.0;
  Matrix grad;
  bool skipped = false;
  std::string skip_reason;
};

// Mean of ctl_loss over the k concept columns. Batches that cannot support
// the leave-one-out estimate (a class below min_class_count, or a single
// class) are reported as skipped with zero loss and gradient.
LeakageLoss leakage_loss_batch(const Matrix& c_hat, const Matrix& c,
                               std::span<const int> y, const KdeConfig& config);

// Empty when the batch supports the estimator, otherwise the reason.
std::string leakage_batch_infeasibility(std::span<const int> y, const KdeConfig& config);

}  // namespace fcbm

#endif  // FCBM_DENSITY_HPP_
