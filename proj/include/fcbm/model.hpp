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

#ifndef FCBM_MODEL_HPP_
#define FCBM_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fcbm/numerics.hpp"

namespace fcbm {

// Linear map from the fused embedding to concept scores: c_hat = W z + b.
// No output nonlinearity.
struct BottleneckLayer {
  Matrix weight;              // k x input_width
  std::vector<double> bias;   // k

  BottleneckLayer() = default;
  BottleneckLayer(std::size_t concepts, std::size_t input_width);

  std::size_t concepts() const { return weight.rows(); }
  std::size_t input_width() const { return weight.cols(); }

  // Normal(0, 1/sqrt(input_width)) weights, zero bias.
  void initialize(Rng& rng);
};

Matrix bottleneck_forward(const Matrix& z, const BottleneckLayer& layer);

struct BottleneckGrads {
  Matrix weight;
  std::vector<double> bias;
  Matrix input;
};

BottleneckGrads bottleneck_backward(const Matrix& z, const BottleneckLayer& layer,
                                    const Matrix& upstream);

// Uniform knot grid for the triangular basis.
struct KanGrid {
  double lo = -0.25;
  double hi = 1.25;
  std::size_t knots = 8;

  void validate() const;
  double spacing() const { return (hi - lo) / static_cast<double>(knots - 1); }
  double knot(std::size_t m) const { return lo + spacing() * static_cast<double>(m); }

  friend bool operator==(const KanGrid&, const KanGrid&) = default;
};

// Hat functions centred on the knots, evaluated at x clamped to the grid.
std::vector<double> triangular_basis(double x, const KanGrid& grid);

// Single Kolmogorov-Arnold layer with degree-1 splines:
//   logit_o = s_o * sum_i sum_m coeff[i][o][m] * B_m(c_hat_i)
struct KanHead {
  KanGrid grid;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> coeffs;  // inputs x outputs x knots, row-major
  std::vector<double> scale;   // outputs

  KanHead() = default;
  KanHead(std::size_t inputs, std::size_t outputs, KanGrid grid);

  double& coeff(std::size_t i, std::size_t o, std::size_t m) {
    return coeffs[(i * outputs + o) * grid.knots + m];
  }
  double coeff(std::size_t i, std::size_t o, std::size_t m) const {
    return coeffs[(i * outputs + o) * grid.knots + m];
  }

  // phi_{i,o}(x), without the output scale.
  double edge(std::size_t i, std::size_t o, double x) const;

  // coeffs ~ Normal(0, 0.1^2 / sqrt(M)), scale = 1.
  void initialize(Rng& rng);
};

Matrix kan_forward(const Matrix& c_hat, const KanHead& head);

struct KanGrads {
  std::vector<double> coeffs;
  std::vector<double> scale;
  Matrix input;
};

// Input derivatives are zero outside the grid and at knots.
KanGrads kan_backward(const Matrix& c_hat, const KanHead& head, const Matrix& upstream);

// n_points samples of s_o * phi_{i,o}(x) for x uniform over the grid.
std::vector<std::pair<double, double>> response_curve(const KanHead& head, std::size_t input,
                                                      std::size_t output,
                                                      std::size_t n_points);

// contributions[i][o] = s_o * phi_{i,o}(c_hat_i) for a single concept vector.
Matrix kan_contributions(std::span<const double> c_hat, const KanHead& head);

struct LinearHead {
  Matrix weight;             // outputs x inputs
  std::vector<double> bias;  // outputs

  LinearHead() = default;
  LinearHead(std::size_t inputs, std::size_t outputs);

  std::size_t inputs() const { return weight.cols(); }
  std::size_t outputs() const { return weight.rows(); }

  // Normal(0, 1/sqrt(inputs)) weights, zero bias.
  void initialize(Rng& rng);
};

Matrix linear_forward(const Matrix& c_hat, const LinearHead& head);

struct LinearGrads {
  Matrix weight;
  std::vector<double> bias;
  Matrix input;
};

LinearGrads linear_backward(const Matrix& c_hat, const LinearHead& head,
                            const Matrix& upstream);

enum class HeadKind { kKan, kLinear };

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(const std::string& name);

using Head = std::variant<KanHead, LinearHead>;

HeadKind head_kind(const Head& head);
std::size_t head_inputs(const Head& head);
std::size_t head_outputs(const Head& head);
Matrix head_forward(const Matrix& c_hat, const Head& head);

// Gradients for a head, flattened per parameter tensor in the order given by
// head_parameters().
struct HeadGrads {
  std::vector<std::vector<double>> params;
  Matrix input;
};

HeadGrads head_backward(const Matrix& c_hat, const Head& head, const Matrix& upstream);
std::vector<std::span<double>> head_parameters(Head& head);

// Full concept bottleneck model plus the metadata a checkpoint carries.
struct CbmModel {
  std::vector<std::string> concept_names;
  std::vector<std::string> label_names;
  std::size_t input_width = 0;
  BottleneckLayer bottleneck;
  Head head;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::string config_json;  // resolved training config, serialized

  std::size_t concepts() const { return bottleneck.concepts(); }
  std::size_t classes() const { return head_outputs(head); }

  // Throws ArgumentError if the parts disagree on shapes.
  void validate() const;
};

CbmModel make_model(std::vector<std::string> concept_names,
                    std::vector<std::string> label_names, std::size_t input_width,
                    HeadKind kind, const KanGrid& grid, Rng& rng);

struct ForwardResult {
  Matrix concepts;
  Matrix logits;
};

ForwardResult model_forward(const Matrix& z, const CbmModel& model);

std::vector<double> softmax(std::span<const double> logits);
std::vector<int> argmax_rows(const Matrix& logits);

}  // namespace fcbm

#endif  // FCBM_MODEL_HPP_
