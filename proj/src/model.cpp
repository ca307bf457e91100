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

#include "fcbm/model.hpp"

#include <algorithm>
#include <cmath>

#include "fcbm/errors.hpp"

namespace fcbm {
namespace {

// Position of x within the grid: the left knot of its cell and the fraction
// of the way to the right knot.
struct GridCell {
  std::size_t left = 0;
  double frac = 0.0;
  bool differentiable = false;  // strictly inside the grid and off every knot
};

GridCell locate(double x, const KanGrid& grid) {
  GridCell cell;
  const double clamped = std::clamp(x, grid.lo, grid.hi);
  const double t = (clamped - grid.lo) / grid.spacing();
  const double floor_t = std::floor(t);
  if (floor_t >= static_cast<double>(grid.knots - 1)) {
    cell.left = grid.knots - 2;
    cell.frac = 1.0;
  } else {
    cell.left = static_cast<std::size_t>(std::max(floor_t, 0.0));
    cell.frac = t - floor_t;
  }
  cell.differentiable = x > grid.lo && x < grid.hi && cell.frac > 0.0 && cell.frac < 1.0;
  return cell;
}

void check_width(const Matrix& input, std::size_t expected, const char* what) {
  if (input.cols() != expected) {
    throw ArgumentError(std::string(what) + ": input width " + std::to_string(input.cols()) +
                        " does not match expected " + std::to_string(expected));
  }
}

void check_upstream(const Matrix& upstream, std::size_t rows, std::size_t cols,
                    const char* what) {
  if (upstream.rows() != rows || upstream.cols() != cols) {
    throw ArgumentError(std::string(what) + ": upstream gradient shape mismatch");
  }
}

}  // namespace

BottleneckLayer::BottleneckLayer(std::size_t concepts, std::size_t input_width)
    : weight(concepts, input_width), bias(concepts, 0.0) {}

void BottleneckLayer::initialize(Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(input_width()));
  for (double& w : weight.data()) w = rng.normal(0.0, sd);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Matrix bottleneck_forward(const Matrix& z, const BottleneckLayer& layer) {
  check_width(z, layer.input_width(), "bottleneck_forward");
  const std::size_t k = layer.concepts();
  Matrix out(z.rows(), k);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto zr = z.row(r);
    for (std::size_t j = 0; j < k; ++j) {
      const auto w = layer.weight.row(j);
      double acc = layer.bias[j];
      for (std::size_t c = 0; c < zr.size(); ++c) acc += w[c] * zr[c];
      out(r, j) = acc;
    }
  }
  return out;
}

BottleneckGrads bottleneck_backward(const Matrix& z, const BottleneckLayer& layer,
                                    const Matrix& upstream) {
  check_width(z, layer.input_width(), "bottleneck_backward");
  check_upstream(upstream, z.rows(), layer.concepts(), "bottleneck_backward");
  BottleneckGrads g{Matrix(layer.concepts(), layer.input_width()),
                    std::vector<double>(layer.concepts(), 0.0), Matrix(z.rows(), z.cols())};
  for (std::size_t r = 0; r < z.rows(); ++r) {
    const auto zr = z.row(r);
    auto gin = g.input.row(r);
    for (std::size_t j = 0; j < layer.concepts(); ++j) {
      const double u = upstream(r, j);
      if (u == 0.0) continue;
      g.bias[j] += u;
      auto gw = g.weight.row(j);
      const auto w = layer.weight.row(j);
      for (std::size_t c = 0; c < zr.size(); ++c) {
        gw[c] += u * zr[c];
        gin[c] += u * w[c];
      }
    }
  }
  return g;
}

void KanGrid::validate() const {
  if (knots < 2) throw ArgumentError("KanGrid: need at least 2 knots");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ArgumentError("KanGrid: bounds must be finite with hi > lo");
  }
}

std::vector<double> triangular_basis(double x, const KanGrid& grid) {
  grid.validate();
  std::vector<double> basis(grid.knots, 0.0);
  const GridCell cell = locate(x, grid);
  basis[cell.left] = 1.0 - cell.frac;
  basis[cell.left + 1] = cell.frac;
  return basis;
}

KanHead::KanHead(std::size_t inputs_, std::size_t outputs_, KanGrid grid_)
    : grid(grid_),
      inputs(inputs_),
      outputs(outputs_),
      coeffs(inputs_ * outputs_ * grid_.knots, 0.0),
      scale(outputs_, 1.0) {
  grid.validate();
}

double KanHead::edge(std::size_t i, std::size_t o, double x) const {
  const GridCell cell = locate(x, grid);
  return (1.0 - cell.frac) * coeff(i, o, cell.left) + cell.frac * coeff(i, o, cell.left + 1);
}

void KanHead::initialize(Rng& rng) {
  const double sd = 0.1 / std::pow(static_cast<double>(grid.knots), 0.25);
  for (double& c : coeffs) c = rng.normal(0.0, sd);
  std::fill(scale.begin(), scale.end(), 1.0);
}

Matrix kan_forward(const Matrix& c_hat, const KanHead& head) {
  check_width(c_hat, head.inputs, "kan_forward");
  Matrix logits(c_hat.rows(), head.outputs);
  for (std::size_t r = 0; r < c_hat.rows(); ++r) {
    for (std::size_t o = 0; o < head.outputs; ++o) {
      double sum = 0.0;
      for (std::size_t i = 0; i < head.inputs; ++i) sum += head.edge(i, o, c_hat(r, i));
      logits(r, o) = head.scale[o] * sum;
    }
  }
  return logits;
}

KanGrads kan_backward(const Matrix& c_hat, const KanHead& head, const Matrix& upstream) {
  check_width(c_hat, head.inputs, "kan_backward");
  check_upstream(upstream, c_hat.rows(), head.outputs, "kan_backward");
  KanGrads g{std::vector<double>(head.coeffs.size(), 0.0),
             std::vector<double>(head.outputs, 0.0), Matrix(c_hat.rows(), c_hat.cols())};
  const double inv_h = 1.0 / head.grid.spacing();
  const std::size_t knots = head.grid.knots;
  for (std::size_t r = 0; r < c_hat.rows(); ++r) {
    for (std::size_t i = 0; i < head.inputs; ++i) {
      const GridCell cell = locate(c_hat(r, i), head.grid);
      double d_input = 0.0;
      for (std::size_t o = 0; o < head.outputs; ++o) {
        const double u = upstream(r, o);
        const double s = head.scale[o];
        const double left = head.coeff(i, o, cell.left);
        const double right = head.coeff(i, o, cell.left + 1);
        g.scale[o] += u * ((1.0 - cell.frac) * left + cell.frac * right);
        const std::size_t base = (i * head.outputs + o) * knots + cell.left;
        g.coeffs[base] += u * s * (1.0 - cell.frac);
        g.coeffs[base + 1] += u * s * cell.frac;
        if (cell.differentiable) d_input += u * s * (right - left) * inv_h;
      }
      g.input(r, i) = d_input;
    }
  }
  return g;
}

std::vector<std::pair<double, double>> response_curve(const KanHead& head, std::size_t input,
                                                      std::size_t output,
                                                      std::size_t n_points) {
  if (input >= head.inputs || output >= head.outputs) {
    throw ArgumentError("response_curve: input or output index out of range");
  }
  if (n_points < 2) throw ArgumentError("response_curve: need at least 2 points");
  std::vector<std::pair<double, double>> curve(n_points);
  const double step = (head.grid.hi - head.grid.lo) / static_cast<double>(n_points - 1);
  for (std::size_t p = 0; p < n_points; ++p) {
    const double x = p + 1 == n_points ? head.grid.hi : head.grid.lo + step * static_cast<double>(p);
    curve[p] = {x, head.scale[output] * head.edge(input, output, x)};
  }
  return curve;
}

Matrix kan_contributions(std::span<const double> c_hat, const KanHead& head) {
  if (c_hat.size() != head.inputs) {
    throw ArgumentError("kan_contributions: expected " + std::to_string(head.inputs) +
                        " concept values, got " + std::to_string(c_hat.size()));
  }
  Matrix out(head.inputs, head.outputs);
  for (std::size_t i = 0; i < head.inputs; ++i) {
    for (std::size_t o = 0; o < head.outputs; ++o) {
      out(i, o) = head.scale[o] * head.edge(i, o, c_hat[i]);
    }
  }
  return out;
}

LinearHead::LinearHead(std::size_t inputs, std::size_t outputs)
    : weight(outputs, inputs), bias(outputs, 0.0) {}

void LinearHead::initialize(Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(inputs()));
  for (double& w : weight.data()) w = rng.normal(0.0, sd);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Matrix linear_forward(const Matrix& c_hat, const LinearHead& head) {
  check_width(c_hat, head.inputs(), "linear_forward");
  Matrix out(c_hat.rows(), head.outputs());
  for (std::size_t r = 0; r < c_hat.rows(); ++r) {
    const auto x = c_hat.row(r);
    for (std::size_t o = 0; o < head.outputs(); ++o) {
      const auto w = head.weight.row(o);
      double acc = head.bias[o];
      for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * x[i];
      out(r, o) = acc;
    }
  }
  return out;
}

LinearGrads linear_backward(const Matrix& c_hat, const LinearHead& head,
                            const Matrix& upstream) {
  check_width(c_hat, head.inputs(), "linear_backward");
  check_upstream(upstream, c_hat.rows(), head.outputs(), "linear_backward");
  LinearGrads g{Matrix(head.outputs(), head.inputs()), std::vector<double>(head.outputs(), 0.0),
                Matrix(c_hat.rows(), c_hat.cols())};
  for (std::size_t r = 0; r < c_hat.rows(); ++r) {
    const auto x = c_hat.row(r);
    auto gin = g.input.row(r);
    for (std::size_t o = 0; o < head.outputs(); ++o) {
      const double u = upstream(r, o);
      g.bias[o] += u;
      auto gw = g.weight.row(o);
      const auto w = head.weight.row(o);
      for (std::size_t i = 0; i < x.size(); ++i) {
        gw[i] += u * x[i];
        gin[i] += u * w[i];
      }
    }
  }
  return g;
}

std::string to_string(HeadKind kind) { return kind == HeadKind::kKan ? "kan" : "linear"; }

HeadKind parse_head_kind(const std::string& name) {
  if (name == "kan") return HeadKind::kKan;
  if (name == "linear") return HeadKind::kLinear;
  throw ArgumentError("unknown head kind '" + name + "' (expected kan or linear)");
}

HeadKind head_kind(const Head& head) {
  return std::holds_alternative<KanHead>(head) ? HeadKind::kKan : HeadKind::kLinear;
}

std::size_t head_inputs(const Head& head) {
  if (const auto* kan = std::get_if<KanHead>(&head)) return kan->inputs;
  return std::get<LinearHead>(head).inputs();
}

std::size_t head_outputs(const Head& head) {
  if (const auto* kan = std::get_if<KanHead>(&head)) return kan->outputs;
  return std::get<LinearHead>(head).outputs();
}

Matrix head_forward(const Matrix& c_hat, const Head& head) {
  if (const auto* kan = std::get_if<KanHead>(&head)) return kan_forward(c_hat, *kan);
  return linear_forward(c_hat, std::get<LinearHead>(head));
}

HeadGrads head_backward(const Matrix& c_hat, const Head& head, const Matrix& upstream) {
  if (const auto* kan = std::get_if<KanHead>(&head)) {
    KanGrads g = kan_backward(c_hat, *kan, upstream);
    return {{std::move(g.coeffs), std::move(g.scale)}, std::move(g.input)};
  }
  LinearGrads g = linear_backward(c_hat, std::get<LinearHead>(head), upstream);
  return {{std::move(g.weight.data()), std::move(g.bias)}, std::move(g.input)};
}

std::vector<std::span<double>> head_parameters(Head& head) {
  if (auto* kan = std::get_if<KanHead>(&head)) {
    return {std::span<double>(kan->coeffs), std::span<double>(kan->scale)};
  }
  auto& lin = std::get<LinearHead>(head);
  return {std::span<double>(lin.weight.data()), std::span<double>(lin.bias)};
}

void CbmModel::validate() const {
  if (bottleneck.input_width() != input_width) {
    throw ArgumentError("model: bottleneck input width " +
                        std::to_string(bottleneck.input_width()) + " != " +
                        std::to_string(input_width));
  }
  if (bottleneck.concepts() != concept_names.size() || bottleneck.bias.size() != concepts()) {
    throw ArgumentError("model: bottleneck has " + std::to_string(bottleneck.concepts()) +
                        " outputs but " + std::to_string(concept_names.size()) +
                        " concept names");
  }
  if (head_inputs(head) != concepts()) {
    throw ArgumentError("model: head input width does not match concept count");
  }
  if (head_outputs(head) != label_names.size()) {
    throw ArgumentError("model: head has " + std::to_string(head_outputs(head)) +
                        " outputs but " + std::to_string(label_names.size()) + " labels");
  }
  if (const auto* kan = std::get_if<KanHead>(&head)) {
    kan->grid.validate();
    if (kan->coeffs.size() != kan->inputs * kan->outputs * kan->grid.knots ||
        kan->scale.size() != kan->outputs) {
      throw ArgumentError("model: KAN parameter sizes inconsistent with its shape");
    }
  } else {
    const auto& lin = std::get<LinearHead>(head);
    if (lin.bias.size() != lin.outputs()) {
      throw ArgumentError("model: linear head bias size mismatch");
    }
  }
}

CbmModel make_model(std::vector<std::string> concept_names,
                    std::vector<std::string> label_names, std::size_t input_width,
                    HeadKind kind, const KanGrid& grid, Rng& rng) {
  CbmModel model;
  const std::size_t k = concept_names.size();
  const std::size_t classes = label_names.size();
  model.concept_names = std::move(concept_names);
  model.label_names = std::move(label_names);
  model.input_width = input_width;
  model.bottleneck = BottleneckLayer(k, input_width);
  model.bottleneck.initialize(rng);
  if (kind == HeadKind::kKan) {
    KanHead head(k, classes, grid);
    head.initialize(rng);
    model.head = std::move(head);
  } else {
    LinearHead head(k, classes);
    head.initialize(rng);
    model.head = std::move(head);
  }
  model.validate();
  return model;
}

ForwardResult model_forward(const Matrix& z, const CbmModel& model) {
  ForwardResult out;
  out.concepts = bottleneck_forward(z, model.bottleneck);
  out.logits = head_forward(out.concepts, model.head);
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    out[r] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace fcbm
