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

#include <cmath>

#include "fcbm/errors.hpp"
#include "gtest/gtest.h"
#include "test_oracles.hpp"

namespace fcbm {
namespace {

const KanGrid kUnitGrid{0.0, 1.0, 3};

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

// A point inside the grid at least `margin` cell widths away from any knot.
double off_knot(Rng& rng, const KanGrid& grid, double margin = 1e-3) {
  const std::size_t cell = rng.index(grid.knots - 1);
  const double frac = rng.uniform(margin, 1.0 - margin);
  return grid.knot(cell) + frac * grid.spacing();
}

TEST(Bottleneck, ZeroAndIdentity) {
  BottleneckLayer layer(3, 3);
  Rng rng(1);
  const Matrix z = random_matrix(rng, 4, 3, -1.0, 1.0);
  const Matrix zero = bottleneck_forward(z, layer);
  for (double v : zero.data()) EXPECT_EQ(v, 0.0);
  layer.weight = Matrix::identity(3);
  EXPECT_EQ(bottleneck_forward(z, layer), z);
  EXPECT_THROW(bottleneck_forward(Matrix(2, 4), layer), ArgumentError);
}

TEST(Bottleneck, BackwardMatchesFiniteDifferences) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    BottleneckLayer layer(4, 6);
    layer.initialize(rng);
    for (double& b : layer.bias) b = rng.normal();
    const Matrix z = random_matrix(rng, 5, 6, -1.0, 1.0);
    const Matrix c = random_matrix(rng, 5, 4, 0.0, 1.0);
    const double inv = 1.0 / static_cast<double>(c.size());
    auto mse = [&](const Matrix& zz, const BottleneckLayer& l) {
      const Matrix out = bottleneck_forward(zz, l);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        s += (out.data()[i] - c.data()[i]) * (out.data()[i] - c.data()[i]);
      }
      return s * inv;
    };
    const Matrix out = bottleneck_forward(z, layer);
    Matrix upstream(5, 4);
    for (std::size_t i = 0; i < out.size(); ++i) {
      upstream.data()[i] = 2.0 * (out.data()[i] - c.data()[i]) * inv;
    }
    const auto g = bottleneck_backward(z, layer, upstream);

    const auto num_w = finite_diff_grad(
        [&](std::span<const double> w) {
          BottleneckLayer l = layer;
          l.weight.data().assign(w.begin(), w.end());
          return mse(z, l);
        },
        layer.weight.data());
    const auto num_b = finite_diff_grad(
        [&](std::span<const double> b) {
          BottleneckLayer l = layer;
          l.bias.assign(b.begin(), b.end());
          return mse(z, l);
        },
        layer.bias);
    const auto num_z = finite_diff_grad(
        [&](std::span<const double> zz) {
          return mse(Matrix(5, 6, std::vector<double>(zz.begin(), zz.end())), layer);
        },
        z.data());
    EXPECT_LT(relative_error(g.weight.data(), num_w), 1e-4);
    EXPECT_LT(relative_error(g.bias, num_b), 1e-4);
    EXPECT_LT(relative_error(g.input.data(), num_z), 1e-4);
  }
}

TEST(TriangularBasis, Examples) {
  EXPECT_EQ(triangular_basis(0.5, kUnitGrid), (std::vector<double>{0.0, 1.0, 0.0}));
  EXPECT_EQ(triangular_basis(0.25, kUnitGrid), (std::vector<double>{0.5, 0.5, 0.0}));
  EXPECT_EQ(triangular_basis(1.7, kUnitGrid), (std::vector<double>{0.0, 0.0, 1.0}));
  EXPECT_EQ(triangular_basis(-3.0, kUnitGrid), (std::vector<double>{1.0, 0.0, 0.0}));
}

TEST(TriangularBasis, PartitionOfUnity) {
  Rng rng(3);
  const KanGrid grid;  // defaults
  for (int t = 0; t < 1000; ++t) {
    const double x = rng.uniform(-1.0, 2.0);
    const auto b = triangular_basis(x, grid);
    double sum = 0.0;
    for (double v : b) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-15);
  }
}

TEST(TriangularBasis, HatShape) {
  const KanGrid grid{-0.25, 1.25, 8};
  for (std::size_t m = 0; m < grid.knots; ++m) {
    const auto at = triangular_basis(grid.knot(m), grid);
    EXPECT_NEAR(at[m], 1.0, 1e-12);
  }
  EXPECT_THROW(triangular_basis(0.0, KanGrid{0.0, 1.0, 1}), ArgumentError);
}

KanHead tent_head() {
  KanHead head(1, 1, kUnitGrid);
  head.coeff(0, 0, 1) = 2.0;
  return head;
}

TEST(KanForward, Examples) {
  KanHead zero(3, 2, KanGrid{});
  const Matrix logits = kan_forward(Matrix(4, 3, 0.3), zero);
  for (double v : logits.data()) EXPECT_EQ(v, 0.0);

  const KanHead head = tent_head();
  EXPECT_EQ(kan_forward(Matrix(1, 1, 0.5), head)(0, 0), 2.0);
  EXPECT_EQ(kan_forward(Matrix(1, 1, 0.25), head)(0, 0), 1.0);

  EXPECT_THROW(kan_forward(Matrix(1, 2, 0.5), head), ArgumentError);
}

TEST(KanForward, ScaleIsPerOutput) {
  Rng rng(4);
  KanHead head(4, 3, KanGrid{});
  head.initialize(rng);
  const Matrix x = random_matrix(rng, 6, 4, 0.0, 1.0);
  const Matrix base = kan_forward(x, head);
  head.scale[1] *= 2.0;
  const Matrix doubled = kan_forward(x, head);
  for (std::size_t r = 0; r < 6; ++r) {
    EXPECT_EQ(doubled(r, 0), base(r, 0));
    EXPECT_EQ(doubled(r, 1), 2.0 * base(r, 1));
    EXPECT_EQ(doubled(r, 2), base(r, 2));
  }
}

TEST(KanBackward, MatchesFiniteDifferences) {
  Rng rng(5);
  const KanGrid grid{-0.25, 1.25, 8};
  for (int trial = 0; trial < 20; ++trial) {
    KanHead head(5, 3, grid);
    head.initialize(rng);
    for (double& s : head.scale) s = rng.uniform(0.5, 1.5);
    Matrix x(4, 5);
    for (double& v : x.data()) v = off_knot(rng, grid);
    const Matrix w = random_matrix(rng, 4, 3, -1.0, 1.0);
    auto objective = [&](const Matrix& in, const KanHead& h) {
      const Matrix out = kan_forward(in, h);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
      return s;
    };
    const auto g = kan_backward(x, head, w);
    const auto num_c = finite_diff_grad(
        [&](std::span<const double> c) {
          KanHead h = head;
          h.coeffs.assign(c.begin(), c.end());
          return objective(x, h);
        },
        head.coeffs);
    const auto num_s = finite_diff_grad(
        [&](std::span<const double> s) {
          KanHead h = head;
          h.scale.assign(s.begin(), s.end());
          return objective(x, h);
        },
        head.scale);
    // Perturbations far below the 1e-3 cell margin keep every point in its cell.
    const auto num_x = finite_diff_grad(
        [&](std::span<const double> in) {
          return objective(Matrix(4, 5, std::vector<double>(in.begin(), in.end())), head);
        },
        x.data(), 1e-7);
    EXPECT_LT(relative_error(g.coeffs, num_c), 1e-4);
    EXPECT_LT(relative_error(g.scale, num_s), 1e-4);
    EXPECT_LT(relative_error(g.input.data(), num_x), 1e-4);
  }
}

TEST(KanBackward, ClampedInputsHaveZeroGradient) {
  Rng rng(6);
  KanHead head(2, 2, KanGrid{});
  head.initialize(rng);
  Matrix x(1, 2);
  x(0, 0) = -5.0;
  x(0, 1) = 7.0;
  const auto g = kan_backward(x, head, Matrix(1, 2, 1.0));
  EXPECT_EQ(g.input(0, 0), 0.0);
  EXPECT_EQ(g.input(0, 1), 0.0);
}

TEST(KanBackward, CoefficientGradientIsScaledBasis) {
  Rng rng(7);
  const KanGrid grid{-0.25, 1.25, 8};
  KanHead head(3, 2, grid);
  head.initialize(rng);
  head.scale = {1.5, -0.7};
  Matrix x(1, 3);
  for (double& v : x.data()) v = off_knot(rng, grid);
  Matrix up(1, 2);
  up(0, 0) = 0.3;
  up(0, 1) = -1.1;
  const auto g = kan_backward(x, head, up);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto basis = triangular_basis(x(0, i), grid);
    for (std::size_t o = 0; o < 2; ++o) {
      for (std::size_t m = 0; m < grid.knots; ++m) {
        EXPECT_DOUBLE_EQ(g.coeffs[(i * 2 + o) * grid.knots + m],
                         head.scale[o] * basis[m] * up(0, o));
      }
    }
  }
}

TEST(ResponseCurve, ZeroAndTent) {
  KanHead zero(2, 2, KanGrid{});
  for (const auto& [x, y] : response_curve(zero, 1, 0, 11)) EXPECT_EQ(y, 0.0);

  const auto curve = response_curve(tent_head(), 0, 0, 5);  // x = 0, .25, .5, .75, 1
  const std::vector<double> expected{0.0, 1.0, 2.0, 1.0, 0.0};
  for (std::size_t p = 0; p < curve.size(); ++p) {
    EXPECT_DOUBLE_EQ(curve[p].first, 0.25 * static_cast<double>(p));
    EXPECT_DOUBLE_EQ(curve[p].second, expected[p]);
  }
}

TEST(ResponseCurve, SumOverInputsIsLogitOfConstantVector) {
  Rng rng(8);
  KanHead head(4, 3, KanGrid{});
  head.initialize(rng);
  for (double& s : head.scale) s = rng.uniform(0.5, 2.0);
  const std::size_t n = 31;
  for (std::size_t o = 0; o < 3; ++o) {
    std::vector<double> sum(n, 0.0), xs(n);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto curve = response_curve(head, i, o, n);
      for (std::size_t p = 0; p < n; ++p) {
        sum[p] += curve[p].second;
        xs[p] = curve[p].first;
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      const Matrix logits = kan_forward(Matrix(1, 4, xs[p]), head);
      EXPECT_NEAR(sum[p], logits(0, o), 1e-12);
    }
  }
}

TEST(KanProperties, AdditivityAlongOneCoordinate) {
  Rng rng(9);
  const KanGrid grid;
  KanHead head(5, 3, grid);
  head.initialize(rng);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x(2, 5);
    for (double& v : x.data()) v = rng.uniform(-0.5, 1.5);
    const std::size_t i = rng.index(5);
    for (std::size_t c = 0; c < 5; ++c) {
      if (c != i) x(1, c) = x(0, c);
    }
    const Matrix logits = kan_forward(x, head);
    for (std::size_t o = 0; o < 3; ++o) {
      const double curve_diff =
          head.scale[o] * (head.edge(i, o, x(1, i)) - head.edge(i, o, x(0, i)));
      EXPECT_NEAR(logits(1, o) - logits(0, o), curve_diff, 1e-12);
    }
  }
}

TEST(KanProperties, PiecewiseLinearWithinCell) {
  Rng rng(10);
  const KanGrid grid;
  KanHead head(3, 2, grid);
  head.initialize(rng);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cell = rng.index(grid.knots - 1);
    const double a = grid.knot(cell) + rng.uniform(0.0, 0.3) * grid.spacing();
    const double b = a + rng.uniform(0.0, 0.3) * grid.spacing();
    const double c = b + rng.uniform(0.0, 0.3) * grid.spacing();
    Matrix x(3, 3);
    for (std::size_t col = 0; col < 3; ++col) x(0, col) = x(1, col) = x(2, col) = rng.uniform();
    const std::size_t i = rng.index(3);
    x(0, i) = a;
    x(1, i) = b;
    x(2, i) = c;
    const Matrix logits = kan_forward(x, head);
    for (std::size_t o = 0; o < 2; ++o) {
      const double interp =
          logits(0, o) + (logits(2, o) - logits(0, o)) * (b - a) / (c - a);
      EXPECT_NEAR(logits(1, o), interp, 1e-10);
    }
  }
}

TEST(KanContributions, SumToLogits) {
  Rng rng(11);
  KanHead head(6, 4, KanGrid{});
  head.initialize(rng);
  std::vector<double> x(6);
  for (double& v : x) v = rng.uniform(-0.3, 1.3);
  const Matrix contrib = kan_contributions(x, head);
  const Matrix logits = kan_forward(Matrix(1, 6, x), head);
  for (std::size_t o = 0; o < 4; ++o) {
    double sum = 0.0;
    for (std::size_t i = 0; i < 6; ++i) sum += contrib(i, o);
    EXPECT_NEAR(sum, logits(0, o), 1e-12);
  }
}

TEST(LinearHead, BackwardMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    LinearHead head(4, 3);
    head.initialize(rng);
    for (double& b : head.bias) b = rng.normal();
    const Matrix x = random_matrix(rng, 5, 4, 0.0, 1.0);
    const Matrix w = random_matrix(rng, 5, 3, -1.0, 1.0);
    auto objective = [&](const Matrix& in, const LinearHead& h) {
      const Matrix out = linear_forward(in, h);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
      return s;
    };
    const auto g = linear_backward(x, head, w);
    const auto num_w = finite_diff_grad(
        [&](std::span<const double> p) {
          LinearHead h = head;
          h.weight.data().assign(p.begin(), p.end());
          return objective(x, h);
        },
        head.weight.data());
    const auto num_x = finite_diff_grad(
        [&](std::span<const double> in) {
          return objective(Matrix(5, 4, std::vector<double>(in.begin(), in.end())), head);
        },
        x.data());
    EXPECT_LT(relative_error(g.weight.data(), num_w), 1e-4);
    EXPECT_LT(relative_error(g.input.data(), num_x), 1e-4);
  }
}

TEST(CbmModel, MakeAndValidate) {
  Rng rng(13);
  CbmModel model = make_model({"a", "b", "c"}, {"x", "y"}, 6, HeadKind::kKan, KanGrid{}, rng);
  EXPECT_EQ(model.concepts(), 3u);
  EXPECT_EQ(model.classes(), 2u);
  const auto out = model_forward(Matrix(2, 6, 0.1), model);
  EXPECT_EQ(out.concepts.cols(), 3u);
  EXPECT_EQ(out.logits.cols(), 2u);
  model.label_names.push_back("z");
  EXPECT_THROW(model.validate(), ArgumentError);
}

TEST(Softmax, SumsToOne) {
  const auto p = softmax(std::vector<double>{1000.0, 1001.0, 999.0});
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-15);
  EXPECT_GT(p[1], p[0]);
}

}  // namespace
}  // namespace fcbm
