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

#ifndef FCBM_NUMERICS_HPP_
#define FCBM_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace fcbm {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> column(std::size_t c) const;
  void set_column(std::size_t c, std::span<const double> values);

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Selects rows `indices` of `m`, in order.
Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices);

// Seeded random source. Raw bits come from std::mt19937_64, whose output
// sequence is fixed by the C++ standard. The distributions on top of it are
// implemented here rather than taken from <random>, whose distribution
// algorithms are implementation-defined:
//   uniform()  - top 53 bits scaled to [0, 1)
//   normal()   - Box-Muller, both variates used in order
//   index(n)   - rejection sampling on the raw 64-bit draw
//   shuffle()  - Fisher-Yates from the back using index()
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  std::size_t index(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[index(i)]);
    }
  }

  // Independent child stream, e.g. one per ablation cell.
  Rng fork(std::uint64_t stream);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with a stream id (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

struct AdamState {
  std::size_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  explicit AdamState(std::size_t n = 0)
      : first_moment(n, 0.0), second_moment(n, 0.0) {}
};

// One bias-corrected Adam step on `params`.
void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamState& state, double lr);

// v_start + (v_end - v_start) * (1 - cos(pi t / T)) / 2.
double cosine_anneal(std::size_t t, std::size_t total, double v_start, double v_end);

// Central-difference gradient of `f` at `x`.
std::vector<double> finite_diff_grad(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h = 1e-5);

// ||a - b|| / max(||a||, ||b||), or 0 when both are exactly zero.
double relative_error(std::span<const double> a, std::span<const double> b);

// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t size,
                    std::uint64_t hash = 14695981039346656037ULL);
std::uint64_t hash_doubles(std::span<const double> values,
                           std::uint64_t hash = 14695981039346656037ULL);
std::string hex64(std::uint64_t value);

}  // namespace fcbm

#endif  // FCBM_NUMERICS_HPP_
