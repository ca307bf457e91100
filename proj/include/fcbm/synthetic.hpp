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

#ifndef FCBM_SYNTHETIC_HPP_
#define FCBM_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "fcbm/data.hpp"
#include "fcbm/numerics.hpp"
#include "json.hpp"

namespace fcbm {

// How labels relate to concepts.
//   kClassMeans:  y ~ uniform, c = clip(M_c[y] + noise)
//   kSaturating:  c ~ clip(uniform + noise), y = argmax_o sum_{i in G_o}
//                 (1 - exp(-c_i / tau)), with G_o = {i : i mod n_classes = o}
enum class LabelRule { kClassMeans, kSaturating };

struct SyntheticSpec {
  std::size_t n_classes = 4;
  std::size_t k = 12;
  std::size_t d = 16;
  std::size_t modalities = 2;
  std::size_t n_train = 2000;
  std::size_t n_val = 500;
  std::size_t n_test = 500;
  std::optional<Matrix> concept_means;  // n_classes x k in [0, 1]; drawn if absent
  double sigma_c = 0.1;
  std::optional<Matrix> embedding_map;  // input_width x k; drawn if absent
  double sigma_z = 0.05;
  std::size_t shortcut_dims = 4;
  double shortcut_strength = 5.0;
  LabelRule label_rule = LabelRule::kClassMeans;
  double saturation_tau = 0.15;
  double label_noise = 0.02;  // chance the observed label is redrawn uniformly
  std::uint64_t seed = 42;

  std::size_t input_width() const { return d * modalities; }
  void validate() const;
};

SyntheticSpec default_synthetic_spec();
// sigma_c = sigma_z = label_noise = 0 and no shortcut channel.
SyntheticSpec noiseless_synthetic_spec();
// Saturating concept-to-label rule on top of the default spec, without the
// shortcut channel.
SyntheticSpec nonlinear_synthetic_spec();

// Accepts {"preset": "default" | "noiseless" | "nonlinear", ...overrides}.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);
nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);

// Draws a dataset. Shared draws (concept means, embedding map, labels,
// concept noise, embedding noise) are consumed in a fixed order independent
// of the shortcut settings; the shortcut channel then adds
// shortcut_strength * onehot(y) fragments to the first shortcut_dims
// coordinates of z (coordinate j carries class j mod n_classes). Label noise
// is applied last, so c and z follow the clean label.
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace fcbm

#endif  // FCBM_SYNTHETIC_HPP_
