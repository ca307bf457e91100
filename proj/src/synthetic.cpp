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

#include "fcbm/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fcbm/errors.hpp"

namespace fcbm {
namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j, const char* field) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) {
    throw ArgumentError(std::string("synthetic spec: '") + field + "' must be a 2-D array");
  }
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) {
      throw ArgumentError(std::string("synthetic spec: '") + field + "' rows differ in length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  }
  return rows;
}

std::string sample_id(std::size_t i, std::size_t total) {
  const std::size_t width = std::max<std::size_t>(6, std::to_string(total).size());
  std::string digits = std::to_string(i);
  return "s" + std::string(width - digits.size(), '0') + digits;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_classes < 2) throw ArgumentError("synthetic spec: need at least 2 classes");
  if (k == 0 || d == 0) throw ArgumentError("synthetic spec: k and d must be positive");
  if (modalities != 1 && modalities != 2) {
    throw ArgumentError("synthetic spec: modalities must be 1 or 2");
  }
  if (sigma_c < 0.0 || sigma_z < 0.0) throw ArgumentError("synthetic spec: sigmas must be >= 0");
  if (k > input_width() || shortcut_dims > input_width() - k) {
    throw ArgumentError("synthetic spec: shortcut_dims must be <= input_width - k");
  }
  if (n_train == 0) throw ArgumentError("synthetic spec: n_train must be positive");
  if (!(saturation_tau > 0.0)) throw ArgumentError("synthetic spec: saturation_tau must be > 0");
  if (!(label_noise >= 0.0 && label_noise <= 1.0))
    throw ArgumentError("synthetic spec: label_noise must be in [0, 1]");
  if (concept_means) {
    if (concept_means->rows() != n_classes || concept_means->cols() != k) {
      throw ArgumentError("synthetic spec: concept_means must be n_classes x k");
    }
    for (double v : concept_means->data()) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ArgumentError("synthetic spec: concept_means entries must lie in [0, 1]");
      }
    }
  }
  if (embedding_map && (embedding_map->rows() != input_width() || embedding_map->cols() != k)) {
    throw ArgumentError("synthetic spec: embedding_map must be input_width x k");
  }
}

SyntheticSpec default_synthetic_spec() { return SyntheticSpec{}; }

SyntheticSpec noiseless_synthetic_spec() {
  SyntheticSpec spec;
  spec.sigma_c = 0.0;
  spec.sigma_z = 0.0;
  spec.label_noise = 0.0;
  spec.shortcut_dims = 0;
  spec.shortcut_strength = 0.0;
  return spec;
}

SyntheticSpec nonlinear_synthetic_spec() {
  SyntheticSpec spec;
  spec.label_rule = LabelRule::kSaturating;
  spec.shortcut_dims = 0;
  spec.shortcut_strength = 0.0;
  return spec;
}

SyntheticSpec synthetic_spec_from_json(const json& j) {
  SyntheticSpec spec;
  const std::string preset = j.value("preset", std::string("default"));
  if (preset == "default") {
    spec = default_synthetic_spec();
  } else if (preset == "noiseless") {
    spec = noiseless_synthetic_spec();
  } else if (preset == "nonlinear") {
    spec = nonlinear_synthetic_spec();
  } else {
    throw ArgumentError("synthetic spec: unknown preset '" + preset + "'");
  }
  static const std::vector<std::string> known = {
      "preset",   "n_classes",     "k",           "d",           "modalities",
      "n_train",  "n_val",         "n_test",      "concept_means", "sigma_c",
      "embedding_map", "sigma_z",  "shortcut_dims", "shortcut_strength", "label_rule",
      "saturation_tau", "label_noise", "seed"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ArgumentError("synthetic spec: unknown field '" + key + "'");
    }
  }
  try {
    spec.n_classes = j.value("n_classes", spec.n_classes);
    spec.k = j.value("k", spec.k);
    spec.d = j.value("d", spec.d);
    spec.modalities = j.value("modalities", spec.modalities);
    spec.n_train = j.value("n_train", spec.n_train);
    spec.n_val = j.value("n_val", spec.n_val);
    spec.n_test = j.value("n_test", spec.n_test);
    spec.sigma_c = j.value("sigma_c", spec.sigma_c);
    spec.sigma_z = j.value("sigma_z", spec.sigma_z);
    spec.shortcut_dims = j.value("shortcut_dims", spec.shortcut_dims);
    spec.shortcut_strength = j.value("shortcut_strength", spec.shortcut_strength);
    spec.saturation_tau = j.value("saturation_tau", spec.saturation_tau);
    spec.label_noise = j.value("label_noise", spec.label_noise);
    spec.seed = j.value("seed", spec.seed);
    if (j.contains("label_rule")) {
      const auto rule = j["label_rule"].get<std::string>();
      if (rule == "class_means") {
        spec.label_rule = LabelRule::kClassMeans;
      } else if (rule == "saturating") {
        spec.label_rule = LabelRule::kSaturating;
      } else {
        throw ArgumentError("synthetic spec: unknown label_rule '" + rule + "'");
      }
    }
    if (j.contains("concept_means") && !j["concept_means"].is_null()) {
      spec.concept_means = matrix_from_json(j["concept_means"], "concept_means");
    }
    if (j.contains("embedding_map") && !j["embedding_map"].is_null()) {
      spec.embedding_map = matrix_from_json(j["embedding_map"], "embedding_map");
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json synthetic_spec_to_json(const SyntheticSpec& spec) {
  json j;
  j["n_classes"] = spec.n_classes;
  j["k"] = spec.k;
  j["d"] = spec.d;
  j["modalities"] = spec.modalities;
  j["n_train"] = spec.n_train;
  j["n_val"] = spec.n_val;
  j["n_test"] = spec.n_test;
  j["concept_means"] = spec.concept_means ? matrix_to_json(*spec.concept_means) : json(nullptr);
  j["sigma_c"] = spec.sigma_c;
  j["embedding_map"] = spec.embedding_map ? matrix_to_json(*spec.embedding_map) : json(nullptr);
  j["sigma_z"] = spec.sigma_z;
  j["shortcut_dims"] = spec.shortcut_dims;
  j["shortcut_strength"] = spec.shortcut_strength;
  j["label_rule"] = spec.label_rule == LabelRule::kClassMeans ? "class_means" : "saturating";
  j["saturation_tau"] = spec.saturation_tau;
  j["label_noise"] = spec.label_noise;
  j["seed"] = spec.seed;
  return j;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t k = spec.k, classes = spec.n_classes, width = spec.input_width();

  Matrix means(classes, k);
  for (double& v : means.data()) v = rng.uniform(0.25, 0.75);
  if (spec.concept_means) means = *spec.concept_means;

  Matrix map(width, k);
  const double map_sd = 1.0 / std::sqrt(static_cast<double>(k));
  for (double& v : map.data()) v = rng.normal(0.0, map_sd);
  if (spec.embedding_map) map = *spec.embedding_map;

  Dataset ds;
  std::vector<std::string> concept_names(k), label_names(classes);
  for (std::size_t j = 0; j < k; ++j) concept_names[j] = "concept_" + std::to_string(j);
  for (std::size_t o = 0; o < classes; ++o) label_names[o] = "class_" + std::to_string(o);
  ds.concepts = ConceptSet(std::move(concept_names));
  ds.label_names = std::move(label_names);
  ds.d = spec.d;
  ds.modalities = spec.modalities;

  const std::size_t total = spec.n_train + spec.n_val + spec.n_test;
  ds.samples.reserve(total);
  for (std::size_t n = 0; n < total; ++n) {
    Sample s;
    s.id = sample_id(n, total);
    s.split = n < spec.n_train ? Split::kTrain
                               : (n < spec.n_train + spec.n_val ? Split::kVal : Split::kTest);
    s.c.resize(k);
    if (spec.label_rule == LabelRule::kClassMeans) {
      s.y = static_cast<int>(rng.index(classes));
      for (std::size_t j = 0; j < k; ++j) {
        s.c[j] = std::clamp(means(static_cast<std::size_t>(s.y), j) + spec.sigma_c * rng.normal(),
                            0.0, 1.0);
      }
    } else {
      for (std::size_t j = 0; j < k; ++j) {
        s.c[j] = std::clamp(rng.uniform() + spec.sigma_c * rng.normal(), 0.0, 1.0);
      }
      std::vector<double> score(classes, 0.0);
      for (std::size_t j = 0; j < k; ++j) {
        score[j % classes] += 1.0 - std::exp(-s.c[j] / spec.saturation_tau);
      }
      s.y = static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
    }
    s.z.assign(width, 0.0);
    for (std::size_t r = 0; r < width; ++r) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += map(r, j) * s.c[j];
      s.z[r] = acc + spec.sigma_z * rng.normal();
    }
    for (std::size_t r = 0; r < spec.shortcut_dims; ++r) {
      if (r % classes == static_cast<std::size_t>(s.y)) s.z[r] += spec.shortcut_strength;
    }
    if (spec.label_noise > 0.0 && rng.uniform() < spec.label_noise)
      s.y = static_cast<int>(rng.index(classes));
    ds.samples.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

}  // namespace fcbm
