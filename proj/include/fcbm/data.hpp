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

#ifndef FCBM_DATA_HPP_
#define FCBM_DATA_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcbm/numerics.hpp"

namespace fcbm {

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

class ConceptSet {
 public:
  ConceptSet() = default;
  // Throws ArgumentError on empty or duplicate names.
  explicit ConceptSet(std::vector<std::string> names);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& operator[](std::size_t i) const { return names_[i]; }

  friend bool operator==(const ConceptSet&, const ConceptSet&) = default;

 private:
  std::vector<std::string> names_;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split split);
Split parse_split(const std::string& name);

struct Sample {
  std::string id;
  std::vector<double> z;      // fused embedding [image || text], or text only
  std::vector<double> c;      // concept annotations used for training
  std::vector<double> c_raw;  // un-normalized annotation scores, may be empty
  int y = 0;
  Split split = Split::kTrain;

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Per-concept min-max transform fitted on the train split.
struct Normalization {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct Dataset {
  ConceptSet concepts;
  std::vector<std::string> label_names;
  std::size_t d = 0;           // per-modality embedding width
  std::size_t modalities = 2;  // 2 = image + text, 1 = text only
  std::vector<Sample> samples;
  std::optional<Normalization> normalization;
  std::vector<std::string> warnings;

  std::size_t input_width() const { return d * modalities; }
  std::size_t classes() const { return label_names.size(); }

  // Shape, range and split checks; throws DataError naming the record.
  void validate() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.concepts == b.concepts && a.label_names == b.label_names && a.d == b.d &&
           a.modalities == b.modalities && a.samples == b.samples &&
           a.normalization == b.normalization;
  }
};

// Dense view of one split, rows in dataset order.
struct SplitData {
  Matrix z;
  Matrix c;
  std::vector<int> y;
  std::vector<std::string> ids;

  std::size_t size() const { return y.size(); }
};

SplitData extract_split(const Dataset& dataset, Split split);
bool has_split(const Dataset& dataset, Split split);

// Assigns splits from a seeded shuffle: the first round(f_train N) shuffled
// samples go to train, the next round(f_val N) to val, the rest to test.
void assign_splits(Dataset& dataset, std::uint64_t seed, std::array<double, 2> train_val);

// score_j = cos(image, e_j) + cos(text, e_j). An empty `image` means the
// sample is text only and contributes a single cosine.
std::vector<double> annotate_concepts(std::span<const double> image, std::span<const double> text,
                                      std::span<const std::vector<double>> concept_embs);

struct ConceptEmbeddings {
  std::vector<std::string> names;
  std::vector<std::vector<double>> vectors;
};

ConceptEmbeddings load_concept_embeddings(const std::filesystem::path& path);

// Replaces concept names and annotations with cosine scores against
// `embeddings`. Raw scores land in both c and c_raw; normalization is cleared.
Dataset annotate_dataset(const Dataset& dataset, const ConceptEmbeddings& embeddings);

// Min-max per concept on the train split, applied to every split and clipped
// to [0, 1]. Constant train columns map to 0.5 and add a warning. Any
// existing normalization is composed with the new one.
Dataset normalize_concepts(const Dataset& dataset);

// Maps raw concept scores through a stored normalization.
std::vector<double> apply_normalization(std::span<const double> raw, const Normalization& norm);

struct SaveOptions {
  bool binary_embeddings = false;  // write z to a FCBM float32 file
  std::string provenance_json;     // optional object stored under "provenance"
};

// Writes the manifest at `manifest_path` and the samples (and optional
// embeddings) next to it.
void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const SaveOptions& options = {});
Dataset load_dataset(const std::filesystem::path& manifest_path);

// FCBM binary embedding file: magic "FCBM", u32 version, u32 n, u32 width,
// then n * width little-endian float32, row-major.
void write_embedding_file(const std::filesystem::path& path, const Matrix& rows);
Matrix read_embedding_file(const std::filesystem::path& path);

}  // namespace fcbm

#endif  // FCBM_DATA_HPP_
