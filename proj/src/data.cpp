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

#include "fcbm/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "fcbm/errors.hpp"
#include "json.hpp"

namespace fcbm {
namespace {

using nlohmann::json;

constexpr char kEmbeddingMagic[4] = {'F', 'C', 'B', 'M'};
constexpr std::uint32_t kEmbeddingVersion = 1;

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (norm2(a) * norm2(b));
}

std::string record_context(const std::string& file, std::size_t line, const std::string& id) {
  std::string ctx = file + ":" + std::to_string(line);
  if (!id.empty()) ctx += ": record '" + id + "'";
  return ctx;
}

std::vector<double> finite_array(const json& value, const std::string& field,
                                 const std::string& context) {
  if (!value.is_array()) throw DataError(context + ": field '" + field + "' must be an array");
  std::vector<double> out;
  out.reserve(value.size());
  for (std::size_t i = 0; i < value.size(); ++i) {
    const auto& v = value[i];
    if (!v.is_number()) {
      throw DataError(context + ": field '" + field + "' has a non-numeric entry at index " +
                      std::to_string(i) + " (NaN/Inf are serialized as null)");
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      throw DataError(context + ": field '" + field + "' has a non-finite entry at index " +
                      std::to_string(i));
    }
    out.push_back(d);
  }
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ConceptSet::ConceptSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ArgumentError("ConceptSet: empty concept name");
    if (!seen.insert(n).second) throw ArgumentError("ConceptSet: duplicate concept '" + n + "'");
  }
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + name + "' (expected train, val or test)");
}

void Dataset::validate() const {
  if (modalities != 1 && modalities != 2) throw DataError("dataset: modalities must be 1 or 2");
  if (d == 0) throw DataError("dataset: d must be positive");
  if (label_names.empty()) throw DataError("dataset: no label names");
  if (normalization && (normalization->min.size() != concepts.size() ||
                        normalization->max.size() != concepts.size())) {
    throw DataError("dataset: normalization length does not match concept count");
  }
  std::set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw DataError("dataset: duplicate sample id '" + s.id + "'");
    if (s.z.size() != input_width()) {
      throw DataError("dataset: record '" + s.id + "' has embedding width " +
                      std::to_string(s.z.size()) + ", expected " + std::to_string(input_width()));
    }
    if (s.c.size() != concepts.size()) {
      throw DataError("dataset: record '" + s.id + "' has " + std::to_string(s.c.size()) +
                      " concept values, expected k=" + std::to_string(concepts.size()));
    }
    if (!s.c_raw.empty() && s.c_raw.size() != concepts.size()) {
      throw DataError("dataset: record '" + s.id + "' has mismatched c_raw length");
    }
    if (s.y < 0 || static_cast<std::size_t>(s.y) >= label_names.size()) {
      throw DataError("dataset: record '" + s.id + "' has unknown label " + std::to_string(s.y));
    }
    for (double v : s.z) {
      if (!std::isfinite(v)) throw DataError("dataset: record '" + s.id + "' has non-finite z");
    }
    for (double v : s.c) {
      if (!std::isfinite(v)) throw DataError("dataset: record '" + s.id + "' has non-finite c");
    }
  }
}

SplitData extract_split(const Dataset& dataset, Split split) {
  std::size_t n = 0;
  for (const auto& s : dataset.samples) n += s.split == split ? 1 : 0;
  SplitData out{Matrix(n, dataset.input_width()), Matrix(n, dataset.concepts.size()), {}, {}};
  out.y.reserve(n);
  out.ids.reserve(n);
  std::size_t r = 0;
  for (const auto& s : dataset.samples) {
    if (s.split != split) continue;
    std::copy(s.z.begin(), s.z.end(), out.z.row(r).begin());
    std::copy(s.c.begin(), s.c.end(), out.c.row(r).begin());
    out.y.push_back(s.y);
    out.ids.push_back(s.id);
    ++r;
  }
  return out;
}

bool has_split(const Dataset& dataset, Split split) {
  return std::any_of(dataset.samples.begin(), dataset.samples.end(),
                     [&](const Sample& s) { return s.split == split; });
}

void assign_splits(Dataset& dataset, std::uint64_t seed, std::array<double, 2> train_val) {
  const double f_train = train_val[0], f_val = train_val[1];
  if (f_train < 0.0 || f_val < 0.0 || f_train + f_val > 1.0) {
    throw ArgumentError("assign_splits: fractions must be non-negative and sum to <= 1");
  }
  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(f_train * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(f_val * static_cast<double>(n))));
  for (std::size_t p = 0; p < n; ++p) {
    auto& s = dataset.samples[order[p]];
    s.split = p < n_train ? Split::kTrain : (p < n_train + n_val ? Split::kVal : Split::kTest);
  }
}

std::vector<double> annotate_concepts(std::span<const double> image, std::span<const double> text,
                                      std::span<const std::vector<double>> concept_embs) {
  if (text.empty()) throw ArgumentError("annotate_concepts: text embedding is required");
  if (norm2(text) == 0.0) throw ArgumentError("annotate_concepts: zero-norm text embedding");
  if (!image.empty() && norm2(image) == 0.0) {
    throw ArgumentError("annotate_concepts: zero-norm image embedding");
  }
  std::vector<double> scores(concept_embs.size());
  for (std::size_t j = 0; j < concept_embs.size(); ++j) {
    const auto& e = concept_embs[j];
    if (e.size() != text.size() || (!image.empty() && e.size() != image.size())) {
      throw ArgumentError("annotate_concepts: concept embedding " + std::to_string(j) +
                          " has width " + std::to_string(e.size()) + ", expected " +
                          std::to_string(text.size()));
    }
    if (norm2(e) == 0.0) {
      throw ArgumentError("annotate_concepts: zero-norm concept embedding " + std::to_string(j));
    }
    double score = cosine(text, e);
    if (!image.empty()) score = cosine(image, e) + score;
    scores[j] = score;
  }
  return scores;
}

ConceptEmbeddings load_concept_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open concept embeddings '" + path.string() + "'");
  ConceptEmbeddings out;
  std::string line;
  std::size_t line_no = 0;
  const std::string file = path.filename().string();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string ctx = record_context(file, line_no, "");
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      throw DataError(ctx + ": malformed JSON record");
    }
    if (!rec.is_object() || !rec.contains("name") || !rec["name"].is_string() ||
        !rec.contains("e")) {
      throw DataError(ctx + ": expected {\"name\": str, \"e\": [floats]}");
    }
    out.names.push_back(rec["name"].get<std::string>());
    out.vectors.push_back(finite_array(rec["e"], "e", ctx));
    if (out.vectors.back().size() != out.vectors.front().size()) {
      throw DataError(ctx + ": concept embedding width differs from the first record");
    }
  }
  if (out.names.empty()) throw DataError(file + ": no concept embeddings");
  return out;
}

Dataset annotate_dataset(const Dataset& dataset, const ConceptEmbeddings& embeddings) {
  if (embeddings.vectors.empty() || embeddings.vectors.front().size() != dataset.d) {
    throw DataError("annotate: concept embeddings must have width d=" +
                    std::to_string(dataset.d));
  }
  Dataset out = dataset;
  out.concepts = ConceptSet(embeddings.names);
  out.normalization.reset();
  for (auto& s : out.samples) {
    std::span<const double> z(s.z);
    std::span<const double> image, text;
    if (out.modalities == 2) {
      image = z.subspan(0, out.d);
      text = z.subspan(out.d, out.d);
    } else {
      text = z;
    }
    try {
      s.c_raw = annotate_concepts(image, text, embeddings.vectors);
    } catch (const ArgumentError& e) {
      throw DataError("annotate: record '" + s.id + "': " + e.what());
    }
    s.c = s.c_raw;
  }
  return out;
}

Dataset normalize_concepts(const Dataset& dataset) {
  const std::size_t k = dataset.concepts.size();
  Normalization fit{std::vector<double>(k, std::numeric_limits<double>::infinity()),
                    std::vector<double>(k, -std::numeric_limits<double>::infinity())};
  bool any_train = false;
  for (const auto& s : dataset.samples) {
    if (s.split != Split::kTrain) continue;
    any_train = true;
    for (std::size_t j = 0; j < k; ++j) {
      fit.min[j] = std::min(fit.min[j], s.c[j]);
      fit.max[j] = std::max(fit.max[j], s.c[j]);
    }
  }
  if (!any_train) throw DataError("normalize_concepts: train split is empty");

  Dataset out = dataset;
  for (std::size_t j = 0; j < k; ++j) {
    if (!(fit.max[j] > fit.min[j])) {
      out.warnings.push_back("concept '" + dataset.concepts[j] +
                             "' is constant on the train split; mapped to 0.5");
    }
  }
  for (auto& s : out.samples) s.c = apply_normalization(s.c, fit);

  if (dataset.normalization) {
    // Express the combined transform in terms of the original raw scale.
    const auto& prev = *dataset.normalization;
    Normalization composed{std::vector<double>(k), std::vector<double>(k)};
    for (std::size_t j = 0; j < k; ++j) {
      const double span = prev.max[j] - prev.min[j];
      composed.min[j] = prev.min[j] + fit.min[j] * span;
      composed.max[j] = prev.min[j] + fit.max[j] * span;
    }
    out.normalization = composed;
  } else {
    out.normalization = fit;
  }
  return out;
}

std::vector<double> apply_normalization(std::span<const double> raw, const Normalization& norm) {
  if (raw.size() != norm.min.size()) {
    throw ArgumentError("apply_normalization: expected " + std::to_string(norm.min.size()) +
                        " values, got " + std::to_string(raw.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const double span = norm.max[j] - norm.min[j];
    out[j] = span > 0.0 ? std::clamp((raw[j] - norm.min[j]) / span, 0.0, 1.0) : 0.5;
  }
  return out;
}

void write_embedding_file(const std::filesystem::path& path, const Matrix& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out.write(kEmbeddingMagic, 4);
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(rows.rows()));
  put_u32(out, static_cast<std::uint32_t>(rows.cols()));
  for (double v : rows.data()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Matrix read_embedding_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const std::string file = path.filename().string();
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kEmbeddingMagic, 4) != 0) {
    throw DataError(file + ": not an FCBM embedding file");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t version = get_u32(p + 4);
  if (version != kEmbeddingVersion) {
    throw DataError(file + ": unsupported embedding format version " + std::to_string(version));
  }
  const std::uint32_t n = get_u32(p + 8);
  const std::uint32_t width = get_u32(p + 12);
  const std::size_t expected = 16 + static_cast<std::size_t>(n) * width * 4;
  if (bytes.size() != expected) {
    throw DataError(file + ": size " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected));
  }
  Matrix m(n, width);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32(p + 16 + 4 * i));
    if (!std::isfinite(f)) {
      throw DataError(file + ": non-finite value in row " + std::to_string(i / width));
    }
    m.data()[i] = f;
  }
  return m;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& manifest_path,
                  const SaveOptions& options) {
  dataset.validate();
  const auto dir = manifest_path.parent_path();
  const std::string stem = manifest_path.stem().string();
  const std::string samples_name = stem + ".samples.jsonl";
  const std::string embeddings_name = stem + ".embeddings.bin";

  json manifest;
  manifest["version"] = kDatasetFormatVersion;
  manifest["d"] = dataset.d;
  manifest["modalities"] = dataset.modalities;
  manifest["label_names"] = dataset.label_names;
  manifest["concept_names"] = dataset.concepts.names();
  if (dataset.normalization) {
    manifest["normalization"] = {{"method", "minmax_per_concept"},
                                 {"min", dataset.normalization->min},
                                 {"max", dataset.normalization->max}};
  } else {
    manifest["normalization"] = nullptr;
  }
  manifest["files"] = {{"samples", samples_name}};
  if (options.binary_embeddings) manifest["files"]["embeddings"] = embeddings_name;
  if (!options.provenance_json.empty())
    manifest["provenance"] = json::parse(options.provenance_json);

  std::ofstream samples(dir / samples_name, std::ios::trunc);
  if (!samples) throw DataError("cannot write '" + (dir / samples_name).string() + "'");
  Matrix emb(options.binary_embeddings ? dataset.samples.size() : 0, dataset.input_width());
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    json rec;
    rec["id"] = s.id;
    rec["split"] = to_string(s.split);
    rec["y"] = s.y;
    rec["c"] = s.c;
    if (!s.c_raw.empty()) rec["c_raw"] = s.c_raw;
    if (options.binary_embeddings) {
      rec["z_idx"] = i;
      std::copy(s.z.begin(), s.z.end(), emb.row(i).begin());
    } else {
      rec["z"] = s.z;
    }
    samples << rec.dump() << '\n';
  }
  if (!samples) throw DataError("write failed for '" + samples_name + "'");
  if (options.binary_embeddings) write_embedding_file(dir / embeddings_name, emb);

  std::ofstream out(manifest_path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + manifest_path.string() + "'");
  out << manifest.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& manifest_path) {
  const std::string mfile = manifest_path.filename().string();
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw DataError(mfile + ": malformed manifest: " + e.what());
  }
  Dataset ds;
  std::optional<Matrix> embeddings;
  std::string samples_name;
  bool need_split_assignment = false;
  try {
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kDatasetFormatVersion) {
      throw DataError(mfile + ": unsupported dataset version " + std::to_string(version));
    }
    ds.d = manifest.at("d").get<std::size_t>();
    ds.modalities = manifest.value("modalities", std::size_t{2});
    ds.label_names = manifest.at("label_names").get<std::vector<std::string>>();
    try {
      ds.concepts = ConceptSet(manifest.at("concept_names").get<std::vector<std::string>>());
    } catch (const ArgumentError& e) {
      throw DataError(mfile + ": " + e.what());
    }
    const auto& norm = manifest.at("normalization");
    if (!norm.is_null()) {
      ds.normalization = Normalization{finite_array(norm.at("min"), "normalization.min", mfile),
                                       finite_array(norm.at("max"), "normalization.max", mfile)};
    }
    const auto& files = manifest.at("files");
    samples_name = files.at("samples").get<std::string>();
    if (files.contains("embeddings") && !files["embeddings"].is_null()) {
      embeddings = read_embedding_file(manifest_path.parent_path() /
                                       files["embeddings"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw DataError(mfile + ": invalid manifest: " + e.what());
  }

  const auto samples_path = manifest_path.parent_path() / samples_name;
  std::ifstream in(samples_path);
  if (!in) throw DataError("cannot open samples file '" + samples_path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  const std::size_t k = ds.concepts.size();
  const std::size_t width = ds.input_width();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception&) {
      throw DataError(record_context(samples_name, line_no, "") + ": malformed JSON record");
    }
    Sample s;
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string()) {
      throw DataError(record_context(samples_name, line_no, "") + ": missing string field 'id'");
    }
    s.id = rec["id"].get<std::string>();
    const std::string ctx = record_context(samples_name, line_no, s.id);
    if (!rec.contains("y") || !rec["y"].is_number_integer()) {
      throw DataError(ctx + ": missing integer field 'y'");
    }
    s.y = rec["y"].get<int>();
    if (s.y < 0 || static_cast<std::size_t>(s.y) >= ds.label_names.size()) {
      throw DataError(ctx + ": unknown label " + std::to_string(s.y) + " (" +
                      std::to_string(ds.label_names.size()) + " labels)");
    }
    if (!rec.contains("c")) throw DataError(ctx + ": missing field 'c'");
    s.c = finite_array(rec["c"], "c", ctx);
    if (s.c.size() != k) {
      throw DataError(ctx + ": expected k=" + std::to_string(k) + " concept values, got " +
                      std::to_string(s.c.size()));
    }
    if (rec.contains("c_raw")) {
      s.c_raw = finite_array(rec["c_raw"], "c_raw", ctx);
      if (s.c_raw.size() != k) throw DataError(ctx + ": c_raw length differs from k");
    }
    if (rec.contains("z")) {
      s.z = finite_array(rec["z"], "z", ctx);
    } else if (rec.contains("z_idx")) {
      if (!embeddings) throw DataError(ctx + ": z_idx given but manifest has no embeddings file");
      const auto idx = rec["z_idx"].get<std::size_t>();
      if (idx >= embeddings->rows()) throw DataError(ctx + ": z_idx out of range");
      const auto row = embeddings->row(idx);
      s.z.assign(row.begin(), row.end());
    } else {
      throw DataError(ctx + ": record needs 'z' or 'z_idx'");
    }
    if (s.z.size() != width) {
      throw DataError(ctx + ": expected embedding width " + std::to_string(width) + ", got " +
                      std::to_string(s.z.size()));
    }
    if (rec.contains("split")) {
      try {
        s.split = parse_split(rec["split"].get<std::string>());
      } catch (const std::exception& e) {
        throw DataError(ctx + ": " + e.what());
      }
    } else {
      need_split_assignment = true;
    }
    ds.samples.push_back(std::move(s));
  }
  if (need_split_assignment) {
    const auto& splits = manifest.value("splits", json::object());
    const auto seed = splits.value("seed", std::uint64_t{42});
    const auto fractions = splits.value("fractions", std::vector<double>{0.7, 0.15, 0.15});
    if (fractions.size() < 2) throw DataError(mfile + ": splits.fractions needs >= 2 values");
    assign_splits(ds, seed, {fractions[0], fractions[1]});
  }
  ds.validate();
  return ds;
}

}  // namespace fcbm
