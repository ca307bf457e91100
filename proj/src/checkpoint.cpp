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

#include "fcbm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fcbm/errors.hpp"
#include "json.hpp"

namespace fcbm {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'F', 'C', 'B', 'M', 'C', 'K', 'P', 'T'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + b])) << (8 * b);
  }
  return v;
}

struct ArrayRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double>* data;
};

std::vector<ArrayRef> model_arrays(CbmModel& model) {
  std::vector<ArrayRef> arrays;
  const std::size_t k = model.bottleneck.concepts();
  arrays.push_back({"bottleneck.weight", {k, model.bottleneck.input_width()},
                    &model.bottleneck.weight.data()});
  arrays.push_back({"bottleneck.bias", {k}, &model.bottleneck.bias});
  if (auto* kan = std::get_if<KanHead>(&model.head)) {
    arrays.push_back({"kan.coeffs", {kan->inputs, kan->outputs, kan->grid.knots}, &kan->coeffs});
    arrays.push_back({"kan.scale", {kan->outputs}, &kan->scale});
  } else {
    auto& lin = std::get<LinearHead>(model.head);
    arrays.push_back({"linear.weight", {lin.outputs(), lin.inputs()}, &lin.weight.data()});
    arrays.push_back({"linear.bias", {lin.outputs()}, &lin.bias});
  }
  return arrays;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  return n;
}

}  // namespace

std::string serialize_checkpoint(const CbmModel& model_in) {
  model_in.validate();
  CbmModel model = model_in;
  json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["tool_version"] = kToolVersion;
  header["concept_names"] = model.concept_names;
  header["label_names"] = model.label_names;
  header["input_width"] = model.input_width;
  header["head_kind"] = to_string(head_kind(model.head));
  if (const auto* kan = std::get_if<KanHead>(&model.head)) {
    header["grid"] = {{"lo", kan->grid.lo}, {"hi", kan->grid.hi}, {"knots", kan->grid.knots}};
  }
  header["seed"] = model.seed;
  header["config_fingerprint"] = model.config_fingerprint;
  header["config"] = model.config_json.empty() ? json(nullptr) : json::parse(model.config_json);
  json table = json::array();
  std::size_t total = 0;
  auto arrays = model_arrays(model);
  for (const auto& a : arrays) {
    table.push_back({{"name", a.name}, {"shape", a.shape}});
    total += a.data->size();
  }
  header["arrays"] = table;
  header["payload_doubles"] = total;

  const std::string header_text = header.dump();
  std::string out(kMagic, sizeof(kMagic));
  put_u64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + total * 8);
  for (const auto& a : arrays) {
    for (double v : *a.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

CbmModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("checkpoint: corrupt file (bad magic or too short)");
  }
  const std::uint64_t header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) {
    throw CheckpointError("checkpoint: corrupt file (truncated header)");
  }
  json header;
  try {
    header = json::parse(bytes.substr(16, header_len));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupt header: ") + e.what());
  }

  CbmModel model;
  try {
    const auto version = header.at("format_version").get<std::uint32_t>();
    if (version != kCheckpointFormatVersion) {
      throw CheckpointError("checkpoint: format version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kCheckpointFormatVersion) + ")");
    }
    model.concept_names = header.at("concept_names").get<std::vector<std::string>>();
    model.label_names = header.at("label_names").get<std::vector<std::string>>();
    model.input_width = header.at("input_width").get<std::size_t>();
    model.seed = header.at("seed").get<std::uint64_t>();
    model.config_fingerprint = header.at("config_fingerprint").get<std::string>();
    if (!header.at("config").is_null()) model.config_json = header.at("config").dump();
    const std::size_t k = model.concept_names.size();
    const std::size_t classes = model.label_names.size();
    model.bottleneck = BottleneckLayer(k, model.input_width);
    const HeadKind kind = parse_head_kind(header.at("head_kind").get<std::string>());
    if (kind == HeadKind::kKan) {
      KanGrid grid;
      grid.lo = header.at("grid").at("lo").get<double>();
      grid.hi = header.at("grid").at("hi").get<double>();
      grid.knots = header.at("grid").at("knots").get<std::size_t>();
      grid.validate();
      model.head = KanHead(k, classes, grid);
    } else {
      model.head = LinearHead(k, classes);
    }
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ArgumentError& e) {
    throw CheckpointError(std::string("checkpoint: inconsistent header: ") + e.what());
  }

  auto arrays = model_arrays(model);
  const auto& table = header.at("arrays");
  if (!table.is_array() || table.size() != arrays.size()) {
    throw CheckpointError("checkpoint: array table does not match head kind");
  }
  std::size_t expected_doubles = 0;
  for (std::size_t a = 0; a < arrays.size(); ++a) {
    const auto name = table[a].value("name", std::string());
    const auto shape = table[a].value("shape", std::vector<std::size_t>());
    if (name != arrays[a].name || shape != arrays[a].shape) {
      throw CheckpointError("checkpoint: array '" + name + "' has unexpected name or shape");
    }
    expected_doubles += product(shape);
  }
  const std::size_t payload_offset = 16 + header_len;
  if (bytes.size() != payload_offset + expected_doubles * 8) {
    throw CheckpointError("checkpoint: corrupt file (payload is " +
                          std::to_string(bytes.size() - payload_offset) + " bytes, expected " +
                          std::to_string(expected_doubles * 8) + ")");
  }
  std::size_t offset = payload_offset;
  for (auto& a : arrays) {
    for (double& v : *a.data) {
      v = std::bit_cast<double>(get_u64(bytes, offset));
      offset += 8;
    }
  }
  try {
    model.validate();
  } catch (const ArgumentError& e) {
    throw CheckpointError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

void save_checkpoint(const CbmModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for '" + path.string() + "'");
}

CbmModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

std::uint64_t bottleneck_hash(const BottleneckLayer& layer) {
  return hash_doubles(layer.bias, hash_doubles(layer.weight.data()));
}

}  // namespace fcbm
