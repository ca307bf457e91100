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

#include "fcbm/serve.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fcbm/checkpoint.hpp"
#include "fcbm/errors.hpp"
#include "httplib.h"

namespace fcbm {

using nlohmann::json;

std::string report_text(const FaithfulnessReport& report) { return to_json(report).dump(2) + "\n"; }

ApiResponse api_error(int status, const std::string& message) {
  return {status, json{{"error", {{"code", status}, {"message", message}}}}.dump()};
}

namespace {

std::vector<double> row_vector(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return {row.begin(), row.end()};
}

}  // namespace

Service::Service(CbmModel model, Dataset dataset, Split split, const EvalConfig& eval)
    : model_(std::move(model)), split_(split) {
  model_.validate();
  check_compatibility(model_, dataset);
  if (!has_split(dataset, split))
    throw ArgumentError("dataset has no " + to_string(split) + " split to serve");

  for (const Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (!has_split(dataset, s)) continue;
    const SplitData data = extract_split(dataset, s);
    const ForwardResult fw = model_forward(data.z, model_);
    const auto pred = argmax_rows(fw.logits);
    for (std::size_t r = 0; r < data.size(); ++r) {
      rows_.push_back(Row{data.ids[r], s, data.y[r], row_vector(data.c, r),
                          row_vector(fw.concepts, r), row_vector(fw.logits, r), pred[r]});
    }
  }
  std::sort(rows_.begin(), rows_.end(), [](const Row& a, const Row& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < rows_.size(); ++i) by_id_[rows_[i].id] = i;

  json meta{{"concept_names", model_.concept_names},
            {"label_names", model_.label_names},
            {"k", model_.concepts()},
            {"n_classes", model_.classes()},
            {"head_kind", to_string(head_kind(model_.head))},
            {"config_fingerprint", model_.config_fingerprint},
            {"tool_version", kToolVersion},
            {"split", to_string(split)}};
  if (const auto* kan = std::get_if<KanHead>(&model_.head)) {
    meta["grid"] = {{"lo", kan->grid.lo}, {"hi", kan->grid.hi}, {"knots", kan->grid.knots}};
  } else {
    meta["grid"] = nullptr;
  }
  meta_body_ = meta.dump();
  metrics_body_ = report_text(evaluate(model_, dataset, split, eval));

  if (const auto* kan = std::get_if<KanHead>(&model_.head)) {
    for (std::size_t o = 0; o < kan->outputs; ++o) {
      json series = json::array();
      for (std::size_t i = 0; i < kan->inputs; ++i) {
        std::vector<double> x, y, knot_x, knot_y;
        for (const auto& [px, py] : response_curve(*kan, i, o, kCurvePoints)) {
          x.push_back(px);
          y.push_back(py);
        }
        for (std::size_t m = 0; m < kan->grid.knots; ++m) {
          knot_x.push_back(kan->grid.knot(m));
          knot_y.push_back(kan->scale[o] * kan->coeff(i, o, m));
        }
        series.push_back({{"label", model_.concept_names[i]},
                          {"concept_index", i},
                          {"x", x},
                          {"y", y},
                          {"knots_x", knot_x},
                          {"knots_y", knot_y}});
      }
      curve_bodies_.push_back(json{{"kind", "response_curves"},
                                   {"output", o},
                                   {"label", model_.label_names[o]},
                                   {"series", series}}
                                  .dump());
    }
  }
}

ApiResponse Service::meta() const { return {200, meta_body_}; }

ApiResponse Service::metrics() const { return {200, metrics_body_}; }

ApiResponse Service::samples(const std::string& split, std::size_t offset,
                             std::size_t limit) const {
  Split s;
  try {
    s = parse_split(split);
  } catch (const std::exception&) {
    return api_error(404, "unknown split '" + split + "'");
  }
  std::vector<const Row*> matching;
  for (const auto& row : rows_)
    if (row.split == s) matching.push_back(&row);
  if (matching.empty()) return api_error(404, "split '" + split + "' is not loaded");
  json items = json::array();
  for (std::size_t i = offset; i < matching.size() && i - offset < limit; ++i) {
    const Row& r = *matching[i];
    items.push_back({{"id", r.id},
                     {"y", r.y},
                     {"label", model_.label_names[static_cast<std::size_t>(r.y)]},
                     {"predicted", r.predicted},
                     {"predicted_label", model_.label_names[static_cast<std::size_t>(r.predicted)]},
                     {"correct", r.y == r.predicted}});
  }
  return {200, json{{"split", split},
                    {"offset", offset},
                    {"limit", limit},
                    {"total", matching.size()},
                    {"items", items}}
                   .dump()};
}

ApiResponse Service::sample(const std::string& id) const {
  const auto it = by_id_.find(id);
  if (it == by_id_.end()) return api_error(404, "unknown sample '" + id + "'");
  const Row& r = rows_[it->second];
  return {200, json{{"id", r.id},
                    {"split", to_string(r.split)},
                    {"c_hat", r.c_hat},
                    {"c", r.c},
                    {"logits", r.logits},
                    {"probabilities", softmax(r.logits)},
                    {"y", r.y},
                    {"predicted", r.predicted}}
                   .dump()};
}

json Service::prediction_json(std::span<const double> concepts) const {
  Matrix input(1, concepts.size());
  std::copy(concepts.begin(), concepts.end(), input.row(0).begin());
  const Matrix logits = head_forward(input, model_.head);
  const auto row = logits.row(0);
  const std::vector<double> l(row.begin(), row.end());
  json contributions = json::array();
  json out{{"logits", l}, {"probabilities", softmax(l)}, {"predicted", argmax_rows(logits)[0]}};
  if (const auto* kan = std::get_if<KanHead>(&model_.head)) {
    const Matrix parts = kan_contributions(concepts, *kan);
    for (std::size_t i = 0; i < parts.rows(); ++i) contributions.push_back(row_vector(parts, i));
    out["bias"] = std::vector<double>(model_.classes(), 0.0);
  } else {
    const auto& lin = std::get<LinearHead>(model_.head);
    for (std::size_t i = 0; i < lin.inputs(); ++i) {
      std::vector<double> per_class(lin.outputs());
      for (std::size_t o = 0; o < lin.outputs(); ++o) per_class[o] = lin.weight(o, i) * concepts[i];
      contributions.push_back(per_class);
    }
    out["bias"] = lin.bias;
  }
  out["contributions"] = contributions;
  return out;
}

ApiResponse Service::predict(const std::string& body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::exception&) {
    return api_error(400, "request body is not valid JSON");
  }
  if (!request.is_object() || !request.contains("concepts") || !request["concepts"].is_array())
    return api_error(400, "expected {\"concepts\": [" + std::to_string(model_.concepts()) +
                              " numbers]}");
  const auto& arr = request["concepts"];
  if (arr.size() != model_.concepts())
    return api_error(400, "expected " + std::to_string(model_.concepts()) + " concepts, got " +
                              std::to_string(arr.size()));
  std::vector<double> concepts;
  for (const auto& v : arr) {
    if (!v.is_number()) return api_error(400, "concept values must be finite numbers");
    const double x = v.get<double>();
    if (!std::isfinite(x)) return api_error(400, "concept values must be finite numbers");
    concepts.push_back(x);
  }
  return {200, prediction_json(concepts).dump()};
}

ApiResponse Service::response_curves(const std::string& output) const {
  if (curve_bodies_.empty())
    return api_error(400,
                     "response curves are defined for the kan head only; the linear head's "
                     "weights are in the checkpoint");
  std::size_t o = 0;
  try {
    std::size_t used = 0;
    const long value = std::stol(output, &used);
    if (used != output.size() || value < 0) throw std::invalid_argument(output);
    o = static_cast<std::size_t>(value);
  } catch (const std::exception&) {
    return api_error(400, "output must be a class index");
  }
  if (o >= curve_bodies_.size())
    return api_error(400, "output " + output + " out of range (" +
                              std::to_string(curve_bodies_.size()) + " classes)");
  return {200, curve_bodies_[o]};
}

namespace {

bool parse_count(const std::map<std::string, std::string>& query, const std::string& key,
                 std::size_t fallback, std::size_t& out) {
  const auto it = query.find(key);
  if (it == query.end() || it->second.empty()) {
    out = fallback;
    return true;
  }
  try {
    std::size_t used = 0;
    const long long v = std::stoll(it->second, &used);
    if (used != it->second.size() || v < 0) return false;
    out = static_cast<std::size_t>(v);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ApiResponse Service::handle(const std::string& method, const std::string& path,
                            const std::map<std::string, std::string>& query,
                            const std::string& body) const {
  const auto get = [&](const std::string& key, const std::string& fallback) {
    const auto it = query.find(key);
    return it == query.end() ? fallback : it->second;
  };
  if (method == "GET") {
    if (path == "/api/meta") return meta();
    if (path == "/api/metrics") return metrics();
    if (path == "/api/samples") {
      std::size_t offset = 0, limit = 0;
      if (!parse_count(query, "offset", 0, offset) || !parse_count(query, "limit", 50, limit))
        return api_error(400, "offset and limit must be non-negative integers");
      return samples(get("split", "test"), offset, limit);
    }
    if (path == "/api/response_curves") return response_curves(get("output", "0"));
    const std::string prefix = "/api/sample/";
    if (path.rfind(prefix, 0) == 0) return sample(path.substr(prefix.size()));
  } else if (method == "POST" && path == "/api/predict") {
    return predict(body);
  }
  return api_error(404, "no route for " + method + " " + path);
}

struct HttpServer::Impl {
  Impl(const Service& s, ServeOptions o) : service(s), options(std::move(o)) {}
  const Service& service;
  ServeOptions options;
  httplib::Server server;
};

HttpServer::HttpServer(const Service& service, ServeOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& server = impl_->server;
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  const auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [k, v] : req.params) query.emplace(k, v);
    const ApiResponse out = service.handle(req.method, req.path, query, req.body);
    res.status = out.status;
    res.set_content(out.body, "application/json");
  };
  server.Get(R"(/api/.*)", forward);
  server.Post(R"(/api/.*)", forward);
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  const std::string& dir = impl_->options.static_dir;
  if (!dir.empty() && !server.set_mount_point("/", dir))
    throw ArgumentError("static directory not found: " + dir);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind() {
  const auto& opts = impl_->options;
  if (opts.port == 0) return impl_->server.bind_to_any_port(opts.host);
  return impl_->server.bind_to_port(opts.host, opts.port) ? opts.port : -1;
}

bool HttpServer::listen() { return impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace fcbm
