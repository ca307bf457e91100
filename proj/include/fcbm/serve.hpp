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

#ifndef FCBM_SERVE_HPP_
#define FCBM_SERVE_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fcbm/data.hpp"
#include "fcbm/evaluation.hpp"
#include "fcbm/model.hpp"
#include "json.hpp"

namespace fcbm {

inline constexpr int kDefaultPort = 8787;
inline constexpr std::size_t kCurvePoints = 101;

// Pretty-printed report text shared by `eval` output and GET /api/metrics.
std::string report_text(const FaithfulnessReport& report);

struct ApiResponse {
  int status = 200;
  std::string body;  // JSON
};

// Read-only state behind the HTTP endpoints. Everything is computed in the
// constructor; request handlers only read.
class Service {
 public:
  Service(CbmModel model, Dataset dataset, Split split, const EvalConfig& eval);

  ApiResponse meta() const;
  ApiResponse samples(const std::string& split, std::size_t offset, std::size_t limit) const;
  ApiResponse sample(const std::string& id) const;
  ApiResponse predict(const std::string& body) const;
  ApiResponse response_curves(const std::string& output) const;
  ApiResponse metrics() const;

  // Dispatches GET/POST on /api/... paths; used by the server and by tests.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::map<std::string, std::string>& query,
                     const std::string& body) const;

  const CbmModel& model() const { return model_; }

 private:
  struct Row {
    std::string id;
    Split split;
    int y;
    std::vector<double> c;
    std::vector<double> c_hat;
    std::vector<double> logits;
    int predicted;
  };

  nlohmann::json prediction_json(std::span<const double> concepts) const;

  CbmModel model_;
  Split split_;
  std::vector<Row> rows_;  // sorted by id
  std::map<std::string, std::size_t> by_id_;
  std::string meta_body_;
  std::string metrics_body_;
  std::vector<std::string> curve_bodies_;  // per output, KAN only
};

ApiResponse api_error(int status, const std::string& message);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  std::string static_dir;  // optional UI bundle
};

// HTTP front end over a Service. Port 0 binds an ephemeral port.
class HttpServer {
 public:
  HttpServer(const Service& service, ServeOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Returns the bound port, or -1 on failure.
  int bind();
  // Blocks until stop() is called.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fcbm

#endif  // FCBM_SERVE_HPP_
