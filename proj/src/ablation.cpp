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

#include "fcbm/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "fcbm/checkpoint.hpp"
#include "fcbm/errors.hpp"

namespace fcbm {

namespace {

std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("FCBM_THREADS")) n = std::strtoul(env, nullptr, 10);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return std::clamp<std::size_t>(n, 1, jobs);
}

}  // namespace

std::vector<AblationCell> ablation_matrix(const Dataset& dataset, const TrainConfig& base,
                                          const AblationOptions& options) {
  if (options.repeats == 0) throw ArgumentError("ablation needs at least one repeat");
  base.validate(dataset.classes());
  TrainConfig with_leak = base;
  with_leak.use_leakage_loss = true;
  with_leak.validate(dataset.classes());
  if (!has_split(dataset, Split::kTest)) throw ArgumentError("dataset has no test split");

  std::vector<AblationCell> cells;
  for (const HeadKind head : {HeadKind::kLinear, HeadKind::kKan}) {
    for (const bool leak : {false, true}) {
      for (std::size_t r = 0; r < options.repeats; ++r) {
        AblationCell cell;
        cell.head = head;
        cell.use_leakage_loss = leak;
        cell.repeat = r;
        cell.config = base;
        cell.config.head = head;
        cell.config.use_leakage_loss = leak;
        cell.config.seed = base.seed + r;
        cells.push_back(std::move(cell));
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        cells[i].result = train(dataset, cells[i].config);
        cells[i].report = evaluate(cells[i].result.model, dataset, Split::kTest, options.eval);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(options.threads, cells.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return cells;
}

std::string cell_label(const AblationCell& cell) {
  return to_string(cell.head) + (cell.use_leakage_loss ? "+leak" : "-leak") + "#" +
         std::to_string(cell.repeat);
}

nlohmann::json ablation_report(const std::vector<AblationCell>& cells) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : cells) {
    rows.push_back({{"label", cell_label(c)},
                    {"head", to_string(c.head)},
                    {"use_leakage_loss", c.use_leakage_loss},
                    {"repeat", c.repeat},
                    {"seed", c.config.seed},
                    {"config_fingerprint", c.report.config_fingerprint},
                    {"config", to_json(c.config)},
                    {"report", to_json(c.report)}});
  }
  return {{"report_version", kReportVersion}, {"tool_version", kToolVersion}, {"rows", rows}};
}

}  // namespace fcbm
