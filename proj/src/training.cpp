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

#include "fcbm/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <utility>

#include "fcbm/checkpoint.hpp"
#include "fcbm/errors.hpp"

namespace fcbm {

using nlohmann::json;

namespace {

constexpr double kMeanFloor = 1e-12;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::kJoint:
      return "joint";
    case Regime::kIndependent:
      return "independent";
    case Regime::kSequential:
      return "sequential";
  }
  return "joint";
}

Regime parse_regime(const std::string& name) {
  if (name == "joint") return Regime::kJoint;
  if (name == "independent") return Regime::kIndependent;
  if (name == "sequential") return Regime::kSequential;
  throw ArgumentError("unknown regime '" + name + "' (joint, independent, sequential)");
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::kJoint:
      return "joint";
    case Phase::kConcepts:
      return "concepts";
    case Phase::kHeadOnTrue:
      return "head_on_true";
    case Phase::kHeadOnPredicted:
      return "head_on_predicted";
  }
  return "joint";
}

void TrainConfig::validate(std::size_t n_classes) const {
  if (!(lambda_concept >= 0.0) || !std::isfinite(lambda_concept))
    throw ArgumentError("lambda must be finite and >= 0");
  if (!(lambda_leak >= 0.0) || !std::isfinite(lambda_leak))
    throw ArgumentError("lambda_leak must be finite and >= 0");
  if (epochs == 0) throw ArgumentError("epochs must be >= 1");
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  if (lr_init != 1e-1 && lr_init != 1e-2) throw ArgumentError("lr_init must be 0.1 or 0.01");
  if (!(running_mean_decay >= 0.0 && running_mean_decay < 1.0))
    throw ArgumentError("running_mean_decay must be in [0, 1)");
  kde.validate();
  grid.validate();
  if (use_leakage_loss && n_classes > 0 && batch_size < 2 * n_classes)
    throw ArgumentError("batch_size " + std::to_string(batch_size) +
                        " must be >= 2 x n_classes (" + std::to_string(2 * n_classes) +
                        ") with the leakage loss");
}

json to_json(const TrainConfig& c) {
  return json{
      {"regime", to_string(c.regime)},
      {"head", to_string(c.head)},
      {"use_leakage_loss", c.use_leakage_loss},
      {"lambda", c.lambda_concept},
      {"lambda_leak", c.lambda_leak},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"lr_init", c.lr_init},
      {"running_mean_decay", c.running_mean_decay},
      {"patience", c.patience},
      {"seed", c.seed},
      {"kde",
       {{"bandwidth", c.kde.bandwidth_rule == BandwidthRule::kScott ? "scott" : "fixed"},
        {"fixed_sigma", c.kde.fixed_sigma},
        {"sigma_floor", c.kde.sigma_floor},
        {"min_class_count", c.kde.min_class_count}}},
      {"grid", {{"lo", c.grid.lo}, {"hi", c.grid.hi}, {"knots", c.grid.knots}}},
  };
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ArgumentError("train config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "regime") {
        c.regime = parse_regime(value.get<std::string>());
      } else if (key == "head") {
        c.head = parse_head_kind(value.get<std::string>());
      } else if (key == "use_leakage_loss") {
        c.use_leakage_loss = value.get<bool>();
      } else if (key == "lambda") {
        c.lambda_concept = value.get<double>();
      } else if (key == "lambda_leak") {
        c.lambda_leak = value.get<double>();
      } else if (key == "epochs") {
        c.epochs = value.get<std::size_t>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "lr_init") {
        c.lr_init = value.get<double>();
      } else if (key == "running_mean_decay") {
        c.running_mean_decay = value.get<double>();
      } else if (key == "patience") {
        c.patience = value.get<std::size_t>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "kde") {
        for (const auto& [k, v] : value.items()) {
          if (k == "bandwidth") {
            const auto rule = v.get<std::string>();
            if (rule == "scott") {
              c.kde.bandwidth_rule = BandwidthRule::kScott;
            } else if (rule == "fixed") {
              c.kde.bandwidth_rule = BandwidthRule::kFixed;
            } else {
              throw ArgumentError("kde.bandwidth must be 'scott' or 'fixed'");
            }
          } else if (k == "fixed_sigma") {
            c.kde.fixed_sigma = v.get<double>();
          } else if (k == "sigma_floor") {
            c.kde.sigma_floor = v.get<double>();
          } else if (k == "min_class_count") {
            c.kde.min_class_count = v.get<std::size_t>();
          } else {
            throw ArgumentError("unknown key kde." + k);
          }
        }
      } else if (key == "grid") {
        for (const auto& [k, v] : value.items()) {
          if (k == "lo") {
            c.grid.lo = v.get<double>();
          } else if (k == "hi") {
            c.grid.hi = v.get<double>();
          } else if (k == "knots") {
            c.grid.knots = v.get<std::size_t>();
          } else {
            throw ArgumentError("unknown key grid." + k);
          }
        }
      } else {
        throw ArgumentError("unknown train config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("bad train config: ") + e.what());
  }
  return c;
}

std::string config_fingerprint(const TrainConfig& config) {
  const auto text = to_json(config).dump();
  return hex64(fnv1a(text.data(), text.size()));
}

void RunningMeans::observe(Ema& ema, double value, double decay) {
  if (!ema.initialized) {
    ema.value = value;
    ema.initialized = true;
  } else {
    ema.value = decay * ema.value + (1.0 - decay) * value;
  }
}

json to_json(const StepRecord& r) {
  return json{{"type", "step"},
              {"step", r.step},
              {"phase", to_string(r.phase)},
              {"input_source", r.input_source},
              {"loss_cls", opt_json(r.loss_cls)},
              {"loss_concept", opt_json(r.loss_concept)},
              {"loss_leak", opt_json(r.loss_leak)},
              {"leak_skipped", r.leak_skipped},
              {"lambda_concept_tilde", opt_json(r.lambda_concept_tilde)},
              {"lambda_leak_tilde", opt_json(r.lambda_leak_tilde)},
              {"mean_cls_before", opt_json(r.mean_cls_before)},
              {"mean_concept_before", opt_json(r.mean_concept_before)},
              {"mean_leak_before", opt_json(r.mean_leak_before)},
              {"alpha", r.alpha},
              {"lr", r.lr},
              {"total", r.total},
              {"bottleneck_hash", r.bottleneck_hash}};
}

json to_json(const EpochRecord& r) {
  return json{{"type", "epoch"},
              {"phase", to_string(r.phase)},
              {"epoch", r.epoch},
              {"train_loss_cls", r.train_loss_cls},
              {"val_accuracy", r.val_accuracy},
              {"val_concept_mse", r.val_concept_mse},
              {"val_mean_ctl", opt_json(r.val_mean_ctl)},
              {"leak_skipped_batches", r.leak_skipped_batches},
              {"selected", r.selected}};
}

void write_train_log(const TrainLog& log, const std::filesystem::path& path,
                     const std::string& config_fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& s : log.steps) out << to_json(s).dump() << '\n';
  for (const auto& e : log.epochs) out << to_json(e).dump() << '\n';
  out << json{{"type", "summary"},
              {"leak_skipped_batches", log.leak_skipped_batches},
              {"tool_version", kToolVersion},
              {"config_fingerprint", config_fingerprint}}
             .dump()
      << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

namespace {

struct ClsTerm {
  double loss = 0.0;
  Matrix grad;  // d loss / d logits
};

ClsTerm cross_entropy(const Matrix& logits, std::span<const int> y) {
  const std::size_t n = logits.rows();
  ClsTerm out{0.0, Matrix(n, logits.cols())};
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = logits.row(r);
    const auto p = softmax(row);
    const auto label = static_cast<std::size_t>(y[r]);
    out.loss -= std::log(std::max(p[label], std::numeric_limits<double>::min()));
    for (std::size_t o = 0; o < p.size(); ++o)
      out.grad(r, o) = (p[o] - (o == label ? 1.0 : 0.0)) / static_cast<double>(n);
  }
  out.loss /= static_cast<double>(n);
  return out;
}

struct MseTerm {
  double loss = 0.0;
  Matrix grad;
};

MseTerm concept_mse(const Matrix& c_hat, const Matrix& c) {
  MseTerm out{0.0, Matrix(c_hat.rows(), c_hat.cols())};
  const double n = static_cast<double>(c_hat.size());
  for (std::size_t i = 0; i < c_hat.size(); ++i) {
    const double diff = c_hat.data()[i] - c.data()[i];
    out.loss += diff * diff;
    out.grad.data()[i] = 2.0 * diff / n;
  }
  out.loss /= n;
  return out;
}

double anneal_alpha(std::size_t step, std::size_t total_steps) {
  if (total_steps <= 1) return 1.0;
  return cosine_anneal(std::min(step, total_steps - 1), total_steps - 1, 0.0, 1.0);
}

double tilde(double lambda, double mean_cls, double mean_x) {
  return lambda * mean_cls / std::max(mean_x, kMeanFloor);
}

}  // namespace

TotalLossResult total_loss(const Batch& batch, const CbmModel& model, const TrainConfig& config,
                           const RunningMeans& means, std::size_t step,
                           std::size_t total_steps) {
  if (batch.y.empty()) throw ArgumentError("empty batch");
  if (batch.z.cols() != model.input_width || batch.c.cols() != model.concepts() ||
      batch.z.rows() != batch.y.size() || batch.c.rows() != batch.y.size())
    throw ArgumentError("batch shape does not match the model");

  const Matrix c_hat = bottleneck_forward(batch.z, model.bottleneck);
  const Matrix logits = head_forward(c_hat, model.head);
  const ClsTerm cls = cross_entropy(logits, batch.y);
  const MseTerm mse = concept_mse(c_hat, batch.c);
  std::optional<LeakageLoss> leak;
  if (config.use_leakage_loss) leak = leakage_loss_batch(c_hat, batch.c, batch.y, config.kde);
  const bool leak_active = leak && !leak->skipped;

  // Pre-step means; a term seen for the first time uses its current value.
  const double m_cls = means.cls.initialized ? means.cls.value : cls.loss;
  const double m_c = means.concepts.initialized ? means.concepts.value : mse.loss;
  const double m_leak = means.leak.initialized ? means.leak.value : (leak_active ? leak->loss : 0.0);

  const double lam_c = tilde(config.lambda_concept, m_cls, m_c);
  const double alpha = anneal_alpha(step, total_steps);
  const double lam_leak = leak_active ? tilde(config.lambda_leak, m_cls, m_leak) : 0.0;

  TotalLossResult out;
  out.loss = cls.loss + lam_c * mse.loss + (leak_active ? lam_leak * alpha * leak->loss : 0.0);

  const HeadGrads hg = head_backward(c_hat, model.head, cls.grad);
  Matrix d_c_hat = hg.input;
  for (std::size_t i = 0; i < d_c_hat.size(); ++i) {
    d_c_hat.data()[i] += lam_c * mse.grad.data()[i];
    if (leak_active) d_c_hat.data()[i] += lam_leak * alpha * leak->grad.data()[i];
  }
  const BottleneckGrads bg = bottleneck_backward(batch.z, model.bottleneck, d_c_hat);
  out.grads.bottleneck_weight = bg.weight.data();
  out.grads.bottleneck_bias = bg.bias;
  out.grads.head = hg.params;

  auto& rec = out.record;
  rec.step = step;
  rec.phase = Phase::kJoint;
  rec.input_source = "predicted";
  rec.loss_cls = cls.loss;
  rec.loss_concept = mse.loss;
  if (leak) rec.loss_leak = leak_active ? std::optional<double>(leak->loss) : std::nullopt;
  rec.leak_skipped = leak && leak->skipped;
  rec.lambda_concept_tilde = lam_c;
  rec.mean_cls_before = m_cls;
  rec.mean_concept_before = m_c;
  if (leak_active) {
    rec.lambda_leak_tilde = lam_leak;
    rec.mean_leak_before = m_leak;
  }
  rec.alpha = alpha;
  rec.total = out.loss;

  out.means = means;
  out.means.decay = config.running_mean_decay;
  RunningMeans::observe(out.means.cls, cls.loss, config.running_mean_decay);
  RunningMeans::observe(out.means.concepts, mse.loss, config.running_mean_decay);
  if (leak_active) RunningMeans::observe(out.means.leak, leak->loss, config.running_mean_decay);
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const int> y,
                                                   std::size_t batch_size, bool stratified,
                                                   Rng& rng) {
  const std::size_t n = y.size();
  if (n == 0) return {};
  if (batch_size == 0) throw ArgumentError("batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  if (stratified) {
    // Place the j-th member of each class at fractional position
    // (j + 0.5) / n_class, then sort: classes interleave evenly.
    std::vector<std::size_t> seen(static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1, 0);
    std::vector<std::size_t> count(seen.size(), 0);
    for (const int label : y) ++count[static_cast<std::size_t>(label)];
    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(n);
    for (const std::size_t idx : order) {
      const auto label = static_cast<std::size_t>(y[idx]);
      const double key = (static_cast<double>(seen[label]++) + 0.5) / static_cast<double>(count[label]);
      keyed.emplace_back(key, idx);
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < n; ++i) order[i] = keyed[i].second;
  }
  const std::size_t n_batches = std::max<std::size_t>(1, n / batch_size);
  std::vector<std::vector<std::size_t>> batches(n_batches);
  const std::size_t base = n / n_batches;
  const std::size_t extra = n % n_batches;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < n_batches; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    batches[b].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  if (stratified) {
    // Stratified chunks are contiguous in key order; shuffle batch order only.
    rng.shuffle(batches);
  }
  return batches;
}

namespace {

struct Snapshot {
  BottleneckLayer bottleneck;
  Head head;
};

double accuracy_percent(const Matrix& logits, std::span<const int> y) {
  if (y.empty()) return 0.0;
  const auto pred = argmax_rows(logits);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(y.size());
}

class Trainer {
 public:
  Trainer(CbmModel& model, const SplitData& train, const SplitData& val,
          const TrainConfig& config, Rng& rng, TrainLog& log)
      : model_(model), train_(train), val_(val), config_(config), rng_(rng), log_(log) {}

  void run(Phase phase) {
    const bool uses_leak = config_.use_leakage_loss &&
                           (phase == Phase::kJoint || phase == Phase::kConcepts);
    const bool train_bottleneck = phase == Phase::kJoint || phase == Phase::kConcepts;
    const bool train_head = phase != Phase::kConcepts;

    Matrix head_input_train;
    if (phase == Phase::kHeadOnTrue) head_input_train = train_.c;
    if (phase == Phase::kHeadOnPredicted)
      head_input_train = bottleneck_forward(train_.z, model_.bottleneck);

    const std::size_t steps_per_epoch =
        std::max<std::size_t>(1, train_.size() / config_.batch_size);
    const std::size_t total_steps = steps_per_epoch * config_.epochs;

    AdamState adam_w(model_.bottleneck.weight.size());
    AdamState adam_b(model_.bottleneck.bias.size());
    std::vector<AdamState> adam_head;
    for (const auto& p : head_parameters(model_.head)) adam_head.emplace_back(p.size());

    RunningMeans means;
    means.decay = config_.running_mean_decay;
    std::size_t phase_step = 0;
    Snapshot best{model_.bottleneck, model_.head};
    double best_acc = -1.0;
    double best_mse = std::numeric_limits<double>::infinity();
    std::size_t best_epoch_index = 0;
    std::size_t since_best = 0;
    const std::string frozen_hash = hex64(bottleneck_hash(model_.bottleneck));

    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      const auto batches = make_batches(train_.y, config_.batch_size, uses_leak, rng_);
      EpochRecord er;
      er.phase = phase;
      er.epoch = epoch;
      double cls_sum = 0.0;
      for (const auto& idx : batches) {
        Batch batch{gather_rows(train_.z, idx), gather_rows(train_.c, idx), {}};
        batch.y.reserve(idx.size());
        for (const auto i : idx) batch.y.push_back(train_.y[i]);
        const double lr = cosine_anneal(phase_step, total_steps, config_.lr_init, 0.0);

        StepRecord rec;
        ModelGrads grads;
        if (phase == Phase::kJoint) {
          auto result = total_loss(batch, model_, config_, means, phase_step, total_steps);
          rec = std::move(result.record);
          grads = std::move(result.grads);
          means = result.means;
        } else if (phase == Phase::kConcepts) {
          rec = concept_step(batch, means, phase_step, total_steps, grads);
        } else {
          rec = head_step(gather_rows(head_input_train, idx), batch.y, grads);
        }
        rec.phase = phase;
        rec.input_source = phase == Phase::kHeadOnTrue ? "true" : "predicted";
        rec.step = global_step_++;
        rec.lr = lr;
        if (rec.leak_skipped) {
          ++er.leak_skipped_batches;
          ++log_.leak_skipped_batches;
        }
        if (rec.loss_cls) cls_sum += *rec.loss_cls;

        if (train_bottleneck) {
          adam_update(model_.bottleneck.weight.data(), grads.bottleneck_weight, adam_w, lr);
          adam_update(model_.bottleneck.bias, grads.bottleneck_bias, adam_b, lr);
        }
        if (train_head) {
          auto params = head_parameters(model_.head);
          for (std::size_t p = 0; p < params.size(); ++p)
            adam_update(params[p], grads.head[p], adam_head[p], lr);
        }
        rec.bottleneck_hash =
            train_bottleneck ? hex64(bottleneck_hash(model_.bottleneck)) : frozen_hash;
        log_.steps.push_back(std::move(rec));
        ++phase_step;
      }
      er.train_loss_cls = cls_sum / static_cast<double>(batches.size());

      const Matrix c_hat_val = bottleneck_forward(val_.z, model_.bottleneck);
      er.val_concept_mse = concept_mse(c_hat_val, val_.c).loss;
      er.val_accuracy = accuracy_percent(head_forward(c_hat_val, model_.head), val_.y);
      er.val_mean_ctl = mean_task_leakage(c_hat_val);
      // Validation accuracy first, concept error second; phase 1 has no head
      // worth scoring.
      const double acc = phase == Phase::kConcepts ? 0.0 : er.val_accuracy;
      const bool improved = acc > best_acc || (acc == best_acc && er.val_concept_mse < best_mse);
      if (improved) {
        best_acc = acc;
        best_mse = er.val_concept_mse;
        best = Snapshot{model_.bottleneck, model_.head};
        best_epoch_index = log_.epochs.size();
        since_best = 0;
      } else {
        ++since_best;
      }
      log_.epochs.push_back(er);
      if (!uses_leak && config_.patience > 0 && since_best >= config_.patience) break;
    }
    log_.epochs[best_epoch_index].selected = true;
    if (train_bottleneck) model_.bottleneck = best.bottleneck;
    if (train_head) model_.head = best.head;
  }

 private:
  std::optional<double> mean_task_leakage(const Matrix& c_hat) const {
    if (!leakage_batch_infeasibility(val_.y, config_.kde).empty()) return std::nullopt;
    double sum = 0.0;
    for (std::size_t i = 0; i < c_hat.cols(); ++i)
      sum += task_leakage(c_hat.column(i), val_.c.column(i), val_.y, config_.kde);
    return sum / static_cast<double>(c_hat.cols());
  }

  StepRecord concept_step(const Batch& batch, RunningMeans& means, std::size_t step,
                          std::size_t total_steps, ModelGrads& grads) {
    const Matrix c_hat = bottleneck_forward(batch.z, model_.bottleneck);
    const MseTerm mse = concept_mse(c_hat, batch.c);
    std::optional<LeakageLoss> leak;
    if (config_.use_leakage_loss)
      leak = leakage_loss_batch(c_hat, batch.c, batch.y, config_.kde);
    const bool leak_active = leak && !leak->skipped;
    // Without a classification term the concept loss is the anchor.
    const double m_c = means.concepts.initialized ? means.concepts.value : mse.loss;
    const double m_leak =
        means.leak.initialized ? means.leak.value : (leak_active ? leak->loss : 0.0);
    const double alpha = anneal_alpha(step, total_steps);
    const double lam_leak = leak_active ? tilde(config_.lambda_leak, m_c, m_leak) : 0.0;

    Matrix d = mse.grad;
    if (leak_active)
      for (std::size_t i = 0; i < d.size(); ++i)
        d.data()[i] += lam_leak * alpha * leak->grad.data()[i];
    const BottleneckGrads bg = bottleneck_backward(batch.z, model_.bottleneck, d);
    grads.bottleneck_weight = bg.weight.data();
    grads.bottleneck_bias = bg.bias;

    StepRecord rec;
    rec.loss_concept = mse.loss;
    rec.mean_concept_before = m_c;
    if (leak_active) rec.loss_leak = leak->loss;
    rec.leak_skipped = leak && leak->skipped;
    if (leak_active) {
      rec.lambda_leak_tilde = lam_leak;
      rec.mean_leak_before = m_leak;
    }
    rec.alpha = alpha;
    rec.total = mse.loss + (leak_active ? lam_leak * alpha * leak->loss : 0.0);
    RunningMeans::observe(means.concepts, mse.loss, means.decay);
    if (leak_active) RunningMeans::observe(means.leak, leak->loss, means.decay);
    return rec;
  }

  StepRecord head_step(const Matrix& inputs, std::span<const int> y, ModelGrads& grads) {
    const ClsTerm cls = cross_entropy(head_forward(inputs, model_.head), y);
    grads.head = head_backward(inputs, model_.head, cls.grad).params;
    StepRecord rec;
    rec.loss_cls = cls.loss;
    rec.alpha = 0.0;
    rec.total = cls.loss;
    return rec;
  }

  CbmModel& model_;
  const SplitData& train_;
  const SplitData& val_;
  const TrainConfig& config_;
  Rng& rng_;
  TrainLog& log_;
  std::size_t global_step_ = 0;
};

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  config.validate(dataset.classes());
  dataset.validate();
  if (!has_split(dataset, Split::kTrain)) throw ArgumentError("dataset has no train split");
  if (dataset.classes() < 2) throw ArgumentError("training needs at least 2 classes");

  const SplitData train_split = extract_split(dataset, Split::kTrain);
  const SplitData val_split =
      has_split(dataset, Split::kVal) ? extract_split(dataset, Split::kVal) : train_split;

  Rng rng(config.seed);
  TrainResult result{make_model(dataset.concepts.names(), dataset.label_names,
                                dataset.input_width(), config.head, config.grid, rng),
                     {}};
  result.model.seed = config.seed;
  result.model.config_fingerprint = config_fingerprint(config);
  result.model.config_json = to_json(config).dump();

  Trainer trainer(result.model, train_split, val_split, config, rng, result.log);
  switch (config.regime) {
    case Regime::kJoint:
      trainer.run(Phase::kJoint);
      break;
    case Regime::kIndependent:
      trainer.run(Phase::kConcepts);
      trainer.run(Phase::kHeadOnTrue);
      break;
    case Regime::kSequential:
      trainer.run(Phase::kConcepts);
      trainer.run(Phase::kHeadOnPredicted);
      break;
  }
  return result;
}

}  // namespace fcbm
