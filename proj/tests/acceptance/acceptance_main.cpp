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

// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fcbm/ablation.hpp"
#include "fcbm/checkpoint.hpp"
#include "fcbm/cli.hpp"
#include "fcbm/density.hpp"
#include "fcbm/evaluation.hpp"
#include "fcbm/model.hpp"
#include "fcbm/stats.hpp"
#include "fcbm/synthetic.hpp"
#include "fcbm/training.hpp"
#include "test_oracles.hpp"

namespace fcbm {
namespace {

namespace fs = std::filesystem;

// Pinned tolerances and budgets.
constexpr double kA1RelTol = 0.10;
constexpr double kA1Budget = 30.0;
constexpr double kA2Tol = 1e-4;
constexpr double kA2EndToEndTol = 1e-3;
constexpr double kA2Budget = 60.0;
constexpr int kA2Instances = 20;
constexpr double kA4MinBaselineCtl = 0.05;
constexpr double kA4MinReduction = 0.50;
constexpr double kA4MaxAccDrop = 2.0;
constexpr double kA4Budget = 300.0;
constexpr double kA5AccSlack = 1.0;
constexpr double kA5Budget = 300.0;
constexpr std::uint64_t kSeeds[] = {42, 43, 44};

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <typename T>
  Detail& operator<<(const T& v) {
    out_ << v;
    return *this;
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(lo, hi);
  return m;
}

double off_knot(Rng& rng, const KanGrid& grid) {
  const std::size_t cell = rng.index(grid.knots - 1);
  return grid.knot(cell) + rng.uniform(1e-3, 1.0 - 1e-3) * grid.spacing();
}

std::vector<int> shuffled_balanced(Rng& rng, std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  rng.shuffle(y);
  return y;
}

// A1
Outcome estimator_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  Detail d;
  for (const double mu : {1.0, 3.0}) {
    const double truth = testing::two_gaussian_mixture_mi(mu);
    std::vector<double> estimates;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto s = testing::draw_two_gaussian(2000, mu, 1000 + seed);
      estimates.push_back(kde_mi(s.x, s.y, KdeConfig{}));
    }
    const double rel = std::abs(median(estimates) - truth) / truth;
    o.pass = o.pass && rel < kA1RelTol;
    d << "mu=" << mu << " truth " << truth << " median " << median(estimates) << " rel err "
      << rel << "; ";
  }
  const double secs = seconds_since(t0);
  o.pass = o.pass && secs < kA1Budget;
  d << secs << " s";
  o.detail = d.str();
  return o;
}

// A2
Outcome differentiability() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst_kde = 0, worst_ctl = 0, worst_kan = 0, worst_bottleneck = 0, worst_total = 0;

  Rng rng(2024);
  for (int trial = 0; trial < kA2Instances; ++trial) {
    auto y = shuffled_balanced(rng, 40);
    std::vector<double> x(40), c(40), c_hat(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x[i] = rng.uniform() + 0.4 * y[i];
      c[i] = rng.uniform();
      c_hat[i] = c[i] + 0.5 * y[i] + rng.normal(0.0, 0.05);
    }
    const KdeConfig kde;
    worst_kde = std::max(
        worst_kde,
        relative_error(kde_mi_backward(x, y, kde),
                       finite_diff_grad([&](std::span<const double> p) { return kde_mi(p, y, kde); },
                                        x)));
    worst_ctl = std::max(
        worst_ctl,
        relative_error(ctl_loss(c_hat, c, y, kde).grad,
                       finite_diff_grad(
                           [&](std::span<const double> p) { return ctl_loss(p, c, y, kde).loss; },
                           c_hat)));

    const KanGrid grid;
    KanHead head(5, 3, grid);
    head.initialize(rng);
    for (double& s : head.scale) s = rng.uniform(0.5, 1.5);
    Matrix in(4, 5);
    for (double& v : in.data()) v = off_knot(rng, grid);
    const Matrix w = random_matrix(rng, 4, 3, -1.0, 1.0);
    const auto weighted = [&w](const Matrix& out) {
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += w.data()[i] * out.data()[i];
      return s;
    };
    const KanGrads kg = kan_backward(in, head, w);
    const auto kan_coeffs = finite_diff_grad(
        [&](std::span<const double> p) {
          KanHead h = head;
          h.coeffs.assign(p.begin(), p.end());
          return weighted(kan_forward(in, h));
        },
        head.coeffs);
    const auto kan_input = finite_diff_grad(
        [&](std::span<const double> p) {
          return weighted(kan_forward(Matrix(4, 5, std::vector<double>(p.begin(), p.end())), head));
        },
        in.data());
    const auto kan_scale = finite_diff_grad(
        [&](std::span<const double> p) {
          KanHead h = head;
          h.scale.assign(p.begin(), p.end());
          return weighted(kan_forward(in, h));
        },
        head.scale);
    worst_kan = std::max({worst_kan, relative_error(kg.coeffs, kan_coeffs),
                          relative_error(kg.input.data(), kan_input),
                          relative_error(kg.scale, kan_scale)});

    BottleneckLayer layer(3, 6);
    layer.initialize(rng);
    for (double& b : layer.bias) b = rng.normal();
    const Matrix z = random_matrix(rng, 4, 6, -1.0, 1.0);
    const Matrix up = random_matrix(rng, 4, 3, -1.0, 1.0);
    const auto bottleneck_objective = [&up](const Matrix& out) {
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += up.data()[i] * out.data()[i];
      return s;
    };
    const BottleneckGrads bg = bottleneck_backward(z, layer, up);
    const auto num_w = finite_diff_grad(
        [&](std::span<const double> p) {
          BottleneckLayer l = layer;
          l.weight.data().assign(p.begin(), p.end());
          return bottleneck_objective(bottleneck_forward(z, l));
        },
        layer.weight.data());
    const auto num_b = finite_diff_grad(
        [&](std::span<const double> p) {
          BottleneckLayer l = layer;
          l.bias.assign(p.begin(), p.end());
          return bottleneck_objective(bottleneck_forward(z, l));
        },
        layer.bias);
    const auto num_z = finite_diff_grad(
        [&](std::span<const double> p) {
          return bottleneck_objective(
              bottleneck_forward(Matrix(4, 6, std::vector<double>(p.begin(), p.end())), layer));
        },
        z.data());
    worst_bottleneck = std::max({worst_bottleneck, relative_error(bg.weight.data(), num_w),
                                 relative_error(bg.bias, num_b),
                                 relative_error(bg.input.data(), num_z)});

    const HeadKind kind = trial % 2 == 0 ? HeadKind::kKan : HeadKind::kLinear;
    CbmModel model = make_model({"a", "b", "c"}, {"n", "p"}, 6, kind, {}, rng);
    Batch batch{random_matrix(rng, 24, 6, -2.0, 2.0), random_matrix(rng, 24, 3, 0.0, 1.0), {}};
    for (std::size_t i = 0; i < 24; ++i) batch.y.push_back(static_cast<int>(i % 2));
    RunningMeans means;
    RunningMeans::observe(means.cls, 0.7, means.decay);
    RunningMeans::observe(means.concepts, 0.3, means.decay);
    RunningMeans::observe(means.leak, 0.05, means.decay);
    const TrainConfig cfg;
    const auto flatten = [](CbmModel& m) {
      std::vector<double> out(m.bottleneck.weight.data().begin(),
                              m.bottleneck.weight.data().end());
      out.insert(out.end(), m.bottleneck.bias.begin(), m.bottleneck.bias.end());
      for (auto p : head_parameters(m.head)) out.insert(out.end(), p.begin(), p.end());
      return out;
    };
    const auto analytic = total_loss(batch, model, cfg, means, 6, 10);
    std::vector<double> grads = analytic.grads.bottleneck_weight;
    grads.insert(grads.end(), analytic.grads.bottleneck_bias.begin(),
                 analytic.grads.bottleneck_bias.end());
    for (const auto& p : analytic.grads.head) grads.insert(grads.end(), p.begin(), p.end());
    const auto numeric = finite_diff_grad(
        [&](std::span<const double> p) {
          CbmModel m = model;
          std::size_t pos = 0;
          for (double& v : m.bottleneck.weight.data()) v = p[pos++];
          for (double& v : m.bottleneck.bias) v = p[pos++];
          for (auto span : head_parameters(m.head))
            for (double& v : span) v = p[pos++];
          return total_loss(batch, m, cfg, means, 6, 10).loss;
        },
        flatten(model));
    worst_total = std::max(worst_total, relative_error(grads, numeric));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_kde < kA2Tol && worst_ctl < kA2Tol && worst_kan < kA2Tol &&
           worst_bottleneck < kA2Tol && worst_total < kA2EndToEndTol && secs < kA2Budget;
  o.detail = (Detail() << kA2Instances << " instances each; worst rel err kde_mi " << worst_kde
                       << ", ctl " << worst_ctl << ", kan " << worst_kan << ", bottleneck "
                       << worst_bottleneck << ", end-to-end " << worst_total << "; " << secs
                       << " s")
                 .str();
  return o;
}

// A3
Outcome metric_fixed_points() {
  const Dataset ds = generate_synthetic(default_synthetic_spec());
  const SplitData test = extract_split(ds, Split::kTest);
  const std::size_t k = test.c.cols();
  const EvalConfig eval;

  bool exact = concept_rmse(test.c, test.c).aggregate == 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const auto ci = test.c.column(i);
    exact = exact && ctl_metric(ci, ci, test.y, eval.kde) == 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const auto cj = test.c.column(j);
      exact = exact && icl_metric(ci, cj, ci, cj, eval.binned) == 0.0;
    }
  }
  const LeakageLoss leak = leakage_loss_batch(test.c, test.c, test.y, eval.kde);
  exact = exact && !leak.skipped && leak.loss == 0.0;

  // Same fixed point through the evaluation pipeline: a model whose
  // bottleneck reproduces c exactly.
  Dataset identity = ds;
  identity.d = k;
  identity.modalities = 1;
  for (auto& s : identity.samples) s.z = s.c;
  Rng rng(1);
  CbmModel model = make_model(identity.concepts.names(), identity.label_names, k, HeadKind::kKan,
                              {}, rng);
  model.bottleneck.weight = Matrix::identity(k);
  std::fill(model.bottleneck.bias.begin(), model.bottleneck.bias.end(), 0.0);
  const FaithfulnessReport report = evaluate(model, identity, Split::kTest, eval);
  bool pipeline = report.c_rmse == 0.0 && report.mean_ctl == 0.0 && report.mean_icl == 0.0;
  for (double v : report.ctl) pipeline = pipeline && v == 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) pipeline = pipeline && report.icl(i, j) == 0.0;

  Outcome o;
  o.pass = exact && pipeline;
  o.detail = (Detail() << "k=" << k << ", N=" << test.size() << "; direct metrics exact: "
                       << (exact ? "yes" : "no") << ", evaluation pipeline exact: "
                       << (pipeline ? "yes" : "no"))
                 .str();
  return o;
}

// Ablation cells on the default spec, one dataset per seed. Shared by A4, A6
// and A7.
struct DefaultRuns {
  std::vector<Dataset> datasets;
  std::vector<std::vector<AblationCell>> cells;  // per seed: linear-, linear+, kan-, kan+
  double seconds = 0.0;
};

const DefaultRuns& default_runs() {
  static const DefaultRuns runs = [] {
    DefaultRuns r;
    const auto t0 = std::chrono::steady_clock::now();
    for (const std::uint64_t seed : kSeeds) {
      SyntheticSpec spec = default_synthetic_spec();
      spec.seed = seed;
      r.datasets.push_back(generate_synthetic(spec));
      TrainConfig base;
      base.seed = seed;
      r.cells.push_back(ablation_matrix(r.datasets.back(), base, AblationOptions{}));
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

const AblationCell& find_cell(const std::vector<AblationCell>& cells, HeadKind head, bool leak) {
  for (const auto& c : cells)
    if (c.head == head && c.use_leakage_loss == leak) return c;
  throw std::logic_error("missing ablation cell");
}

// A4
Outcome leakage_loss_efficacy() {
  const DefaultRuns& runs = default_runs();
  std::vector<double> ctl_base, ctl_leak, acc_base, acc_leak;
  for (const auto& cells : runs.cells) {
    const auto& base = find_cell(cells, HeadKind::kLinear, false).report;
    const auto& leak = find_cell(cells, HeadKind::kLinear, true).report;
    ctl_base.push_back(base.mean_ctl);
    ctl_leak.push_back(leak.mean_ctl);
    acc_base.push_back(base.accuracy);
    acc_leak.push_back(leak.accuracy);
  }
  const double reduction = 1.0 - mean(ctl_leak) / mean(ctl_base);
  const double drop = mean(acc_base) - mean(acc_leak);
  Outcome o;
  o.pass = mean(ctl_base) >= kA4MinBaselineCtl && reduction >= kA4MinReduction &&
           drop <= kA4MaxAccDrop && runs.seconds < kA4Budget;
  o.detail = (Detail() << "mean CTL " << mean(ctl_base) << " -> " << mean(ctl_leak) << " ("
                       << 100.0 * reduction << "% reduction), accuracy " << mean(acc_base)
                       << " -> " << mean(acc_leak) << " (drop " << drop << " pts); "
                       << runs.seconds << " s for 12 runs")
                 .str();
  return o;
}

// A5
Outcome kan_benefit_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> rmse_kan, rmse_lin, acc_kan, acc_lin;
  for (const std::uint64_t seed : kSeeds) {
    SyntheticSpec spec = nonlinear_synthetic_spec();
    spec.seed = seed;
    const Dataset ds = generate_synthetic(spec);
    for (const HeadKind head : {HeadKind::kKan, HeadKind::kLinear}) {
      TrainConfig cfg;
      cfg.head = head;
      cfg.seed = seed;
      const FaithfulnessReport r = evaluate(train(ds, cfg).model, ds, Split::kTest, {});
      (head == HeadKind::kKan ? rmse_kan : rmse_lin).push_back(r.c_rmse);
      (head == HeadKind::kKan ? acc_kan : acc_lin).push_back(r.accuracy);
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = median(rmse_kan) <= median(rmse_lin) &&
           median(acc_kan) >= median(acc_lin) - kA5AccSlack && secs < kA5Budget;
  o.detail = (Detail() << "median c-RMSE kan " << median(rmse_kan) << " vs linear "
                       << median(rmse_lin) << ", median accuracy kan " << median(acc_kan)
                       << " vs linear " << median(acc_lin) << "; " << secs << " s")
                 .str();
  return o;
}

// A6
Outcome ctl_icl_comovement() {
  std::vector<double> ctl, icl;
  for (const auto& cells : default_runs().cells) {
    for (const auto& c : cells) {
      ctl.push_back(c.report.mean_ctl);
      icl.push_back(c.report.mean_icl);
    }
  }
  const auto r = pearson(ctl, icl);
  Outcome o;
  o.pass = r.has_value() && *r > 0.0;
  o.detail = (Detail() << ctl.size() << " runs; pearson r = "
                       << (r ? std::to_string(*r) : std::string("undefined")))
                 .str();
  return o;
}

// A7
Outcome intervention() {
  // Full substitution is the head applied to c.
  const DefaultRuns& runs = default_runs();
  const Dataset& ds = runs.datasets.front();
  const AblationCell& fcbm = find_cell(runs.cells.front(), HeadKind::kKan, true);
  const SplitData test = extract_split(ds, Split::kTest);
  const ForwardResult fw = model_forward(test.z, fcbm.result.model);
  std::vector<std::size_t> all(test.c.cols());
  std::iota(all.begin(), all.end(), 0);
  const Matrix full = intervened_logits(fw.concepts, test.c, all, fcbm.result.model.head);
  const bool identity = full.data() == head_forward(test.c, fcbm.result.model.head).data();

  SyntheticSpec spec = noiseless_synthetic_spec();
  const Dataset clean = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.regime = Regime::kIndependent;
  const InterventionCurve noiseless = intervene(train(clean, cfg).model, clean);

  const InterventionCurve low_leak = intervene(fcbm.result.model, ds);
  const InterventionCurve baseline =
      intervene(find_cell(runs.cells.front(), HeadKind::kLinear, false).result.model, ds);

  Outcome o;
  o.pass = identity && noiseless.accuracy.back() == 100.0 &&
           low_leak.accuracy.back() >= low_leak.accuracy.front();
  o.detail = (Detail() << "full substitution bitwise: " << (identity ? "yes" : "no")
                       << "; noiseless independent curve " << noiseless.accuracy.front()
                       << " -> " << noiseless.accuracy.back() << "; kan+leak curve "
                       << low_leak.accuracy.front() << " -> " << low_leak.accuracy.back()
                       << " (linear baseline " << baseline.accuracy.front() << " -> "
                       << baseline.accuracy.back() << ", not required)")
                 .str();
  return o;
}

// A8
Outcome regime_contracts() {
  SyntheticSpec spec = default_synthetic_spec();
  spec.n_train = 600;
  spec.n_val = spec.n_test = 200;
  const Dataset ds = generate_synthetic(spec);
  TrainConfig cfg;
  cfg.epochs = 15;

  cfg.regime = Regime::kIndependent;
  const TrainResult ind = train(ds, cfg);
  std::size_t ind_head_steps = 0;
  bool ind_ok = true;
  for (const auto& s : ind.log.steps) {
    if (s.phase == Phase::kHeadOnTrue) {
      ++ind_head_steps;
      ind_ok = ind_ok && s.input_source == "true";
    } else {
      ind_ok = ind_ok && s.phase == Phase::kConcepts;
    }
  }
  ind_ok = ind_ok && ind_head_steps > 0;

  cfg.regime = Regime::kSequential;
  const TrainResult seq = train(ds, cfg);
  const std::string final_hash = hex64(bottleneck_hash(seq.model.bottleneck));
  std::size_t seq_head_steps = 0;
  bool seq_ok = true;
  std::string phase1_last;
  for (const auto& s : seq.log.steps) {
    if (s.phase == Phase::kHeadOnPredicted) {
      ++seq_head_steps;
      seq_ok = seq_ok && s.input_source == "predicted" && s.bottleneck_hash == final_hash;
    } else {
      phase1_last = s.bottleneck_hash;
    }
  }
  seq_ok = seq_ok && seq_head_steps > 0;

  Outcome o;
  o.pass = ind_ok && seq_ok;
  o.detail = (Detail() << "independent: " << ind_head_steps << " head steps, all on true c: "
                       << (ind_ok ? "yes" : "no") << "; sequential: " << seq_head_steps
                       << " head steps, bottleneck hash constant " << final_hash << ": "
                       << (seq_ok ? "yes" : "no"))
                 .str();
  return o;
}

// A9
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "fcbm_acceptance_a9";
  fs::remove_all(root);
  std::vector<std::string> reports;
  bool ok = true;
  std::string failure;
  for (const std::string tag : {"first", "second"}) {
    const std::string dir = (root / tag).string();
    std::ostringstream out, err;
    const std::vector<std::vector<std::string>> steps{
        {"synth", "--out", dir + "/data", "--seed", "42"},
        {"train", "--dataset", dir + "/data/dataset.json", "--out", dir + "/run", "--seed", "42"},
        {"eval", "--checkpoint", dir + "/run/checkpoint.fcbm", "--dataset",
         dir + "/data/dataset.json", "--split", "test", "--out", dir + "/report.json"}};
    for (const auto& args : steps) {
      if (cli::run(args, out, err) != cli::kOk) {
        ok = false;
        failure = err.str();
      }
    }
    std::ifstream in(dir + "/report.json", std::ios::binary);
    reports.emplace_back(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = ok && !reports[0].empty() && reports[0] == reports[1];
  o.detail = ok ? (Detail() << "report " << reports[0].size() << " bytes, identical: "
                            << (reports[0] == reports[1] ? "yes" : "no"))
                      .str()
                : "cli failed: " + failure;
  return o;
}

// A10
Outcome statistics() {
  const TTestResult t = paired_t_test(std::vector<double>{1, 2, 4}, std::vector<double>{0, 1, 2});
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> affine, negated;
  for (double v : x) {
    affine.push_back(2 * v + 1);
    negated.push_back(-v);
  }
  const auto r = pearson(x, affine);
  const auto rho = spearman(x, affine);
  const auto rho_perm = spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2});
  const auto r_neg = pearson(x, negated);
  const auto r_self = pearson(x, x);
  Outcome o;
  o.pass = t.defined && std::abs(t.t - 4.0) < 1e-12 && t.df == 2.0 && r && std::abs(*r - 1) < 1e-12 &&
           rho && std::abs(*rho - 1) < 1e-12 && rho_perm && std::abs(*rho_perm + 0.5) < 1e-12 &&
           r_neg && r_self && std::abs(*r_neg + *r_self) < 1e-12;
  o.detail = (Detail() << "t=" << t.t << " df=" << t.df << " p=" << t.p_value << "; r(2x+1)="
                       << r.value_or(NAN) << " rho(2x+1)=" << rho.value_or(NAN)
                       << " rho([1,2,3],[3,1,2])=" << rho_perm.value_or(NAN))
                 .str();
  return o;
}

}  // namespace
}  // namespace fcbm

int main() {
  using fcbm::Outcome;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1 estimator correctness", fcbm::estimator_correctness},
      {"A2 differentiability", fcbm::differentiability},
      {"A3 metric fixed points", fcbm::metric_fixed_points},
      {"A4 leakage-loss efficacy", fcbm::leakage_loss_efficacy},
      {"A5 kan benefit direction", fcbm::kan_benefit_direction},
      {"A6 ctl-icl co-movement", fcbm::ctl_icl_comovement},
      {"A7 intervention", fcbm::intervention},
      {"A8 regime contracts", fcbm::regime_contracts},
      {"A9 determinism", fcbm::determinism},
      {"A10 statistics utilities", fcbm::statistics}};
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
