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

#include "fcbm/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>

#include "CLI11.hpp"
#include "fcbm/ablation.hpp"
#include "fcbm/checkpoint.hpp"
#include "fcbm/errors.hpp"
#include "fcbm/evaluation.hpp"
#include "fcbm/serve.hpp"
#include "fcbm/synthetic.hpp"
#include "fcbm/training.hpp"

namespace fcbm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Name of the step currently running, reported when it fails.
struct Stage {
  std::string name = "startup";
  void operator()(std::string next) { name = std::move(next); }
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

void print_resolved(std::ostream& out, const json& config, std::uint64_t seed) {
  out << "config: " << config.dump() << "\n";
  out << "seed: " << seed << "\n";
}

std::string fingerprint_of(const json& j) {
  const std::string text = j.dump();
  return hex64(fnv1a(text.data(), text.size()));
}

struct Common {
  std::uint64_t seed = 42;
  bool seed_given = false;
};

struct SynthArgs {
  std::string spec, out;
};

int synth(const SynthArgs& a, const Common& c, Stage& stage, std::ostream& out) {
  stage("read spec");
  SyntheticSpec spec = a.spec.empty() ? default_synthetic_spec()
                                      : synthetic_spec_from_json(read_json(a.spec));
  if (c.seed_given || a.spec.empty()) spec.seed = c.seed;
  spec.validate();
  const json resolved = synthetic_spec_to_json(spec);
  print_resolved(out, resolved, spec.seed);
  stage("generate");
  const Dataset ds = generate_synthetic(spec);
  stage("write dataset");
  fs::create_directories(a.out);
  SaveOptions options;
  options.provenance_json = json{{"tool_version", kToolVersion},
                                 {"config_fingerprint", fingerprint_of(resolved)},
                                 {"synthetic_spec", resolved}}
                                .dump();
  const fs::path manifest = fs::path(a.out) / "dataset.json";
  save_dataset(ds, manifest, options);
  out << "wrote " << manifest.string() << "\n";
  return kOk;
}

struct AnnotateArgs {
  std::string dataset, embs, out;
};

int annotate(const AnnotateArgs& a, const Common& c, Stage& stage, std::ostream& out) {
  const json resolved{{"dataset", a.dataset}, {"concept_embs", a.embs}};
  print_resolved(out, resolved, c.seed);
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("load concept embeddings");
  const ConceptEmbeddings embs = load_concept_embeddings(a.embs);
  stage("annotate");
  const Dataset annotated = normalize_concepts(annotate_dataset(ds, embs));
  for (const auto& w : annotated.warnings) out << "warning: " << w << "\n";
  stage("write dataset");
  SaveOptions options;
  options.provenance_json =
      json{{"tool_version", kToolVersion}, {"config_fingerprint", fingerprint_of(resolved)}}.dump();
  const fs::path manifest(a.out);
  if (manifest.has_parent_path()) fs::create_directories(manifest.parent_path());
  save_dataset(annotated, manifest, options);
  out << "wrote " << manifest.string() << "\n";
  return kOk;
}

struct TrainOverrides {
  std::string config;
  std::string regime, head;
  std::string leakage_loss;
  double lambda = 0, lambda_leak = 0, lr = 0;
  std::size_t epochs = 0, batch_size = 0;
  std::map<std::string, CLI::Option*> flags;
};

void add_train_flags(CLI::App* sub, TrainOverrides& o) {
  sub->add_option("--config", o.config, "training config JSON");
  o.flags["regime"] = sub->add_option("--regime", o.regime, "joint | independent | sequential");
  o.flags["head"] = sub->add_option("--head", o.head, "kan | linear");
  o.flags["leak"] = sub->add_option("--leakage-loss", o.leakage_loss, "on | off")
                        ->check(CLI::IsMember({"on", "off"}));
  o.flags["lambda"] = sub->add_option("--lambda", o.lambda, "concept loss weight");
  o.flags["lambda_leak"] = sub->add_option("--lambda-leak", o.lambda_leak, "leakage loss weight");
  o.flags["lr"] = sub->add_option("--lr", o.lr, "initial learning rate");
  o.flags["epochs"] = sub->add_option("--epochs", o.epochs);
  o.flags["batch_size"] = sub->add_option("--batch-size", o.batch_size);
}

TrainConfig resolve_train_config(const TrainOverrides& o, const Common& c) {
  TrainConfig config;
  if (!o.config.empty()) {
    try {
      config = train_config_from_json(read_json(o.config));
    } catch (const json::exception& e) {
      throw ArgumentError(o.config + ": " + e.what());
    }
  }
  const auto given = [&](const char* name) { return o.flags.at(name)->count() > 0; };
  if (given("regime")) config.regime = parse_regime(o.regime);
  if (given("head")) config.head = parse_head_kind(o.head);
  if (given("leak")) config.use_leakage_loss = o.leakage_loss == "on";
  if (given("lambda")) config.lambda_concept = o.lambda;
  if (given("lambda_leak")) config.lambda_leak = o.lambda_leak;
  if (given("lr")) config.lr_init = o.lr;
  if (given("epochs")) config.epochs = o.epochs;
  if (given("batch_size")) config.batch_size = o.batch_size;
  if (c.seed_given || o.config.empty()) config.seed = c.seed;
  return config;
}

struct TrainArgs {
  std::string dataset, out;
  TrainOverrides overrides;
};

int train_cmd(const TrainArgs& a, const Common& c, Stage& stage, std::ostream& out) {
  stage("resolve config");
  const TrainConfig config = resolve_train_config(a.overrides, c);
  print_resolved(out, to_json(config), config.seed);
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("validate config");
  config.validate(ds.classes());
  stage("train");
  const TrainResult result = train(ds, config);
  stage("write artifacts");
  const fs::path dir(a.out);
  fs::create_directories(dir);
  save_checkpoint(result.model, dir / "checkpoint.fcbm");
  write_train_log(result.log, dir / "trainlog.jsonl", result.model.config_fingerprint);
  json config_doc = to_json(config);
  config_doc["tool_version"] = kToolVersion;
  config_doc["config_fingerprint"] = result.model.config_fingerprint;
  write_text(dir / "config.json", pretty(config_doc));
  out << "config_fingerprint: " << result.model.config_fingerprint << "\n";
  out << "wrote " << (dir / "checkpoint.fcbm").string() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string checkpoint, dataset, split = "test", out;
  std::size_t bins = 16;
};

EvalConfig eval_config(std::size_t bins) {
  EvalConfig cfg;
  cfg.binned.n_bins = bins;
  cfg.binned.validate();
  return cfg;
}

json eval_config_json(const EvalConfig& cfg) { return {{"bins", cfg.binned.n_bins}}; }

int eval_cmd(const EvalArgs& a, const Common&, Stage& stage, std::ostream& out) {
  const EvalConfig cfg = eval_config(a.bins);
  stage("load checkpoint");
  const CbmModel model = load_checkpoint(a.checkpoint);
  print_resolved(out, {{"split", a.split}, {"eval", eval_config_json(cfg)},
                       {"config_fingerprint", model.config_fingerprint}},
                 model.seed);
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("evaluate");
  const FaithfulnessReport report = evaluate(model, ds, parse_split(a.split), cfg);
  stage("write report");
  write_text(a.out, report_text(report));
  out << "accuracy: " << report.accuracy << "\n";
  out << "c_rmse: " << report.c_rmse << "\n";
  out << "mean_ctl: " << report.mean_ctl << "\n";
  out << "mean_icl: " << report.mean_icl << "\n";
  out << "wrote " << a.out << "\n";
  return kOk;
}

struct AblateArgs {
  std::string dataset, out;
  std::size_t repeats = 1, threads = 0;
  TrainOverrides overrides;
};

std::string file_label(const AblationCell& cell) {
  std::string label = cell_label(cell);
  std::replace(label.begin(), label.end(), '#', '_');
  return label;
}

int ablate(const AblateArgs& a, const Common& c, Stage& stage, std::ostream& out) {
  stage("resolve config");
  const TrainConfig config = resolve_train_config(a.overrides, c);
  if (a.repeats == 0) throw ArgumentError("--repeats must be at least 1");
  print_resolved(out, to_json(config), config.seed);
  out << "repeats: " << a.repeats << "\n";
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("validate config");
  config.validate(ds.classes());
  stage("train ablation cells");
  AblationOptions options;
  options.repeats = a.repeats;
  options.threads = a.threads;
  const auto cells = ablation_matrix(ds, config, options);
  stage("write artifacts");
  const fs::path dir(a.out);
  fs::create_directories(dir / "reports");
  write_text(dir / "ablation.json", pretty(ablation_report(cells)));
  std::vector<ParetoInput> points;
  for (const auto& cell : cells) {
    write_text(dir / "reports" / (file_label(cell) + ".json"), report_text(cell.report));
    points.push_back({cell_label(cell), cell.report});
    out << cell_label(cell) << ": accuracy " << cell.report.accuracy << ", c_rmse "
        << cell.report.c_rmse << ", mean_ctl " << cell.report.mean_ctl << "\n";
  }
  json pareto = pareto_export(points);
  pareto["tool_version"] = kToolVersion;
  write_text(dir / "pareto.json", pretty(pareto));
  out << "wrote " << (dir / "ablation.json").string() << "\n";
  return kOk;
}

struct IntervenArgs {
  std::string checkpoint, dataset, out;
};

int intervene_cmd(const IntervenArgs& a, const Common&, Stage& stage, std::ostream& out) {
  stage("load checkpoint");
  const CbmModel model = load_checkpoint(a.checkpoint);
  print_resolved(out, {{"config_fingerprint", model.config_fingerprint}}, model.seed);
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("intervene");
  const InterventionCurve curve = intervene(model, ds);
  stage("write curve");
  json doc = to_json(curve);
  doc["tool_version"] = kToolVersion;
  doc["config_fingerprint"] = model.config_fingerprint;
  write_text(a.out, pretty(doc));
  out << "accuracy: " << curve.accuracy.front() << " -> " << curve.accuracy.back() << "\n";
  out << "wrote " << a.out << "\n";
  return kOk;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::string> paths;
  if (rc == 0) paths.assign(g.gl_pathv, g.gl_pathv + g.gl_pathc);
  globfree(&g);
  if (rc == GLOB_NOMATCH || paths.empty()) throw DataError("no reports match " + pattern);
  if (rc != 0) throw DataError("cannot expand " + pattern);
  return paths;
}

struct ParetoArgs {
  std::string reports, out;
};

int pareto_cmd(const ParetoArgs& a, const Common& c, Stage& stage, std::ostream& out) {
  print_resolved(out, {{"reports", a.reports}}, c.seed);
  stage("read reports");
  std::vector<ParetoInput> inputs;
  for (const auto& path : expand_glob(a.reports)) {
    try {
      inputs.push_back({fs::path(path).stem().string(), report_from_json(read_json(path))});
    } catch (const json::exception& e) {
      throw DataError(path + ": " + e.what());
    }
  }
  stage("write pareto export");
  json doc = pareto_export(inputs);
  doc["tool_version"] = kToolVersion;
  write_text(a.out, pretty(doc));
  out << "points: " << inputs.size() << "\n";
  out << "wrote " << a.out << "\n";
  return kOk;
}

struct ServeArgs {
  std::string checkpoint, dataset, split = "test", host = "127.0.0.1", static_dir;
  int port = kDefaultPort;
  std::size_t bins = 16;
};

int serve_cmd(const ServeArgs& a, const Common&, Stage& stage, std::ostream& out) {
  const EvalConfig cfg = eval_config(a.bins);
  stage("load checkpoint");
  const CbmModel model = load_checkpoint(a.checkpoint);
  print_resolved(out, {{"split", a.split}, {"eval", eval_config_json(cfg)},
                       {"config_fingerprint", model.config_fingerprint},
                       {"host", a.host}, {"port", a.port}},
                 model.seed);
  stage("load dataset");
  const Dataset ds = load_dataset(a.dataset);
  stage("precompute");
  const Service service(model, ds, parse_split(a.split), cfg);
  stage("bind");
  HttpServer server(service, {a.host, a.port, a.static_dir});
  const int port = server.bind();
  if (port < 0)
    throw ArgumentError("cannot bind " + a.host + ":" + std::to_string(a.port));
  out << "serving on http://" << a.host << ":" << port << "\n" << std::flush;
  stage("serve");
  server.listen();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Leakage-aware concept bottleneck models", "fcbm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Common common;
  const auto add_seed = [&common](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "random seed (default 42)");
  };
  std::function<int(Stage&)> action;

  SynthArgs synth_args;
  auto* s = app.add_subcommand("synth", "write a synthetic dataset");
  s->add_option("--spec", synth_args.spec, "synthetic spec JSON");
  s->add_option("--out", synth_args.out, "output directory")->required();
  add_seed(s);
  s->callback([&] { action = [&](Stage& st) { return synth(synth_args, common, st, out); }; });

  AnnotateArgs annotate_args;
  auto* an = app.add_subcommand("annotate", "score concepts against concept embeddings");
  an->add_option("--dataset", annotate_args.dataset)->required();
  an->add_option("--concept-embs", annotate_args.embs)->required();
  an->add_option("--out", annotate_args.out, "output manifest")->required();
  add_seed(an);
  an->callback(
      [&] { action = [&](Stage& st) { return annotate(annotate_args, common, st, out); }; });

  TrainArgs train_args;
  auto* t = app.add_subcommand("train", "train a model");
  t->add_option("--dataset", train_args.dataset)->required();
  t->add_option("--out", train_args.out, "output directory")->required();
  add_train_flags(t, train_args.overrides);
  add_seed(t);
  t->callback([&] { action = [&](Stage& st) { return train_cmd(train_args, common, st, out); }; });

  EvalArgs eval_args;
  auto* e = app.add_subcommand("eval", "write a faithfulness report");
  e->add_option("--checkpoint", eval_args.checkpoint)->required();
  e->add_option("--dataset", eval_args.dataset)->required();
  e->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--bins", eval_args.bins, "bins for ICL");
  e->add_option("--out", eval_args.out, "report path")->required();
  add_seed(e);
  e->callback([&] { action = [&](Stage& st) { return eval_cmd(eval_args, common, st, out); }; });

  AblateArgs ablate_args;
  auto* ab = app.add_subcommand("ablate", "run the head x leakage-loss ablation");
  ab->add_option("--dataset", ablate_args.dataset)->required();
  ab->add_option("--repeats", ablate_args.repeats);
  ab->add_option("--threads", ablate_args.threads, "worker cap (default FCBM_THREADS or cores)");
  ab->add_option("--out", ablate_args.out, "output directory")->required();
  add_train_flags(ab, ablate_args.overrides);
  add_seed(ab);
  ab->callback([&] { action = [&](Stage& st) { return ablate(ablate_args, common, st, out); }; });

  IntervenArgs intervene_args;
  auto* iv = app.add_subcommand("intervene", "write the concept intervention curve");
  iv->add_option("--checkpoint", intervene_args.checkpoint)->required();
  iv->add_option("--dataset", intervene_args.dataset)->required();
  iv->add_option("--out", intervene_args.out, "curve path")->required();
  add_seed(iv);
  iv->callback(
      [&] { action = [&](Stage& st) { return intervene_cmd(intervene_args, common, st, out); }; });

  ParetoArgs pareto_args;
  auto* p = app.add_subcommand("pareto", "collect reports into a Pareto export");
  p->add_option("--reports", pareto_args.reports, "glob of report files")->required();
  p->add_option("--out", pareto_args.out)->required();
  add_seed(p);
  p->callback([&] { action = [&](Stage& st) { return pareto_cmd(pareto_args, common, st, out); }; });

  ServeArgs serve_args;
  auto* sv = app.add_subcommand("serve", "serve the intervention API");
  sv->add_option("--checkpoint", serve_args.checkpoint)->required();
  sv->add_option("--dataset", serve_args.dataset)->required();
  sv->add_option("--split", serve_args.split)->check(CLI::IsMember({"train", "val", "test"}));
  sv->add_option("--host", serve_args.host);
  sv->add_option("--port", serve_args.port)->check(CLI::Range(0, 65535));
  sv->add_option("--static", serve_args.static_dir, "directory with the UI bundle");
  sv->add_option("--bins", serve_args.bins, "bins for ICL");
  add_seed(sv);
  sv->callback([&] { action = [&](Stage& st) { return serve_cmd(serve_args, common, st, out); }; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  common.seed_given = chosen->get_option("--seed")->count() > 0;
  Stage stage;
  const auto fail = [&](int code, const char* what) {
    err << "fcbm " << name << ": " << stage.name << " failed: " << what << "\n";
    return code;
  };
  try {
    return action(stage);
  } catch (const NumericError& e) {
    return fail(kNumericError, e.what());
  } catch (const std::exception& e) {
    return fail(kDataError, e.what());
  }
}

}  // namespace fcbm::cli
