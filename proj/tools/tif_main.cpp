// tif: generate benchmark datasets, train tree models, export explanations,
// and evaluate prediction/explanation metrics.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tif/config.hpp"
#include "tif/datasets.hpp"
#include "tif/metrics.hpp"
#include "tif/model.hpp"
#include "tif/serialize.hpp"

namespace fs = std::filesystem;
using tif::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitMetricPrereq = 4;

uint64_t env_seed_default() {
  const char* s = std::getenv("TIF_SEED");
  return s ? std::strtoull(s, nullptr, 10) : 1;
}

tif::SynthKind parse_kind(const std::string& name) {
  if (name == "graphcycle") return tif::SynthKind::GraphCycle;
  if (name == "graphfive") return tif::SynthKind::GraphFive;
  if (name == "multiplecycle") return tif::SynthKind::MultipleCycle;
  throw CLI::ValidationError("--dataset", "unknown dataset '" + name + "'");
}

tif::VariantProfile parse_variant(const std::string& name) {
  for (auto p : {tif::VariantProfile::Full, tif::VariantProfile::BiTree,
                 tif::VariantProfile::NoIar, tif::VariantProfile::NoPm, tif::VariantProfile::Sv})
    if (name == tif::variant_name(p)) return p;
  throw CLI::ValidationError("--variant", "unknown variant '" + name + "'");
}

// Loads a TU directory, adopting dataset-derived feature width and class
// count into the model config; picks up the ground-truth sidecar if present.
tif::DatasetBundle load_bundle(tif::RunConfig& rc) {
  if (rc.dataset_path.empty()) throw CLI::ValidationError("--data", "dataset path required");
  std::vector<std::string> warnings;
  tif::DatasetBundle b = tif::load_tu(rc.dataset_path, rc.model.feature_dim, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  rc.model.classes = b.num_classes;
  rc.model.feature_dim = b.graphs.front().features.cols;
  fs::path gt = fs::path(rc.dataset_path) / "ground_truth.json";
  if (fs::exists(gt)) tif::load_ground_truth(b, gt, rc.model.feature_dim);
  tif::assign_folds(b, rc.folds, rc.model.seed, &warnings);
  return b;
}

json metrics_config_echo(const tif::RunConfig& rc, int fold) {
  json j = tif::config_to_json(rc.model);
  j["fold"] = fold;
  j["dataset"] = rc.dataset_path;
  j["metric_noise"] = rc.metric_noise;
  j["metric_runs"] = rc.metric_runs;
  return j;
}

int cmd_gen(const std::string& dataset, int n, double scale, uint64_t seed, int feature_dim,
            const std::string& out) {
  tif::SynthSpec spec;
  spec.kind = parse_kind(dataset);
  spec.count = n;
  spec.scale = scale;
  spec.seed = seed;
  spec.feature_dim = feature_dim;
  tif::DatasetBundle b = tif::gen_synthetic(spec);
  fs::create_directories(out);
  tif::save_tu(b, out, dataset);
  tif::save_ground_truth(b, fs::path(out) / "ground_truth.json");
  tif::write_text(fs::path(out) / "manifest.json", tif::bundle_manifest(b).dump(2) + "\n");
  std::cout << "wrote " << b.graphs.size() << " graphs to " << out << "\n";
  return 0;
}

int cmd_train(tif::RunConfig rc, int fold) {
  tif::DatasetBundle bundle = load_bundle(rc);
  if (fold < 0 || fold >= rc.folds) throw CLI::ValidationError("--fold", "fold out of range");
  auto [train_idx, test_idx] = tif::split_fold(bundle, fold);

  tif::TifModel model = tif::TifModel::create(rc.model);
  rc.model = model.config;  // profile-resolved echo
  fs::create_directories(rc.out_dir);
  tif::write_text(fs::path(rc.out_dir) / "resolved_config.txt", tif::resolved_config_text(rc));

  tif::TrainingReport report;
  if (rc.model.epochs > 0) {
    try {
      report = tif::train(model, bundle.graphs, train_idx, test_idx);
    } catch (const tif::DivergenceError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitDivergence;
    }
  }

  std::ostringstream csv;
  csv << "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& es : report.epochs)
    csv << es.epoch << "," << es.train_loss << "," << es.train_acc << "," << es.val_loss << ","
        << es.val_acc << "\n";
  tif::write_text(fs::path(rc.out_dir) / "training_curve.csv", csv.str());
  tif::save_checkpoint(model, fs::path(rc.out_dir) / "model.ckpt");

  tif::ConfusionMatrix cm_train = tif::confusion(model, bundle.graphs, train_idx);
  tif::ConfusionMatrix cm_test = tif::confusion(model, bundle.graphs, test_idx);
  auto [train_acc, train_f1] = tif::accuracy_f1(cm_train);
  auto [test_acc, test_f1] = tif::accuracy_f1(cm_test);
  json m{{"train_accuracy", train_acc},
         {"train_macro_f1", train_f1},
         {"test_accuracy", test_acc},
         {"test_macro_f1", test_f1},
         {"epochs_run", report.stopped_epoch},
         {"config", metrics_config_echo(rc, fold)}};
  tif::write_text(fs::path(rc.out_dir) / "metrics.json", m.dump(2) + "\n");
  std::cout << "train acc " << train_acc << " test acc " << test_acc << "\n";
  return 0;
}

int cmd_explain(const std::string& ckpt, tif::RunConfig rc, std::vector<int> indices,
                bool all_test, int fold) {
  tif::TifModel model = tif::load_checkpoint(ckpt);
  rc.model = model.config;
  tif::DatasetBundle bundle = load_bundle(rc);
  if (all_test) {
    indices.clear();
    for (size_t i = 0; i < bundle.graphs.size(); ++i)
      if (bundle.folds[i] == fold) indices.push_back(static_cast<int>(i));
  }
  if (indices.empty()) throw CLI::ValidationError("--index", "no graphs selected");
  fs::create_directories(rc.out_dir);
  for (int i : indices) {
    if (i < 0 || i >= static_cast<int>(bundle.graphs.size()))
      throw CLI::ValidationError("--index", "graph index out of range");
    tif::TreeTrace t = model.explain(bundle.graphs[i]);
    std::string stem = "trace_" + std::to_string(i);
    tif::write_text(fs::path(rc.out_dir) / (stem + ".json"), tif::trace_to_json(t).dump(2) + "\n");
    tif::write_text(fs::path(rc.out_dir) / (stem + ".dot"),
                    tif::trace_to_dot(t, model.config.branches));
  }
  std::cout << "wrote " << indices.size() << " traces to " << rc.out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt, tif::RunConfig rc, const std::string& metric_list,
             int fold) {
  tif::TifModel model = tif::load_checkpoint(ckpt);
  rc.model = model.config;
  tif::DatasetBundle bundle = load_bundle(rc);
  auto [train_idx, test_idx] = tif::split_fold(bundle, fold);

  std::set<std::string> wanted;
  std::stringstream ss(metric_list);
  std::string tok;
  while (std::getline(ss, tok, ',')) wanted.insert(tok);
  const std::set<std::string> known{"acc",         "f1",
                                    "expl-acc",    "consistency",
                                    "path-consistency", "path-importance"};
  for (const auto& w : wanted)
    if (!known.count(w)) throw CLI::ValidationError("--metrics", "unknown metric '" + w + "'");

  json out;
  if (wanted.count("acc") || wanted.count("f1")) {
    auto [acc, f1] = tif::accuracy_f1(tif::confusion(model, bundle.graphs, test_idx));
    if (wanted.count("acc")) out["accuracy"] = acc;
    if (wanted.count("f1")) out["macro_f1"] = f1;
  }

  std::vector<tif::TreeTrace> traces;
  std::vector<int> labels;
  if (wanted.count("expl-acc") || wanted.count("consistency")) {
    for (int i : test_idx) {
      traces.push_back(model.explain(bundle.graphs[i]));
      labels.push_back(bundle.graphs[i].label);
    }
  }
  if (wanted.count("expl-acc")) {
    tif::SurrogateGcn sg = tif::SurrogateGcn::create(model.config.feature_dim,
                                                     model.config.classes, 64, model.config.seed);
    sg.train(bundle.graphs, train_idx, rc.surrogate_epochs, 0.01, 32, model.config.seed);
    out["explanation_accuracy"] = tif::explanation_accuracy(sg, traces, labels);
  }
  if (wanted.count("consistency")) {
    if (!bundle.has_ground_truth()) {
      std::cerr << "error: consistency requires ground-truth templates, and this dataset "
                   "carries none (real-world datasets have no generator templates)\n";
      return kExitMetricPrereq;
    }
    tif::KernelConfig kc;
    kc.truncation = rc.kernel_truncation;
    out["consistency"] = tif::consistency(traces, test_idx, bundle, kc);
  }
  if (wanted.count("path-consistency"))
    out["path_consistency"] = tif::path_consistency(model, bundle.graphs, test_idx,
                                                    rc.metric_runs, rc.metric_noise,
                                                    model.config.seed);
  if (wanted.count("path-importance")) {
    tif::PathImportance pi = tif::path_importance(model, bundle.graphs, test_idx);
    out["path_importance"] = pi.normalized_entropy;
    out["distinct_paths"] = pi.distinct_paths;
    out["path_frequencies"] = pi.frequencies;
  }

  out["config"] = metrics_config_echo(rc, fold);
  fs::create_directories(rc.out_dir);
  tif::write_text(fs::path(rc.out_dir) / "eval.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tree-structured interpretable graph classifier"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic benchmark dataset");
  std::string gen_dataset = "graphcycle", gen_out;
  int gen_n = 2000, gen_feature_dim = 10;
  double gen_scale = 1.0;
  uint64_t gen_seed = env_seed_default();
  gen->add_option("--dataset", gen_dataset, "graphcycle|graphfive|multiplecycle");
  gen->add_option("--n", gen_n, "graph count");
  gen->add_option("--scale", gen_scale, "size scale factor in (0,1]");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--feature-dim", gen_feature_dim, "degree one-hot width");
  gen->add_option("--out", gen_out, "output directory")->required();

  // shared train/explain/eval plumbing
  tif::RunConfig rc;
  rc.model.seed = env_seed_default();
  std::string config_path, data_path, out_dir, variant, ckpt_path;
  int fold = 0;
  std::optional<int> o_epochs, o_branches, o_levels, o_batch, o_threads;
  std::optional<double> o_q, o_lr, o_noise;
  std::optional<uint64_t> o_seed;
  std::optional<int> o_runs;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "config file");
    c->add_option("--data", data_path, "TU dataset directory");
    c->add_option("--out", out_dir, "output directory");
    c->add_option("--fold", fold, "held-out fold index");
    c->add_option("--seed", o_seed, "run seed");
    c->add_option("--threads", o_threads, "worker threads (1 = deterministic)");
  };

  auto* train = app.add_subcommand("train", "train a model on one fold");
  add_common(train);
  train->add_option("--variant", variant, "full|bitree|no-iar|no-pm|sv");
  train->add_option("--epochs", o_epochs, "training epochs (0 = evaluation only)");
  train->add_option("--branches", o_branches, "branches per level");
  train->add_option("--levels", o_levels, "tree depth");
  train->add_option("--q", o_q, "compression ratio");
  train->add_option("--lr", o_lr, "learning rate");
  train->add_option("--batch", o_batch, "batch size");

  auto* explain = app.add_subcommand("explain", "export explanation traces");
  add_common(explain);
  std::vector<int> indices;
  bool all_test = false;
  explain->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  explain->add_option("--index", indices, "graph indices");
  explain->add_flag("--all-test", all_test, "every held-out graph");

  auto* eval = app.add_subcommand("eval", "compute metrics from a checkpoint");
  add_common(eval);
  std::string metric_list = "acc,f1";
  eval->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
  eval->add_option("--metrics", metric_list,
                   "comma list: acc,f1,expl-acc,consistency,path-consistency,path-importance");
  eval->add_option("--noise", o_noise, "feature noise sigma for path consistency");
  eval->add_option("--runs", o_runs, "noisy repetitions for path consistency");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_dataset, gen_n, gen_scale, gen_seed, gen_feature_dim,
                                      gen_out);

    // flags > file > defaults
    if (!config_path.empty()) tif::load_config_file(rc, config_path);
    if (!data_path.empty()) rc.dataset_path = data_path;
    if (!out_dir.empty()) rc.out_dir = out_dir;
    if (o_seed) rc.model.seed = *o_seed;
    if (o_threads) rc.model.threads = *o_threads;
    if (o_epochs) rc.model.epochs = *o_epochs;
    if (o_branches) rc.model.branches = *o_branches;
    if (o_levels) rc.model.levels = *o_levels;
    if (o_q) rc.model.q = *o_q;
    if (o_lr) rc.model.lr = *o_lr;
    if (o_batch) rc.model.batch = *o_batch;
    if (o_noise) rc.metric_noise = *o_noise;
    if (o_runs) rc.metric_runs = *o_runs;
    if (!variant.empty()) rc.model.profile = parse_variant(variant);

    if (train->parsed()) return cmd_train(rc, fold);
    if (explain->parsed()) return cmd_explain(ckpt_path, rc, indices, all_test, fold);
    if (eval->parsed()) return cmd_eval(ckpt_path, rc, metric_list, fold);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
