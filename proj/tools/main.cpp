// Copyright 2026 The hardneg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hardneg/corpus.hpp"
#include "hardneg/descriptor.hpp"
#include "hardneg/error.hpp"
#include "hardneg/evaluation.hpp"
#include "hardneg/parallel.hpp"
#include "hardneg/report.hpp"
#include "hardneg/training.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hardneg::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config_path;
  int threads = DefaultThreadCount();
};

RunConfig BaseConfig(const Common& c) {
  return c.config_path.empty() ? RunConfig{} : LoadRunConfig(c.config_path);
}

void ThrowIfProblems(const std::vector<std::string>& problems) {
  if (problems.empty()) return;
  std::string msg = "invalid arguments (" + std::to_string(problems.size()) + " problems):";
  for (const auto& p : problems) msg += "\n  " + p;
  throw ValidationError(msg);
}

std::string Echo(const RunConfig& cfg, const std::string& command, const json& extra = {}) {
  json doc = json::parse(RunConfigToJson(cfg));
  doc["command"] = command;
  if (extra.is_object()) {
    for (const auto& [k, v] : extra.items()) doc[k] = v;
  }
  return doc.dump();
}

// ---- gen-corpus -----------------------------------------------------------

struct GenArgs {
  std::string out;
  std::optional<int> count;
  std::optional<std::string> size;
  std::optional<std::uint64_t> seed;
  std::optional<int> elements;
  bool force = false;
};

int RunGenCorpus(const Common& common, const GenArgs& a) {
  RunConfig cfg = BaseConfig(common);
  std::vector<std::string> problems;
  if (a.count) cfg.corpus.count = *a.count;
  if (a.seed) cfg.corpus.seed = *a.seed;
  if (a.elements) cfg.corpus.spec.element_count = *a.elements;
  if (a.size) {
    try {
      const auto [w, h] = ParseSize(*a.size);
      cfg.corpus.spec.width = w;
      cfg.corpus.spec.height = h;
    } catch (const ValidationError& e) {
      problems.push_back(std::string("--size: ") + e.what());
    }
  }
  if (cfg.corpus.count < 1) problems.push_back("--count must be >= 1");
  if (cfg.corpus.spec.width < 64 || cfg.corpus.spec.height < 64) {
    problems.push_back("--size must be at least 64x64");
  }
  if (cfg.corpus.spec.element_count < 0) problems.push_back("--elements must be >= 0");
  ThrowIfProblems(problems);
  const auto corpus = imaging::GenerateCorpus(cfg.corpus.spec, cfg.corpus.count,
                                              cfg.corpus.seed, common.threads);
  imaging::WriteCorpus(corpus, cfg.corpus.spec, cfg.corpus.seed, a.out, a.force);
  std::cout << "wrote " << corpus.size() << " images to " << a.out << "\n";
  return kExitOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string pool;
  std::string log;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::string> loss;
  std::optional<int> epochs;
  std::optional<int> steps;
  std::optional<int> top_k;
  std::optional<double> lr;
  bool timing = false;
};

int RunTrain(const Common& common, const TrainArgs& a) {
  RunConfig cfg = BaseConfig(common);
  training::TrainConfig& t = cfg.train;
  std::vector<std::string> problems;
  if (a.seed) t.seed = *a.seed;
  if (a.epochs) t.epochs = *a.epochs;
  if (a.steps) t.steps_per_epoch = *a.steps;
  if (a.top_k) t.top_k = *a.top_k;
  if (a.lr) t.lr = *a.lr;
  if (a.loss) {
    if (*a.loss == "ap") {
      t.loss_kind = training::LossKind::kAP;
    } else if (*a.loss == "triplet") {
      t.loss_kind = training::LossKind::kTriplet;
    } else {
      problems.push_back("--loss must be ap or triplet");
    }
  }
  try {
    t.strategy = mining::MiningStrategy::Parse(a.strategy.value_or(t.strategy.name()),
                                               static_cast<std::size_t>(std::max(t.top_k, 1)));
  } catch (const ValidationError& e) {
    problems.push_back(std::string("train.strategy: ") + e.what());
  }
  t.threads = common.threads;
  const bool c2f = t.strategy.kind == mining::MiningStrategy::Kind::kCoarseToFineTopK;
  if (c2f && a.pool.empty()) {
    problems.push_back("train.strategy: coarse_to_fine requires --pool");
  }
  if (!c2f && !a.pool.empty()) {
    problems.push_back("--pool: only valid with strategy coarse_to_fine");
  }
  for (const auto& p : ValidateRunConfig(cfg)) problems.push_back(p);
  ThrowIfProblems(problems);

  const imaging::Corpus corpus = imaging::LoadCorpus(a.corpus);
  std::optional<training::PoolImages> pool;
  if (c2f) pool = training::PreparePool(imaging::LoadCorpus(a.pool), t);

  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw Error("cannot write log " + log_path);
  auto on_epoch = [&](const training::EpochStats& s) {
    json line = {{"epoch", s.epoch}, {"mean_loss", s.mean_loss}, {"mean_neg_sim", s.mean_neg_sim}};
    if (a.timing) line["seconds"] = s.seconds;
    const std::string text = line.dump();
    log << text << '\n' << std::flush;
    std::cout << text << '\n' << std::flush;
  };
  const auto result = training::Train(corpus, t, pool ? &*pool : nullptr, on_epoch);

  json ckpt = json::parse(descriptor::CheckpointToString(result.params));
  ckpt["config"] = json::parse(Echo(cfg, "train"));
  eval::WriteTextFile(a.out, ckpt.dump() + "\n");
  std::cout << "checkpoint written to " << a.out << "\n";
  return kExitOk;
}

// ---- eval-matching --------------------------------------------------------

struct MatchArgs {
  std::string ckpt;
  std::string corpus;
  std::string out = "matching";
  std::optional<int> pairs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> thresholds;
  bool oracle = false;
};

int RunEvalMatching(const Common& common, const MatchArgs& a) {
  RunConfig cfg = BaseConfig(common);
  EvalSettings& e = cfg.eval;
  std::vector<std::string> problems;
  if (a.pairs) e.pairs = *a.pairs;
  if (a.seed) e.seed = *a.seed;
  if (a.thresholds) {
    try {
      e.thresholds = ParseIntRange(*a.thresholds);
    } catch (const ValidationError& err) {
      problems.push_back(std::string("--thresholds: ") + err.what());
    }
  }
  if (!a.oracle && a.ckpt.empty()) problems.push_back("--ckpt is required unless --oracle is set");
  for (const auto& p : ValidateRunConfig(cfg)) problems.push_back(p);
  ThrowIfProblems(problems);

  std::optional<descriptor::ModelParams> params;
  if (!a.oracle) {
    params = descriptor::LoadCheckpoint(a.ckpt);
    if (!common.config_path.empty() && params->patch_side != cfg.train.patch_side) {
      throw ValidationError("checkpoint patch_side " + std::to_string(params->patch_side) +
                            " differs from config train.patch_side " +
                            std::to_string(cfg.train.patch_side));
    }
    cfg.train.patch_side = params->patch_side;
    cfg.train.hidden = params->hidden;
    cfg.train.dim = params->dim;
  }
  const imaging::Corpus corpus = imaging::LoadCorpus(a.corpus);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& img = corpus.images[i];
    if (img.width() < e.crop_size + 2 * cfg.train.patch_side ||
        img.height() < e.crop_size + 2 * cfg.train.patch_side) {
      throw ValidationError("corpus image " + std::to_string(corpus.ids[i]) +
                            " is too small for crop_size " + std::to_string(e.crop_size) +
                            " with patch_side " + std::to_string(cfg.train.patch_side));
    }
  }

  eval::EvalPairConfig pc;
  pc.crop_size = e.crop_size;
  pc.homography = cfg.train.homography;
  pc.augment = e.augment;
  pc.max_keypoints = e.max_keypoints;
  pc.nms_radius = e.nms_radius;
  pc.patch_side = cfg.train.patch_side;
  pc.reproject_keypoints = a.oracle;
  auto pairs = eval::MakeEvalPairs(corpus, pc, e.pairs, e.seed, common.threads);
  if (a.oracle) {
    eval::AssignOracleDescriptors(pairs, e.pixel_thresh);
  } else {
    eval::DescribeEvalPairs(*params, pairs, common.threads);
  }
  eval::MatchingConfig mc;
  mc.pixel_thresh = e.pixel_thresh;
  mc.thresholds = e.thresholds;
  mc.ransac = {e.ransac_threshold, e.ransac_iterations, e.ransac_confidence, e.seed};
  mc.threads = common.threads;
  const auto report = eval::ComputeMatchingMetrics(pairs, mc);

  const std::string name = a.oracle ? "oracle" : fs::path(a.ckpt).stem().string();
  const std::string echo = Echo(cfg, "eval-matching", {{"oracle", a.oracle}});
  eval::WriteTextFile(a.out + ".json", eval::MatchingReportToJson(report, echo));
  const std::string table = eval::RenderMatchingTable({{name, report}});
  eval::WriteTextFile(a.out + ".txt", table);
  std::cout << table;
  return kExitOk;
}

// ---- eval-retrieval -------------------------------------------------------

struct RetrievalArgs {
  std::string ckpt;
  std::string out = "retrieval";
  std::optional<int> scenes;
  std::optional<int> views;
  std::optional<std::uint64_t> seed;
  bool planted = false;
};

int RunEvalRetrieval(const Common& common, const RetrievalArgs& a) {
  RunConfig cfg = BaseConfig(common);
  EvalSettings& e = cfg.eval;
  std::vector<std::string> problems;
  if (a.scenes) e.scenes = *a.scenes;
  if (a.views) e.views = *a.views;
  if (a.seed) e.seed = *a.seed;
  if (!a.planted && a.ckpt.empty()) problems.push_back("--ckpt is required unless --planted is set");
  for (const auto& p : ValidateRunConfig(cfg)) problems.push_back(p);
  ThrowIfProblems(problems);

  std::vector<eval::RetrievalItem> items;
  if (a.planted) {
    eval::PlantedRetrievalConfig pc;
    pc.scenes = e.scenes;
    pc.views = e.views;
    items = eval::MakePlantedRetrievalSet(pc, e.seed);
  } else {
    const auto params = descriptor::LoadCheckpoint(a.ckpt);
    cfg.train.patch_side = params.patch_side;
    cfg.train.hidden = params.hidden;
    cfg.train.dim = params.dim;
    eval::SceneRetrievalConfig sc;
    sc.scenes = e.scenes;
    sc.views = e.views;
    sc.crop_size = e.crop_size;
    sc.spec = {e.crop_size + e.crop_size / 2, e.crop_size + e.crop_size / 2,
               cfg.corpus.spec.element_count};
    sc.homography = cfg.train.homography;
    sc.augment = e.augment;
    sc.max_keypoints = e.max_keypoints;
    sc.nms_radius = e.nms_radius;
    sc.aggregation = cfg.train.aggregation;
    sc.threads = common.threads;
    items = eval::MakeSceneRetrievalSet(params, sc, e.seed);
  }
  eval::RetrievalConfig rc;
  rc.rerank_depth = e.rerank_depth;
  rc.ransac = {e.ransac_threshold, e.ransac_iterations, e.ransac_confidence, e.seed};
  rc.threads = common.threads;
  const auto result = eval::EvaluateRetrieval(items, rc);

  const std::string echo = Echo(cfg, "eval-retrieval", {{"planted", a.planted}});
  eval::WriteTextFile(a.out + ".json", eval::RetrievalEvaluationToJson(result, echo));
  const std::string table =
      eval::RenderRetrievalTable({{"global", result.before}, {"global+rerank", result.after}});
  eval::WriteTextFile(a.out + ".txt", table);
  std::cout << table;
  return kExitOk;
}

template <typename T>
void AddOptional(CLI::App* app, const std::string& name, std::optional<T>& dst,
                 const std::string& help) {
  app->add_option_function<T>(name, [&dst](const T& v) { dst = v; }, help);
}

}  // namespace

int Main(int argc, char** argv) {
  CLI::App app{"hardneg: descriptor learning with hard-negative mining"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON run configuration (version 1)");
    sub->add_option("--threads", common.threads, "worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  };

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic image corpus");
  add_common(gen_cmd);
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  AddOptional(gen_cmd, "--count", gen.count, "number of images [64]");
  AddOptional(gen_cmd, "--size", gen.size, "image size WxH [256x256]");
  AddOptional(gen_cmd, "--seed", gen.seed, "corpus seed [0]");
  AddOptional(gen_cmd, "--elements", gen.elements, "scene elements per image [12]");
  gen_cmd->add_flag("--force", gen.force, "overwrite a non-empty output directory");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the patch descriptor");
  add_common(train_cmd);
  train_cmd->add_option("--corpus", tr.corpus, "training corpus directory")->required();
  train_cmd->add_option("--out", tr.out, "checkpoint path")->required();
  train_cmd->add_option("--pool", tr.pool, "negative pool directory (coarse_to_fine only)");
  train_cmd->add_option("--log", tr.log, "epoch log path [<out>.log]");
  AddOptional(train_cmd, "--seed", tr.seed, "training seed [0]");
  AddOptional(train_cmd, "--strategy", tr.strategy,
              "in_pair | in_batch_all | in_batch_random | in_batch_topk | coarse_to_fine "
              "[in_batch_topk]");
  AddOptional(train_cmd, "--loss", tr.loss, "ap | triplet [ap]");
  AddOptional(train_cmd, "--epochs", tr.epochs, "epochs [5]");
  AddOptional(train_cmd, "--steps", tr.steps, "steps per epoch [50]");
  AddOptional(train_cmd, "--top-k", tr.top_k, "negatives kept per anchor [30]");
  AddOptional(train_cmd, "--lr", tr.lr, "Adam learning rate [0.001]");
  train_cmd->add_flag("--timing", tr.timing, "add wall-clock seconds to log lines");

  MatchArgs ma;
  auto* match_cmd = app.add_subcommand("eval-matching", "matching accuracy on held-out pairs");
  add_common(match_cmd);
  match_cmd->add_option("--ckpt", ma.ckpt, "checkpoint path");
  match_cmd->add_option("--corpus", ma.corpus, "corpus directory")->required();
  match_cmd->add_option("--out", ma.out, "report path prefix (.json and .txt)")
      ->capture_default_str();
  AddOptional(match_cmd, "--pairs", ma.pairs, "evaluation pairs [20]");
  AddOptional(match_cmd, "--seed", ma.seed, "evaluation seed [0]");
  AddOptional(match_cmd, "--thresholds", ma.thresholds, "inclusive pixel range a..b [1..10]");
  match_cmd->add_flag("--oracle", ma.oracle, "use ground-truth one-hot descriptors");

  RetrievalArgs ra;
  auto* ret_cmd = app.add_subcommand("eval-retrieval", "retrieval with inlier re-ranking");
  add_common(ret_cmd);
  ret_cmd->add_option("--ckpt", ra.ckpt, "checkpoint path");
  ret_cmd->add_option("--out", ra.out, "report path prefix (.json and .txt)")
      ->capture_default_str();
  AddOptional(ret_cmd, "--scenes", ra.scenes, "scene groups [4]");
  AddOptional(ret_cmd, "--views", ra.views, "views per scene, >= 2 [3]");
  AddOptional(ret_cmd, "--seed", ra.seed, "evaluation seed [0]");
  ret_cmd->add_flag("--planted", ra.planted,
                    "use the planted-inlier synthetic set instead of rendered scenes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (gen_cmd->parsed()) return RunGenCorpus(common, gen);
    if (train_cmd->parsed()) return RunTrain(common, tr);
    if (match_cmd->parsed()) return RunEvalMatching(common, ma);
    if (ret_cmd->parsed()) return RunEvalRetrieval(common, ra);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}

}  // namespace hardneg::cli

int main(int argc, char** argv) { return hardneg::cli::Main(argc, argv); }
