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

#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "hardneg/error.hpp"
#include "json.hpp"

namespace hardneg::cli {
namespace {

using nlohmann::json;

// Reads typed fields from one JSON object, recording every problem instead of
// stopping at the first.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (obj_ != nullptr && !obj_->is_object()) {
      problems_.push_back(path_ + ": must be an object");
      obj_ = nullptr;
    }
  }

  ~Section() {
    if (obj_ == nullptr) return;
    for (const auto& [k, v] : obj_->items()) {
      if (!seen_.contains(k)) problems_.push_back(Name(k) + ": unknown key");
    }
  }

  const json* Child(const std::string& key) {
    seen_.insert(key);
    if (obj_ == nullptr || !obj_->contains(key)) return nullptr;
    return &obj_->at(key);
  }

  void Get(const std::string& key, int& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) return Bad(key, "integer");
    const auto x = v->get<std::int64_t>();
    if (x < INT32_MIN || x > INT32_MAX) return Bad(key, "32-bit integer");
    dst = static_cast<int>(x);
  }
  void Get(const std::string& key, std::uint64_t& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_number_unsigned()) return Bad(key, "non-negative integer");
    dst = v->get<std::uint64_t>();
  }
  void Get(const std::string& key, double& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_number()) return Bad(key, "number");
    dst = v->get<double>();
  }
  void Get(const std::string& key, bool& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) return Bad(key, "boolean");
    dst = v->get<bool>();
  }
  void Get(const std::string& key, std::string& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_string()) return Bad(key, "string");
    dst = v->get<std::string>();
  }
  void Get(const std::string& key, std::vector<int>& dst) {
    const json* v = Child(key);
    if (v == nullptr) return;
    if (!v->is_array()) return Bad(key, "array of integers");
    std::vector<int> out;
    for (const auto& e : *v) {
      if (!e.is_number_integer()) return Bad(key, "array of integers");
      out.push_back(e.get<int>());
    }
    dst = std::move(out);
  }

  std::string Name(const std::string& key) const { return path_ + "." + key; }
  void Problem(const std::string& key, const std::string& msg) {
    problems_.push_back(Name(key) + ": " + msg);
  }

 private:
  void Bad(const std::string& key, const char* type) {
    problems_.push_back(Name(key) + ": expected " + type);
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> seen_;
};

std::string LossName(training::LossKind k) {
  return k == training::LossKind::kAP ? "ap" : "triplet";
}

std::string AggregationName(mining::Aggregation a) {
  return a == mining::Aggregation::kSum ? "sum" : "gem";
}

void ReadHomography(Section& parent, geometry::HomographyConfig& h,
                    std::vector<std::string>& problems) {
  Section s(parent.Child("homography"), parent.Name("homography"), problems);
  s.Get("max_translation_frac", h.max_translation_frac);
  s.Get("max_rotation_deg", h.max_rotation_deg);
  s.Get("scale_lo", h.scale_lo);
  s.Get("scale_hi", h.scale_hi);
  s.Get("perspective_amplitude", h.perspective_amplitude);
}

void ReadTrain(const json* node, training::TrainConfig& t, std::vector<std::string>& problems) {
  Section s(node, "train", problems);
  s.Get("pairs_per_batch", t.pairs_per_batch);
  s.Get("keypoints_per_crop", t.keypoints_per_crop);
  s.Get("top_k", t.top_k);
  std::string strategy = t.strategy.name();
  s.Get("strategy", strategy);
  std::string loss = LossName(t.loss_kind);
  s.Get("loss", loss);
  s.Get("lr", t.lr);
  s.Get("adam_beta1", t.adam_beta1);
  s.Get("adam_beta2", t.adam_beta2);
  s.Get("adam_eps", t.adam_eps);
  s.Get("epochs", t.epochs);
  s.Get("steps_per_epoch", t.steps_per_epoch);
  s.Get("crop_size", t.crop_size);
  s.Get("seed", t.seed);
  s.Get("patch_side", t.patch_side);
  s.Get("hidden", t.hidden);
  s.Get("dim", t.dim);
  s.Get("ap_bins", t.ap_bins);
  s.Get("triplet_margin", t.triplet_margin);
  s.Get("augment", t.augment);
  s.Get("detect_keypoints", t.detect_keypoints);
  s.Get("nms_radius", t.nms_radius);
  s.Get("pool_refresh_epochs", t.pool_refresh_epochs);
  s.Get("pool_keypoints", t.pool_keypoints);
  s.Get("retrieve_top_r", t.retrieve_top_r);
  std::string aggregation = AggregationName(t.aggregation);
  s.Get("aggregation", aggregation);
  ReadHomography(s, t.homography, problems);

  try {
    t.strategy = mining::MiningStrategy::Parse(strategy, static_cast<std::size_t>(
                                                             std::max(t.top_k, 1)));
  } catch (const ValidationError& e) {
    s.Problem("strategy", e.what());
  }
  if (loss == "ap") {
    t.loss_kind = training::LossKind::kAP;
  } else if (loss == "triplet") {
    t.loss_kind = training::LossKind::kTriplet;
  } else {
    s.Problem("loss", "must be \"ap\" or \"triplet\"");
  }
  if (aggregation == "sum") {
    t.aggregation = mining::Aggregation::kSum;
  } else if (aggregation == "gem") {
    t.aggregation = mining::Aggregation::kGeM;
  } else {
    s.Problem("aggregation", "must be \"sum\" or \"gem\"");
  }
}

}  // namespace

RunConfig ParseRunConfig(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig cfg;
  std::vector<std::string> problems;
  {
    Section root(&doc, "config", problems);
    if (doc.is_object()) {
      const json* version = root.Child("version");
      if (version == nullptr) {
        problems.push_back("config.version: missing");
      } else if (!version->is_number_integer() || version->get<std::int64_t>() != 1) {
        problems.push_back("config.version: must equal 1");
      }
    }
    {
      Section c(doc.is_object() ? root.Child("corpus") : nullptr, "corpus", problems);
      c.Get("count", cfg.corpus.count);
      c.Get("width", cfg.corpus.spec.width);
      c.Get("height", cfg.corpus.spec.height);
      c.Get("elements", cfg.corpus.spec.element_count);
      c.Get("seed", cfg.corpus.seed);
    }
    ReadTrain(doc.is_object() ? root.Child("train") : nullptr, cfg.train, problems);
    {
      Section e(doc.is_object() ? root.Child("eval") : nullptr, "eval", problems);
      EvalSettings& ev = cfg.eval;
      e.Get("pairs", ev.pairs);
      e.Get("seed", ev.seed);
      e.Get("crop_size", ev.crop_size);
      e.Get("max_keypoints", ev.max_keypoints);
      e.Get("nms_radius", ev.nms_radius);
      e.Get("augment", ev.augment);
      e.Get("pixel_thresh", ev.pixel_thresh);
      e.Get("thresholds", ev.thresholds);
      e.Get("ransac_threshold", ev.ransac_threshold);
      e.Get("ransac_iterations", ev.ransac_iterations);
      e.Get("ransac_confidence", ev.ransac_confidence);
      e.Get("scenes", ev.scenes);
      e.Get("views", ev.views);
      e.Get("rerank_depth", ev.rerank_depth);
    }
  }
  for (auto& p : ValidateRunConfig(cfg)) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg = "invalid config (" + std::to_string(problems.size()) + " problems):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
  }
  return cfg;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseRunConfig(ss.str());
}

std::vector<std::string> ValidateRunConfig(const RunConfig& cfg) {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };
  need(cfg.corpus.count >= 1, "corpus.count must be >= 1");
  need(cfg.corpus.spec.width >= 64 && cfg.corpus.spec.height >= 64,
       "corpus.width and corpus.height must be >= 64");
  need(cfg.corpus.spec.element_count >= 0, "corpus.elements must be >= 0");
  for (const auto& p : cfg.train.Validate()) problems.push_back("train." + p);
  const EvalSettings& e = cfg.eval;
  need(e.pairs >= 1, "eval.pairs must be >= 1");
  need(e.crop_size >= 32, "eval.crop_size must be >= 32");
  need(e.max_keypoints >= 1, "eval.max_keypoints must be >= 1");
  need(e.nms_radius >= 1, "eval.nms_radius must be >= 1");
  need(e.pixel_thresh > 0.0, "eval.pixel_thresh must be > 0");
  need(!e.thresholds.empty(), "eval.thresholds must not be empty");
  for (int t : e.thresholds) need(t >= 1, "eval.thresholds entries must be >= 1");
  need(e.ransac_threshold > 0.0, "eval.ransac_threshold must be > 0");
  need(e.ransac_iterations >= 1, "eval.ransac_iterations must be >= 1");
  need(e.ransac_confidence > 0.0 && e.ransac_confidence < 1.0,
       "eval.ransac_confidence must lie in (0, 1)");
  need(e.scenes >= 1, "eval.scenes must be >= 1");
  need(e.views >= 2, "eval.views must be >= 2");
  need(e.rerank_depth >= 1, "eval.rerank_depth must be >= 1");
  return problems;
}

std::string RunConfigToJson(const RunConfig& cfg) {
  const auto& t = cfg.train;
  const auto& h = t.homography;
  const auto& e = cfg.eval;
  json doc = {
      {"version", 1},
      {"corpus",
       {{"count", cfg.corpus.count},
        {"width", cfg.corpus.spec.width},
        {"height", cfg.corpus.spec.height},
        {"elements", cfg.corpus.spec.element_count},
        {"seed", cfg.corpus.seed}}},
      {"train",
       {{"pairs_per_batch", t.pairs_per_batch},
        {"keypoints_per_crop", t.keypoints_per_crop},
        {"top_k", t.top_k},
        {"strategy", t.strategy.name()},
        {"loss", LossName(t.loss_kind)},
        {"lr", t.lr},
        {"adam_beta1", t.adam_beta1},
        {"adam_beta2", t.adam_beta2},
        {"adam_eps", t.adam_eps},
        {"epochs", t.epochs},
        {"steps_per_epoch", t.steps_per_epoch},
        {"crop_size", t.crop_size},
        {"seed", t.seed},
        {"patch_side", t.patch_side},
        {"hidden", t.hidden},
        {"dim", t.dim},
        {"ap_bins", t.ap_bins},
        {"triplet_margin", t.triplet_margin},
        {"augment", t.augment},
        {"detect_keypoints", t.detect_keypoints},
        {"nms_radius", t.nms_radius},
        {"pool_refresh_epochs", t.pool_refresh_epochs},
        {"pool_keypoints", t.pool_keypoints},
        {"retrieve_top_r", t.retrieve_top_r},
        {"aggregation", AggregationName(t.aggregation)},
        {"homography",
         {{"max_translation_frac", h.max_translation_frac},
          {"max_rotation_deg", h.max_rotation_deg},
          {"scale_lo", h.scale_lo},
          {"scale_hi", h.scale_hi},
          {"perspective_amplitude", h.perspective_amplitude}}}}},
      {"eval",
       {{"pairs", e.pairs},
        {"seed", e.seed},
        {"crop_size", e.crop_size},
        {"max_keypoints", e.max_keypoints},
        {"nms_radius", e.nms_radius},
        {"augment", e.augment},
        {"pixel_thresh", e.pixel_thresh},
        {"thresholds", e.thresholds},
        {"ransac_threshold", e.ransac_threshold},
        {"ransac_iterations", e.ransac_iterations},
        {"ransac_confidence", e.ransac_confidence},
        {"scenes", e.scenes},
        {"views", e.views},
        {"rerank_depth", e.rerank_depth}}}};
  return doc.dump();
}

std::vector<int> ParseIntRange(const std::string& text) {
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ValidationError("bad integer range '" + text + "'");
    }
    return v;
  };
  const std::string_view sv(text);
  const auto dots = sv.find("..");
  int lo, hi;
  if (dots == std::string_view::npos) {
    lo = hi = parse_int(sv);
  } else {
    lo = parse_int(sv.substr(0, dots));
    hi = parse_int(sv.substr(dots + 2));
  }
  if (lo < 1) throw ValidationError("range '" + text + "' must start at 1 or above");
  if (lo > hi) throw ValidationError("empty integer range '" + text + "'");
  std::vector<int> out;
  for (int v = lo; v <= hi; ++v) out.push_back(v);
  return out;
}

std::pair<int, int> ParseSize(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw ValidationError("size must be WxH, got '" + text + "'");
  int w = 0, h = 0;
  const char* b = text.data();
  const auto r1 = std::from_chars(b, b + x, w);
  const auto r2 = std::from_chars(b + x + 1, b + text.size(), h);
  if (r1.ec != std::errc() || r1.ptr != b + x || r2.ec != std::errc() ||
      r2.ptr != b + text.size() || x == 0) {
    throw ValidationError("size must be WxH, got '" + text + "'");
  }
  if (w < 1 || h < 1) throw ValidationError("size must be positive, got '" + text + "'");
  return {w, h};
}

}  // namespace hardneg::cli
