// Copyright 2026 The bearing-dx Authors
// SPDX-License-Identifier: Apache-2.0
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

#include "bdx/experiments/plan.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "bdx/error.hpp"

namespace bdx::experiments {

namespace {

[[noreturn]] void plan_error(const std::string& id, const std::string& what) {
  throw Error(ErrorCode::PlanError, "plan '" + id + "': " + what, {{"plan", id}});
}

const std::pair<PlanKind, std::string_view> kKinds[] = {
    {PlanKind::Single, "single"},
    {PlanKind::CrossCondition, "cross_condition"},
    {PlanKind::CrossDatasetFull, "cross_dataset_full"},
    {PlanKind::CrossDatasetLimited, "cross_dataset_limited"},
    {PlanKind::Sweep, "sweep"},
};

std::string scalar_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<std::string> string_list(const nlohmann::json& v) {
  std::vector<std::string> out;
  if (!v.is_array()) {
    out.push_back(scalar_text(v));
    return out;
  }
  for (const auto& e : v) out.push_back(scalar_text(e));
  return out;
}

}  // namespace

std::string_view to_string(PlanKind kind) {
  for (const auto& [k, name] : kKinds) {
    if (k == kind) return name;
  }
  return "single";
}

std::vector<GridCell> table8_grid() {
  return {{256, 8}, {128, 64}, {128, 32}, {128, 16}, {128, 8}, {128, 4},
          {64, 32}, {64, 16},  {64, 8},   {64, 4},   {32, 16}, {32, 8},
          {32, 4},  {16, 8},   {16, 4},   {8, 4}};
}

void ExperimentPlan::validate() const {
  if (trials == 0) plan_error(id, "trials must be at least 1");
  try {
    segmentation.validate();
    model.validate();
  } catch (const Error& e) {
    plan_error(id, e.what());
  }
  if (model.window_len != segmentation.window_len) {
    plan_error(id, "model.window_len must equal segmentation.window_len");
  }
  if (train.epochs == 0 || train.batch_size == 0 || !(train.lr > 0.0)) {
    plan_error(id, "train.epochs, train.batch_size and train.lr must be positive");
  }
  switch (kind) {
    case PlanKind::Single:
      if (dataset.empty()) plan_error(id, "single plans need a dataset");
      break;
    case PlanKind::Sweep: {
      if (dataset.empty()) plan_error(id, "sweep plans need a dataset");
      for (const auto& [patch, stride] : grid.empty() ? table8_grid() : grid) {
        auto cfg = model;
        cfg.patch_len = patch;
        cfg.stride = stride;
        try {
          cfg.validate();
        } catch (const Error& e) {
          plan_error(id, "grid cell (" + std::to_string(patch) + ", " +
                             std::to_string(stride) + "): " + e.what());
        }
      }
      break;
    }
    case PlanKind::CrossCondition: {
      if (dataset.empty()) plan_error(id, "cross_condition plans need a dataset");
      if (train_conditions.empty() || test_conditions.empty()) {
        plan_error(id, "cross_condition plans need train and test conditions");
      }
      for (const auto& c : test_conditions) {
        if (std::find(train_conditions.begin(), train_conditions.end(), c) !=
            train_conditions.end()) {
          plan_error(id, "condition " + c + " is both a train and a test condition");
        }
      }
      break;
    }
    case PlanKind::CrossDatasetFull:
    case PlanKind::CrossDatasetLimited: {
      if (sources.size() < 2) plan_error(id, "cross-dataset plans need at least two sources");
      if (target.empty()) plan_error(id, "cross-dataset plans need a target");
      if (std::find(sources.begin(), sources.end(), target) != sources.end()) {
        plan_error(id, "target dataset " + target + " is also a source");
      }
      const std::set<std::string> uniq(sources.begin(), sources.end());
      if (uniq.size() != sources.size()) plan_error(id, "duplicate source dataset");
      if (kind == PlanKind::CrossDatasetLimited &&
          (!(limited_fraction > 0.0) || limited_fraction > 1.0)) {
        plan_error(id, "limited_fraction must lie in (0, 1]");
      }
      break;
    }
  }
}

nlohmann::ordered_json to_json(const ExperimentPlan& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["kind"] = std::string(to_string(p.kind));
  switch (p.kind) {
    case PlanKind::Single:
      j["dataset"] = p.dataset;
      break;
    case PlanKind::Sweep:
      j["dataset"] = p.dataset;
      j["grid"] = nlohmann::ordered_json::array();
      for (const auto& [patch, stride] : p.grid.empty() ? table8_grid() : p.grid) {
        j["grid"].push_back({patch, stride});
      }
      break;
    case PlanKind::CrossCondition:
      j["dataset"] = p.dataset;
      j["train_conditions"] = p.train_conditions;
      j["test_conditions"] = p.test_conditions;
      break;
    case PlanKind::CrossDatasetLimited:
      j["limited_fraction"] = p.limited_fraction;
      [[fallthrough]];
    case PlanKind::CrossDatasetFull:
      j["sources"] = p.sources;
      j["target"] = p.target;
      break;
  }
  j["trials"] = p.trials;
  j["seed"] = p.seed;
  j["balance"] = p.balance;
  j["segmentation"] = {{"window_len", p.segmentation.window_len},
                       {"step", p.segmentation.step}};
  j["model"] = model::to_json(p.model);
  j["train"] = {{"lr", p.train.lr},
                {"epochs", p.train.epochs},
                {"batch_size", p.train.batch_size},
                {"stop_at_perfect_val", p.train.stop_at_perfect_val}};
  j["emit_corpus"] = p.emit_corpus;
  if (!p.template_path.empty()) j["template"] = p.template_path;
  return j;
}

ExperimentPlan plan_from_json(const nlohmann::json& j, ExperimentPlan base) {
  static const std::set<std::string> kKnown = {
      "id",     "kind",     "dataset",  "train_conditions", "test_conditions",
      "sources", "target",  "limited_fraction", "trials",   "seed",
      "balance", "segmentation", "model", "train",          "grid",
      "emit_corpus", "template", "datasets"};
  ExperimentPlan p = std::move(base);
  const std::string id = j.contains("id") && j.at("id").is_string()
                             ? j.at("id").get<std::string>()
                             : p.id;
  if (!j.is_object()) plan_error(id, "plan must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!kKnown.count(k)) plan_error(id, "unknown key '" + k + "'");
  }
  try {
    p.id = id;
    if (j.contains("kind")) {
      const auto s = j.at("kind").get<std::string>();
      auto it = std::find_if(std::begin(kKinds), std::end(kKinds),
                             [&](const auto& kv) { return kv.second == s; });
      if (it == std::end(kKinds)) plan_error(id, "unknown kind '" + s + "'");
      p.kind = it->first;
    }
    if (j.contains("dataset")) p.dataset = j.at("dataset").get<std::string>();
    if (j.contains("train_conditions")) p.train_conditions = string_list(j.at("train_conditions"));
    if (j.contains("test_conditions")) p.test_conditions = string_list(j.at("test_conditions"));
    if (j.contains("sources")) p.sources = string_list(j.at("sources"));
    if (j.contains("target")) p.target = j.at("target").get<std::string>();
    if (j.contains("limited_fraction")) p.limited_fraction = j.at("limited_fraction").get<double>();
    if (j.contains("trials")) p.trials = j.at("trials").get<std::size_t>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("balance")) p.balance = j.at("balance").get<bool>();
    if (j.contains("emit_corpus")) p.emit_corpus = j.at("emit_corpus").get<bool>();
    if (j.contains("template")) p.template_path = j.at("template").get<std::string>();
    if (j.contains("segmentation")) {
      const auto& s = j.at("segmentation");
      for (const auto& [k, v] : s.items()) {
        if (k != "window_len" && k != "step") plan_error(id, "unknown segmentation key '" + k + "'");
      }
      if (s.contains("window_len")) p.segmentation.window_len = s.at("window_len").get<std::size_t>();
      if (s.contains("step")) p.segmentation.step = s.at("step").get<std::size_t>();
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      for (const auto& [k, v] : t.items()) {
        if (k != "lr" && k != "epochs" && k != "batch_size" && k != "stop_at_perfect_val") {
          plan_error(id, "unknown train key '" + k + "'");
        }
      }
      if (t.contains("lr")) p.train.lr = t.at("lr").get<double>();
      if (t.contains("epochs")) p.train.epochs = t.at("epochs").get<std::size_t>();
      if (t.contains("batch_size")) p.train.batch_size = t.at("batch_size").get<std::size_t>();
      if (t.contains("stop_at_perfect_val")) {
        p.train.stop_at_perfect_val = t.at("stop_at_perfect_val").get<bool>();
      }
    }
    nlohmann::json mj = model::to_json(p.model);
    mj["window_len"] = p.segmentation.window_len;
    if (j.contains("model")) mj.merge_patch(j.at("model"));
    try {
      p.model = model::model_config_from_json(mj);
    } catch (const Error& e) {
      plan_error(id, e.what());
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.is_string()) {
        if (g.get<std::string>() != "table8") plan_error(id, "grid must be \"table8\" or a list");
        p.grid = table8_grid();
      } else {
        p.grid.clear();
        for (const auto& cell : g) {
          p.grid.emplace_back(cell.at(0).get<std::size_t>(), cell.at(1).get<std::size_t>());
        }
      }
    }
    if (j.contains("datasets")) {
      for (const auto& [k, v] : j.at("datasets").items()) p.datasets[k] = v.get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    plan_error(id, e.what());
  }
  return p;
}

std::vector<ExperimentPlan> load_plan_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::PlanError, "cannot open plan file", {{"path", path.string()}});
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::PlanError, std::string("plan file is not valid JSON: ") + e.what(),
                {{"path", path.string()}});
  }
  ExperimentPlan defaults;
  defaults.id = path.stem().string();
  std::vector<nlohmann::json> items;
  if (j.is_object() && j.contains("plans")) {
    for (const auto& [k, v] : j.items()) {
      if (k != "defaults" && k != "plans") {
        throw Error(ErrorCode::PlanError, "unknown plan file key '" + k + "'",
                    {{"path", path.string()}});
      }
    }
    if (j.contains("defaults")) {
      auto d = j.at("defaults");
      d.erase("id");
      defaults = plan_from_json(d, defaults);
    }
    for (const auto& p : j.at("plans")) items.push_back(p);
  } else {
    items.push_back(j);
  }
  std::vector<ExperimentPlan> plans;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < items.size(); ++i) {
    auto base = defaults;
    base.id = defaults.id + "-" + std::to_string(i);
    auto p = plan_from_json(items[i], base);
    for (auto& [name, manifest] : p.datasets) {
      std::filesystem::path mp = manifest;
      if (mp.is_relative()) manifest = (path.parent_path() / mp).lexically_normal().string();
    }
    if (!ids.insert(p.id).second) plan_error(p.id, "duplicate plan id");
    p.validate();
    plans.push_back(std::move(p));
  }
  return plans;
}

}  // namespace bdx::experiments
