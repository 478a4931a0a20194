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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bdx/model/config.hpp"
#include "bdx/model/trainer.hpp"
#include "bdx/signal.hpp"

namespace bdx::experiments {

enum class PlanKind { Single, CrossCondition, CrossDatasetFull, CrossDatasetLimited, Sweep };

std::string_view to_string(PlanKind kind);

using GridCell = std::pair<std::size_t, std::size_t>;  // (patch, stride)

// The 16 patch/stride cells of the reference sweep, in table order.
std::vector<GridCell> table8_grid();
inline constexpr GridCell kChosenCell{128, 8};

struct ExperimentPlan {
  std::string id;
  PlanKind kind = PlanKind::Single;
  // single, cross_condition, sweep
  std::string dataset;
  std::vector<std::string> train_conditions;
  std::vector<std::string> test_conditions;
  // cross_dataset_*
  std::vector<std::string> sources;
  std::string target;
  double limited_fraction = 0.10;

  std::size_t trials = 3;
  std::uint64_t seed = 0;
  bool balance = true;
  SegmentationConfig segmentation;
  model::ModelConfig model;
  model::TrainHyper train;
  std::vector<GridCell> grid;  // sweep only

  // Write a textgen corpus of the train/test splits instead of training.
  bool emit_corpus = false;
  std::string template_path;  // empty: built-in template

  // dataset id -> manifest path
  std::map<std::string, std::string> datasets;

  // Throws PlanError.
  void validate() const;
};

nlohmann::ordered_json to_json(const ExperimentPlan& plan);

// Applies the keys of `j` on top of `base`. Unknown keys throw PlanError.
ExperimentPlan plan_from_json(const nlohmann::json& j, ExperimentPlan base = {});

// Plan file: {"defaults": {...}, "plans": [{...}, ...]} or a single plan
// object. Relative manifest paths resolve against the file's directory.
std::vector<ExperimentPlan> load_plan_file(const std::filesystem::path& path);

}  // namespace bdx::experiments
