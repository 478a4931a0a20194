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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdx/experiments/metrics.hpp"
#include "bdx/experiments/plan.hpp"
#include "bdx/ingest.hpp"
#include "bdx/model/classifier.hpp"
#include "bdx/model/trainer.hpp"
#include "bdx/textgen.hpp"

namespace bdx::experiments {

// Loaded datasets by id.
using Catalog = std::map<std::string, ingest::LoadedDataset>;

struct PhaseLog {
  std::string phase;  // train | phase1 | phase2 | baseline
  std::vector<model::EpochLog> log;
  std::size_t best_epoch = 0;
};

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<PhaseLog> phases;
  double test_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::optional<double> baseline_accuracy;
  std::optional<ConfusionMatrix> baseline_confusion;
  // Limited-data arms: membership of the target subsample each arm consumed.
  std::string transfer_subset_hash;
  std::string baseline_subset_hash;
  std::size_t subset_size = 0;
  double wall_time_s = 0.0;
};

struct SweepCell {
  GridCell cell;
  bool chosen = false;
  std::vector<double> accuracies;
  Summary accuracy;
  double wall_time_s = 0.0;
};

struct CorpusInfo {
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  std::size_t train_lines = 0;
  std::size_t test_lines = 0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::vector<FaultLabel> label_space;
  std::map<std::string, std::size_t> split_sizes;
  std::size_t leakage = 0;
  std::vector<TrialResult> trials;
  Summary test;
  std::optional<Summary> baseline;
  std::optional<double> transfer_gain;  // mean(transfer) - mean(baseline)
  std::size_t best_trial = 0;
  std::vector<SweepCell> cells;
  std::optional<CorpusInfo> corpus;
  double wall_time_s = 0.0;
};

struct RunOptions {
  // Run independent trials concurrently; every trial is single-threaded.
  bool parallel_trials = true;
  // Destination of corpus files when plan.emit_corpus is set.
  std::filesystem::path corpus_dir = ".";
  // Progress lines; null for silence.
  std::ostream* log = nullptr;
  // Called with every trained model (transfer arm for cross-dataset runs),
  // possibly from several threads at once.
  std::function<void(const TrialResult&, const model::Classifier<float>&)> model_sink;
};

ExperimentReport run_single(const ExperimentPlan& plan, const Catalog& data,
                            const RunOptions& opts = {});
ExperimentReport run_cross_condition(const ExperimentPlan& plan, const Catalog& data,
                                     const RunOptions& opts = {});
ExperimentReport run_cross_dataset_full(const ExperimentPlan& plan, const Catalog& data,
                                        const RunOptions& opts = {});
ExperimentReport run_cross_dataset_limited(const ExperimentPlan& plan, const Catalog& data,
                                           const RunOptions& opts = {});
// One run_single per cell; an empty grid means table8_grid().
ExperimentReport sweep_patch_stride(std::vector<GridCell> grid, const ExperimentPlan& base,
                                    const Catalog& data, const RunOptions& opts = {});

// Dispatches on plan.kind.
ExperimentReport run_plan(const ExperimentPlan& plan, const Catalog& data,
                          const RunOptions& opts = {});

// Union of the label spaces of `ids`, canonical order.
std::vector<FaultLabel> union_label_space(const Catalog& data,
                                          const std::vector<std::string>& ids);

}  // namespace bdx::experiments
