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
#include <span>
#include <string>

#include <json.hpp>

#include "bdx/experiments/protocols.hpp"
#include "bdx/model/classifier.hpp"

namespace bdx::experiments {

// Wall-time fields are omitted when include_wall_time is false.
nlohmann::ordered_json report_to_json(const ExperimentReport& report,
                                      bool include_wall_time = true);

// Hash of the report with wall-time fields removed.
std::string determinism_hash(const ExperimentReport& report);

void write_report_json(std::span<const ExperimentReport> reports,
                       const std::filesystem::path& path);
// Flat rows: plan_id,trial,epoch,metric,value. Returns rows written.
std::size_t write_report_csv(std::span<const ExperimentReport> reports,
                             const std::filesystem::path& path);

// Human-readable table of a report for terminal output.
std::string summary_table(const ExperimentReport& report);

// Pooled (pre-head) vectors, one row per segment:
// e0..e{d-1},label,dataset_id,condition_id,signal_id,start.
std::size_t export_embeddings(const model::Classifier<float>& model,
                              std::span<const Segment> segments,
                              const std::filesystem::path& path);

}  // namespace bdx::experiments
