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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace bdx::model {

struct LoraConfig {
  std::size_t rank = 8;
  double alpha = 16.0;
  bool target_query = true;
  bool target_value = true;
  double init_std = 0.02;

  double scale() const { return alpha / static_cast<double>(rank); }
};

enum class Pooling { Mean, Last };

struct ModelConfig {
  std::size_t patch_len = 128;
  std::size_t stride = 8;
  std::size_t d_model = 128;
  std::size_t n_heads = 4;
  std::size_t n_layers = 3;
  std::size_t ffn_mult = 4;
  std::size_t n_classes = 4;
  std::size_t window_len = 2048;
  std::uint64_t seed = 0;
  std::optional<LoraConfig> lora;
  bool quantize_base = false;
  Pooling pooling = Pooling::Mean;
  // GPT-2 style blocks attend causally.
  bool causal_attention = true;
  double ln_eps = 1e-5;
  double init_std = 0.02;
  // Optional class names, one per logit; travels with checkpoints.
  std::vector<std::string> labels;
  // Reserved for importing pretrained block weights; unused by this build.
  std::optional<std::string> external_blocks;

  std::size_t num_patches() const;
  std::size_t head_dim() const { return d_model / n_heads; }
  // Throws InvalidConfig.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace bdx::model
