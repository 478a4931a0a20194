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

#include "bdx/model/config.hpp"

#include <set>
#include <string>

#include "bdx/error.hpp"
#include "bdx/model/layers.hpp"

namespace bdx::model {

std::size_t ModelConfig::num_patches() const {
  return model::num_patches(window_len, patch_len, stride);
}

void ModelConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, "model config: " + what);
  };
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    bad("d_model must be a positive multiple of n_heads");
  }
  if (d_model % 2 != 0) bad("d_model must be even for the position table");
  if (patch_len == 0 || patch_len > window_len) bad("need 0 < patch_len <= window_len");
  if (stride == 0) bad("stride must be >= 1");
  if (n_classes < 2) bad("n_classes must be >= 2");
  if (ffn_mult == 0) bad("ffn_mult must be >= 1");
  if (!labels.empty() && labels.size() != n_classes) bad("labels must name every class");
  if (!(ln_eps > 0.0)) bad("ln_eps must be positive");
  if (lora) {
    if (lora->rank == 0) bad("lora rank must be >= 1");
    if (lora->rank > d_model) {
      throw Error(ErrorCode::RankTooLarge, "lora rank exceeds projection dims",
                  {{"rank", std::to_string(lora->rank)},
                   {"d_model", std::to_string(d_model)}});
    }
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["patch_len"] = cfg.patch_len;
  j["stride"] = cfg.stride;
  j["d_model"] = cfg.d_model;
  j["n_heads"] = cfg.n_heads;
  j["n_layers"] = cfg.n_layers;
  j["ffn_mult"] = cfg.ffn_mult;
  j["n_classes"] = cfg.n_classes;
  j["window_len"] = cfg.window_len;
  j["seed"] = cfg.seed;
  if (cfg.lora) {
    j["lora"] = {{"rank", cfg.lora->rank},
                 {"alpha", cfg.lora->alpha},
                 {"target_query", cfg.lora->target_query},
                 {"target_value", cfg.lora->target_value},
                 {"init_std", cfg.lora->init_std}};
  } else {
    j["lora"] = nullptr;
  }
  j["quantize_base"] = cfg.quantize_base;
  j["pooling"] = cfg.pooling == Pooling::Mean ? "mean" : "last";
  j["causal_attention"] = cfg.causal_attention;
  j["ln_eps"] = cfg.ln_eps;
  j["init_std"] = cfg.init_std;
  j["labels"] = cfg.labels;
  j["external_blocks"] =
      cfg.external_blocks ? nlohmann::json(*cfg.external_blocks) : nlohmann::json();
  return nlohmann::json(j);
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> kKnown = {
      "patch_len", "stride",   "d_model",   "n_heads",         "n_layers",
      "ffn_mult",  "n_classes", "window_len", "seed",           "lora",
      "quantize_base", "pooling", "causal_attention", "ln_eps", "init_std",
      "labels", "external_blocks"};
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "model config must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!kKnown.count(k)) {
      throw Error(ErrorCode::InvalidConfig, "unknown model config key '" + k + "'",
                  {{"key", k}});
    }
  }
  ModelConfig c;
  try {
    auto get = [&](const char* key, auto& dst) {
      if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(dst);
    };
    get("patch_len", c.patch_len);
    get("stride", c.stride);
    get("d_model", c.d_model);
    get("n_heads", c.n_heads);
    get("n_layers", c.n_layers);
    get("ffn_mult", c.ffn_mult);
    get("n_classes", c.n_classes);
    get("window_len", c.window_len);
    get("seed", c.seed);
    get("quantize_base", c.quantize_base);
    get("causal_attention", c.causal_attention);
    get("ln_eps", c.ln_eps);
    get("init_std", c.init_std);
    get("labels", c.labels);
    if (j.contains("pooling")) {
      const auto s = j.at("pooling").get<std::string>();
      if (s == "mean") {
        c.pooling = Pooling::Mean;
      } else if (s == "last") {
        c.pooling = Pooling::Last;
      } else {
        throw Error(ErrorCode::InvalidConfig, "pooling must be mean or last");
      }
    }
    if (j.contains("lora") && !j.at("lora").is_null()) {
      const auto& l = j.at("lora");
      LoraConfig lc;
      if (l.contains("rank")) l.at("rank").get_to(lc.rank);
      if (l.contains("alpha")) l.at("alpha").get_to(lc.alpha);
      if (l.contains("target_query")) l.at("target_query").get_to(lc.target_query);
      if (l.contains("target_value")) l.at("target_value").get_to(lc.target_value);
      if (l.contains("init_std")) l.at("init_std").get_to(lc.init_std);
      c.lora = lc;
    }
    if (j.contains("external_blocks") && !j.at("external_blocks").is_null()) {
      c.external_blocks = j.at("external_blocks").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace bdx::model
