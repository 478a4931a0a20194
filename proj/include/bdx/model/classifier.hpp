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
#include <span>
#include <vector>

#include "bdx/model/config.hpp"
#include "bdx/model/layers.hpp"
#include "bdx/model/parameters.hpp"
#include "bdx/parallel.hpp"

namespace bdx::model {

// Frozen-transformer classifier over patched windows:
//   instance norm -> patchify -> value embedding + position table
//   -> n_layers pre-norm blocks (attention, GELU FFN, residuals)
//   -> final LayerNorm -> pooling -> linear head.
// Attention and FFN weights are frozen; embeddings, position table, every
// LayerNorm gain/shift, the head and any LoRA adapters are trainable.
template <typename T>
class Classifier {
 public:
  explicit Classifier(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParameterSet<T>& params() { return params_; }
  const ParameterSet<T>& params() const { return params_; }

  Vec<T> logits(std::span<const double> window) const;
  // Pooled representation fed to the head (d_model values).
  Vec<T> embedding(std::span<const double> window) const;

  // Forward + backward for one example. Adds scale * dL/dtheta into grads for
  // trainable parameters and returns the unscaled cross-entropy loss.
  T accumulate_gradients(std::span<const double> window, int label,
                         Gradients<T>& grads, T scale = T(1)) const;

  // Loss of a batch (mean cross-entropy) without gradients.
  T loss(std::span<const std::span<const double>> windows,
         std::span<const int> labels) const;

  // Adds adapters to the configured projections (B = 0, A ~ N(0, init_std)).
  void enable_lora(const LoraConfig& lora, std::uint64_t seed);
  bool has_lora() const { return cfg_.lora.has_value(); }
  // W <- W + (alpha / r) B A for every adapter, then drops the adapters.
  void merge_lora();

  // Replaces every frozen weight matrix by its int4 blockwise form; forward
  // passes use the dequantized values.
  void quantize_base();

  // Attention probabilities of one layer for a window (diagnostics/tests).
  std::vector<Mat<T>> attention_maps(std::span<const double> window,
                                     std::size_t layer) const;

  // Rebuilds internal parameter indices after params() was edited by name.
  void reindex();

 private:
  struct LayerIdx {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
    std::size_t qa = ParameterSet<T>::npos, qb = ParameterSet<T>::npos;
    std::size_t va = ParameterSet<T>::npos, vb = ParameterSet<T>::npos;
  };
  struct Cache;

  void forward(std::span<const double> window, Cache& c) const;
  void backward(const Cache& c, const Vec<T>& dlogits, Gradients<T>& grads,
                T scale) const;
  const Mat<T>& p(std::size_t i) const { return params_[i].value; }

  ModelConfig cfg_;
  ParameterSet<T> params_;
  std::size_t embed_w_, embed_b_, pos_, lnf_g_, lnf_b_, head_w_, head_b_;
  std::vector<LayerIdx> layers_;
};

// Argmax of logits per window.
template <typename T>
std::vector<int> predict_batch(const Classifier<T>& model,
                               std::span<const std::span<const double>> windows,
                               Exec exec = Exec::Parallel);

template <typename T>
std::vector<Vec<T>> embed_batch(const Classifier<T>& model,
                                std::span<const std::span<const double>> windows,
                                Exec exec = Exec::Parallel);

extern template class Classifier<float>;
extern template class Classifier<double>;

}  // namespace bdx::model
