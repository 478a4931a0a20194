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

#include "bdx/model/tensor.hpp"

namespace bdx::model {

// P x patch_len, P = floor((len - patch_len) / stride) + 1; row i is
// window[i*stride, i*stride + patch_len).
template <typename T>
Mat<T> patchify(std::span<const T> window, std::size_t patch_len,
                std::size_t stride);

std::size_t num_patches(std::size_t window_len, std::size_t patch_len,
                        std::size_t stride);

// Row-wise linear projection: patches (P x L) * kernel^T (L x d) + bias.
// Equivalent to a Conv1d whose kernel spans the whole patch.
template <typename T>
Mat<T> value_embed(const Mat<T>& patches, const Mat<T>& kernel,
                   const Mat<T>& bias);

// Entry (t, 2k) = sin(w_k t), (t, 2k+1) = cos(w_k t), w_k = 10000^(-2k/d).
Mat<double> sinusoidal_position_table(std::size_t num_positions,
                                      std::size_t d_model);

template <typename T>
struct LayerNormCache {
  Mat<T> xhat;
  Vec<T> rstd;
};

// Row-wise (x - E[x]) / sqrt(Var[x] + eps) * gamma + beta, population
// variance over the feature dimension. gamma and beta are 1 x d.
template <typename T>
Mat<T> layer_norm_rows(const Mat<T>& x, const Mat<T>& gamma, const Mat<T>& beta,
                       T eps, LayerNormCache<T>* cache = nullptr);

// Returns dL/dx and accumulates dL/dgamma, dL/dbeta when the pointers are
// non-null.
template <typename T>
Mat<T> layer_norm_rows_backward(const Mat<T>& dy, const LayerNormCache<T>& cache,
                                const Mat<T>& gamma, Mat<T>* dgamma,
                                Mat<T>* dbeta);

// Single-vector form of the affine normalization.
std::vector<double> affine_layer_norm(std::span<const double> x,
                                      std::span<const double> gamma,
                                      std::span<const double> beta,
                                      double eps = 1e-5);

// tanh-approximated GELU as used by GPT-2.
template <typename T>
T gelu(T x);
template <typename T>
T gelu_grad(T x);
// Elementwise over a matrix (vectorized).
template <typename T>
Mat<T> gelu_matrix(const Mat<T>& x);
template <typename T>
Mat<T> gelu_grad_matrix(const Mat<T>& x);

// Softmax of each row in place; with `causal` entries j > i are zeroed.
template <typename T>
void softmax_rows(Mat<T>& s, bool causal);

// Mean over rows of -log softmax(logits)[label]; log-sum-exp stabilized.
// When dlogits is non-null it receives dL/dlogits (already divided by N).
template <typename T>
T cross_entropy(const Mat<T>& logits, std::span<const int> labels,
                Mat<T>* dlogits = nullptr);

// Same loss with explicit one-hot (or soft) targets, N x C.
template <typename T>
T cross_entropy_onehot(const Mat<T>& logits, const Mat<T>& targets);

template <typename T>
Mat<T> softmax_probabilities(const Mat<T>& logits);

}  // namespace bdx::model
