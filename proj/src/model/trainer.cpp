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

#include "bdx/model/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "bdx/error.hpp"

namespace bdx::model {

template <typename T>
Adam<T>::Adam(const ParameterSet<T>& params, const TrainHyper& hyper)
    : hyper_(hyper) {
  m_.resize(params.size());
  v_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable()) continue;
    m_[i] = Mat<T>::Zero(params[i].value.rows(), params[i].value.cols());
    v_[i] = Mat<T>::Zero(params[i].value.rows(), params[i].value.cols());
  }
}

template <typename T>
void Adam<T>::step(ParameterSet<T>& params, const Gradients<T>& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper_.beta2, static_cast<double>(t_));
  const T b1 = static_cast<T>(hyper_.beta1);
  const T b2 = static_cast<T>(hyper_.beta2);
  const T step = static_cast<T>(hyper_.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(hyper_.adam_eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable()) continue;
    const auto g = grads.g[i].array();
    m_[i].array() = b1 * m_[i].array() + (T(1) - b1) * g;
    v_[i].array() = b2 * v_[i].array() + (T(1) - b2) * g.square();
    params[i].value.array() -=
        step * m_[i].array() / (v_[i].array().sqrt() * inv_sqrt_bc2 + eps);
  }
}

template <typename T>
std::vector<int> predict(const Classifier<T>& model, std::span<const Example> set,
                         Exec exec) {
  std::vector<std::span<const double>> windows;
  windows.reserve(set.size());
  for (const auto& e : set) windows.push_back(e.window);
  return predict_batch(model, std::span<const std::span<const double>>(windows), exec);
}

template <typename T>
double accuracy(const Classifier<T>& model, std::span<const Example> set, Exec exec) {
  if (set.empty()) return 0.0;
  const auto pred = predict(model, set, exec);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.size(); ++i) hits += pred[i] == set[i].label;
  return static_cast<double>(hits) / static_cast<double>(set.size());
}

template <typename T>
TrainResult train(Classifier<T>& model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainHyper& hyper) {
  if (train_set.empty() || val_set.empty()) {
    throw Error(ErrorCode::EmptyDataset, "training needs non-empty train and val sets",
                {{"train", std::to_string(train_set.size())},
                 {"val", std::to_string(val_set.size())}});
  }
  if (hyper.batch_size == 0 || hyper.epochs == 0) {
    throw Error(ErrorCode::InvalidConfig, "batch_size and epochs must be positive");
  }
  const auto n_classes = static_cast<int>(model.config().n_classes);
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& e : *set) {
      if (e.label < 0 || e.label >= n_classes) {
        throw Error(ErrorCode::LabelSpaceMismatch, "example label outside model classes",
                    {{"label", std::to_string(e.label)}});
      }
    }
  }

  auto& params = model.params();
  Adam<T> adam(params, hyper);
  auto grads = Gradients<T>::zeros_like(params);
  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::vector<Mat<T>> best;
  auto snapshot = [&] {
    best.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].trainable()) best[i] = params[i].value;
    }
  };
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      const T scale = T(1) / static_cast<T>(end - start);
      grads.set_zero();
      for (std::size_t i = start; i < end; ++i) {
        const auto& ex = train_set[order[i]];
        loss_sum += static_cast<double>(
            model.accumulate_gradients(ex.window, ex.label, grads, scale));
      }
      if (!std::isfinite(loss_sum)) {
        throw Error(ErrorCode::DivergedLoss, "training loss became non-finite",
                    {{"epoch", std::to_string(epoch)}});
      }
      adam.step(params, grads);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.val_accuracy = accuracy(model, val_set, Exec::Serial);
    result.log.push_back(entry);
    if (!have_best || entry.val_accuracy > result.best_val_accuracy) {
      have_best = true;
      result.best_epoch = epoch;
      result.best_val_accuracy = entry.val_accuracy;
      snapshot();
    }
    if (hyper.stop_at_perfect_val && entry.val_accuracy >= 1.0) {
      result.stopped_early = epoch < hyper.epochs;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].trainable()) params[i].value = best[i];
  }
  return result;
}

template class Adam<float>;
template class Adam<double>;
template TrainResult train<float>(Classifier<float>&, std::span<const Example>,
                                  std::span<const Example>, const TrainHyper&);
template TrainResult train<double>(Classifier<double>&, std::span<const Example>,
                                   std::span<const Example>, const TrainHyper&);
template std::vector<int> predict<float>(const Classifier<float>&, std::span<const Example>, Exec);
template std::vector<int> predict<double>(const Classifier<double>&, std::span<const Example>, Exec);
template double accuracy<float>(const Classifier<float>&, std::span<const Example>, Exec);
template double accuracy<double>(const Classifier<double>&, std::span<const Example>, Exec);

}  // namespace bdx::model
