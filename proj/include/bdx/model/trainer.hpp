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
#include <span>
#include <vector>

#include "bdx/model/classifier.hpp"

namespace bdx::model {

struct Example {
  std::span<const double> window;
  int label = 0;
};

struct TrainHyper {
  double lr = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Ties resolve to the earliest epoch, so once validation accuracy hits 1.0
  // no later epoch can be selected and training may stop there.
  bool stop_at_perfect_val = true;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

template <typename T>
class Adam {
 public:
  Adam(const ParameterSet<T>& params, const TrainHyper& hyper);
  void step(ParameterSet<T>& params, const Gradients<T>& grads);
  std::size_t steps() const { return t_; }

 private:
  TrainHyper hyper_;
  std::vector<Mat<T>> m_, v_;
  std::size_t t_ = 0;
};

// Mini-batch Adam on the trainable parameters, evaluating on `val` after
// every epoch. On return the model holds the parameters of the epoch with the
// highest validation accuracy (earliest on ties). Single-threaded and
// deterministic per hyper.seed.
template <typename T>
TrainResult train(Classifier<T>& model, std::span<const Example> train_set,
                  std::span<const Example> val_set, const TrainHyper& hyper);

template <typename T>
std::vector<int> predict(const Classifier<T>& model, std::span<const Example> set,
                         Exec exec = Exec::Parallel);

template <typename T>
double accuracy(const Classifier<T>& model, std::span<const Example> set,
                Exec exec = Exec::Parallel);

}  // namespace bdx::model
