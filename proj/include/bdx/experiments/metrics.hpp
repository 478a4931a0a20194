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

#include "bdx/signal.hpp"

namespace bdx::experiments {

// Rows are true classes, columns predictions, both in label-space order.
struct ConfusionMatrix {
  std::vector<FaultLabel> labels;
  std::vector<std::size_t> counts;  // row-major labels.size()^2

  std::size_t size() const { return labels.size(); }
  std::size_t at(std::size_t truth, std::size_t pred) const {
    return counts[truth * labels.size() + pred];
  }
  std::size_t total() const;
  std::size_t trace() const;
  std::size_t row_sum(std::size_t truth) const;
  double accuracy() const;
};

struct Metrics {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
};

// predictions and truth are class indices into label_space. Throws
// LengthMismatch on unequal lengths and InvalidInput on out-of-range indices.
Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth,
                        std::span<const FaultLabel> label_space);

// Interval in the (mean, +(max - mean), -(mean - min)) style.
struct Summary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double plus() const { return max - mean; }
  double minus() const { return mean - min; }
};

Summary summarize(std::span<const double> values);

}  // namespace bdx::experiments
