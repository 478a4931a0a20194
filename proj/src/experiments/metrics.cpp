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

#include "bdx/experiments/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "bdx/error.hpp"

namespace bdx::experiments {

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < size(); ++i) t += at(i, i);
  return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t j = 0; j < size(); ++j) s += at(truth, j);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const std::size_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(n);
}

Metrics compute_metrics(std::span<const int> predictions, std::span<const int> truth,
                        std::span<const FaultLabel> label_space) {
  if (predictions.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "predictions and labels differ in length",
                {{"predictions", std::to_string(predictions.size())},
                 {"labels", std::to_string(truth.size())}});
  }
  const auto k = static_cast<int>(label_space.size());
  Metrics m;
  m.confusion.labels.assign(label_space.begin(), label_space.end());
  m.confusion.counts.assign(label_space.size() * label_space.size(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= k || predictions[i] < 0 || predictions[i] >= k) {
      throw Error(ErrorCode::InvalidInput, "class index outside label space",
                  {{"index", std::to_string(i)}});
    }
    ++m.confusion.counts[static_cast<std::size_t>(truth[i]) * label_space.size() +
                         static_cast<std::size_t>(predictions[i])];
  }
  m.accuracy = m.confusion.accuracy();
  return m;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.min = *lo;
  s.max = *hi;
  // Guard the mean-in-range invariant against summation rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

}  // namespace bdx::experiments
