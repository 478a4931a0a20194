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

#include <array>
#include <bitset>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "bdx/parallel.hpp"
#include "bdx/signal.hpp"
#include "bdx/spectral.hpp"

namespace bdx {

inline constexpr std::size_t kNumTimeFeatures = 12;
inline constexpr std::size_t kNumFreqFeatures = 12;
inline constexpr std::size_t kNumFeatures = kNumTimeFeatures + kNumFreqFeatures;

// Denominators whose magnitude falls below this make the dependent feature
// undefined.
inline constexpr double kDegenerateThreshold = 1e-30;

struct FeatureInfo {
  std::string_view id;    // "p1" .. "p24"
  std::string_view name;  // row name, e.g. "Square root amplitude"
  bool frequency_domain;
};

const std::array<FeatureInfo, kNumFeatures>& feature_table();

// 24 values in p1..p24 order. Undefined entries hold NaN and have their bit
// set in `undefined`.
struct FeatureVector {
  std::array<double, kNumFeatures> values{};
  std::bitset<kNumFeatures> undefined;

  double operator[](std::size_t i) const { return values[i]; }
  // 1-based accessor matching the p-numbering.
  double p(std::size_t k) const { return values[k - 1]; }
  bool defined(std::size_t k) const { return !undefined[k - 1]; }
};

struct FeatureOptions {
  // p9 as literally typeset, p7 / (sqrt(p6))^2 = p7 / p6. Off by default; the
  // default kurtosis factor is p7 / p8^2.
  bool literal_kurtosis_index = false;
};

// Fills p1..p12. Requires at least 2 samples.
void time_features(std::span<const double> x, FeatureVector& out,
                   const FeatureOptions& opts = {});

// Fills p13..p24. Requires K >= 2.
void frequency_features(const Spectrum& spectrum, FeatureVector& out);

FeatureVector extract_features(std::span<const double> samples,
                               double sample_rate_hz,
                               const FeatureOptions& opts = {});
FeatureVector extract_features(const Segment& segment,
                               const FeatureOptions& opts = {});

std::vector<FeatureVector> extract_features_batch(std::span<const Segment> segments,
                                                  Exec exec = Exec::Parallel,
                                                  const FeatureOptions& opts = {});

// Header p1..p24,label,dataset_id,condition_id; undefined values are empty
// cells.
void write_feature_csv(std::span<const Segment> segments,
                       std::span<const FeatureVector> features,
                       std::ostream& os);

}  // namespace bdx
