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
#include <iterator>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bdx {

// Declaration order is the canonical class order used for model outputs and
// confusion matrices: ball, inner, normal, outer.
enum class FaultLabel : std::uint8_t { RollingElement, InnerRace, Normal, OuterRace };

inline constexpr std::size_t kNumFaultLabels = 4;
inline constexpr FaultLabel kAllFaultLabels[kNumFaultLabels] = {
    FaultLabel::RollingElement, FaultLabel::InnerRace, FaultLabel::Normal,
    FaultLabel::OuterRace};

// Short token: "ball", "inner", "normal", "outer".
std::string_view to_string(FaultLabel label);
// Accepts the short tokens plus the long enumerator names (case-insensitive).
std::optional<FaultLabel> parse_fault_label(std::string_view text);

struct Signal {
  std::string id;
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::string dataset_id;
  std::string condition_id;
  FaultLabel label = FaultLabel::Normal;

  // Throws InvalidInput when samples are empty or non-finite, or the rate is
  // not positive.
  void validate() const;
};

struct SegmentOrigin {
  std::string signal_id;
  std::size_t start = 0;

  bool operator==(const SegmentOrigin&) const = default;
};

struct Segment {
  std::vector<double> samples;
  SegmentOrigin origin;
  FaultLabel label = FaultLabel::Normal;
  std::string condition_id;
  std::string dataset_id;
  double sample_rate_hz = 0.0;
};

struct SegmentationConfig {
  std::size_t window_len = 2048;
  std::size_t step = 1024;

  void validate() const;
};

// floor((len - window) / step) + 1, or 0 when len < window.
std::size_t segment_count(std::size_t signal_len, const SegmentationConfig& cfg);

// Fixed-length windows starting at 0, step, 2*step, ...; the tail that does not
// fill a whole window is dropped.
std::vector<Segment> segment_sliding_window(const Signal& signal,
                                            const SegmentationConfig& cfg);

inline constexpr double kInstanceNormEps = 1e-5;

// (x - mean) / sqrt(var + eps) with the population variance. Constant input
// maps to zeros.
std::vector<double> instance_normalize(std::span<const double> x,
                                       double eps = kInstanceNormEps);

// --- synthetic recordings -------------------------------------------------

struct SyntheticSpec {
  FaultLabel label = FaultLabel::Normal;
  double carrier_hz = 3000.0;
  double impact_rate_hz = 100.0;
  double decay = 800.0;  // 1/s envelope decay of each impulse
  double noise_std = 0.1;
  std::size_t length = 12000;
  double sample_rate_hz = 12000.0;
  std::uint64_t seed = 0;
};

// Normal: white gaussian noise. Fault classes: a train of exponentially
// decaying carrier bursts repeating at impact_rate_hz, plus the same noise.
// Deterministic per seed.
Signal synth_signal(const SyntheticSpec& spec);

// Versioned fixture table. The variant indices shift the carrier band
// (dataset) and the impact rate (operating condition) so protocol tests can
// build several distinguishable "datasets" and "conditions".
inline constexpr std::string_view kFixtureVersion = "synthetic-v1";

SyntheticSpec fixture_spec(FaultLabel label, std::uint64_t seed,
                           std::size_t length, int dataset_variant = 0,
                           int condition_variant = 0);

// A whole stand-in dataset built from the fixture table: for every condition
// c in [0, n_conditions) and every label, `signals_per_condition` signals of
// `length` samples with condition variant c. Ids look like "SYN/c0/inner/0".
struct FixtureDatasetSpec {
  std::string dataset_id = "SYN";
  int dataset_variant = 0;
  std::vector<FaultLabel> labels{std::begin(kAllFaultLabels), std::end(kAllFaultLabels)};
  std::size_t n_conditions = 1;
  std::size_t signals_per_condition = 1;
  std::size_t length = 2048 + 199 * 1024;  // 200 windows at the default step
  std::uint64_t seed = 0;
};

std::vector<Signal> fixture_dataset(const FixtureDatasetSpec& spec);

}  // namespace bdx
