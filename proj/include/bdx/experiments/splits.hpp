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
#include <string>
#include <vector>

#include "bdx/signal.hpp"

namespace bdx::experiments {

enum class SplitMode {
  TrainTest82,      // 8:2
  TrainValTest811,  // 8:1:1
  TrainVal81,       // 8:1, used to carve validation out of training conditions
};

struct SplitSpec {
  SplitMode mode = SplitMode::TrainValTest811;
  std::uint64_t seed = 0;
  bool balance = true;
};

// Indices into a segment array, each list ascending.
struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Downsamples every class in `pool` to the smallest class count (seeded).
std::vector<std::size_t> balance_classes(std::span<const Segment> segments,
                                         std::span<const std::size_t> pool,
                                         std::uint64_t seed);

// Stratified, seeded, window-disjoint splits. Per class the segments are
// ordered by origin and cut into 10 (8:1:1), 5 (8:2) or 9 (8:1) contiguous
// blocks; the held-out blocks take the first and/or last position (seeded)
// and the rest train. Windows that overlap a window of a higher-priority
// split (test > val > train) are dropped, so with overlapping segmentation
// each held-out block costs at most one training window. Classes are then
// re-balanced within each split. Throws ClassTooSmall when a class has
// fewer segments than blocks.
Splits build_splits(std::span<const Segment> segments, std::span<const std::size_t> pool,
                    const SplitSpec& spec);
Splits build_splits(std::span<const Segment> segments, const SplitSpec& spec);

// Number of window pairs from different groups that share signal samples.
std::size_t count_overlaps(std::span<const Segment> segments,
                           std::span<const std::vector<std::size_t>> groups);
std::size_t audit_leakage(std::span<const Segment> segments, const Splits& splits);

// Stratified subsample of round(fraction * |pool|) segments; class quotas
// follow largest remainders (ties to the canonical label order). Throws
// ClassTooSmall when a present class would receive no segment.
std::vector<std::size_t> limited_subsample(std::span<const Segment> segments,
                                           std::span<const std::size_t> pool,
                                           double fraction, std::uint64_t seed);

// Order-independent 64-bit hash of segment origins (hex).
std::string membership_hash(std::span<const Segment> segments,
                            std::span<const std::size_t> members);

}  // namespace bdx::experiments
