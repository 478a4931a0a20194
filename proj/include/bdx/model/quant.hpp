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
#include <vector>

#include "bdx/model/tensor.hpp"
#include "bdx/parallel.hpp"

namespace bdx::model {

inline constexpr std::size_t kQuantBlock = 64;
inline constexpr int kQuantLevels = 7;  // codes in [-7, 7]

// Symmetric blockwise absmax int4. The row-major element stream is cut into
// blocks of kQuantBlock; each block stores its absmax and one signed 4-bit
// code per element (two codes per byte, low nibble first).
struct QuantizedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t block_size = kQuantBlock;
  std::vector<double> absmax;   // one per block
  std::vector<std::uint8_t> packed;

  std::size_t size() const { return rows * cols; }
  std::size_t num_blocks() const { return (size() + block_size - 1) / block_size; }
  int code(std::size_t i) const;

  bool operator==(const QuantizedMatrix&) const = default;
};

// code = round(w / absmax * 7); dequantized value = absmax * (code / 7).
// A block of equal-magnitude values round-trips exactly, and every element
// is within absmax / 7 of its source.
template <typename T>
QuantizedMatrix quantize_blockwise(const Mat<T>& w, Exec exec = Exec::Parallel);

template <typename T>
Mat<T> dequantize(const QuantizedMatrix& q, Exec exec = Exec::Parallel);

}  // namespace bdx::model
