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

#include "bdx/model/quant.hpp"

#include <algorithm>
#include <cmath>

#include "bdx/error.hpp"

namespace bdx::model {

int QuantizedMatrix::code(std::size_t i) const {
  const std::uint8_t byte = packed[i / 2];
  const int nibble = (i % 2 == 0) ? (byte & 0x0F) : (byte >> 4);
  return nibble >= 8 ? nibble - 16 : nibble;
}

template <typename T>
QuantizedMatrix quantize_blockwise(const Mat<T>& w, Exec exec) {
  QuantizedMatrix q;
  q.rows = static_cast<std::size_t>(w.rows());
  q.cols = static_cast<std::size_t>(w.cols());
  const std::size_t n = q.size();
  q.absmax.assign(q.num_blocks(), 0.0);
  q.packed.assign((n + 1) / 2, 0);
  const T* data = w.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(static_cast<double>(data[i]))) {
      throw Error(ErrorCode::InvalidInput, "cannot quantize non-finite weights");
    }
  }

  // Block size is even, so blocks never share a packed byte.
  auto one_block = [&](std::size_t b) {
    const std::size_t begin = b * q.block_size;
    const std::size_t end = std::min(n, begin + q.block_size);
    double amax = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      amax = std::max(amax, std::abs(static_cast<double>(data[i])));
    }
    q.absmax[b] = amax;
    for (std::size_t i = begin; i < end; ++i) {
      int c = 0;
      if (amax > 0.0) {
        c = static_cast<int>(std::lround(static_cast<double>(data[i]) / amax * kQuantLevels));
        c = std::clamp(c, -kQuantLevels, kQuantLevels);
      }
      const auto nibble = static_cast<std::uint8_t>(c & 0x0F);
      if (i % 2 == 0) {
        q.packed[i / 2] = static_cast<std::uint8_t>((q.packed[i / 2] & 0xF0) | nibble);
      } else {
        q.packed[i / 2] = static_cast<std::uint8_t>((q.packed[i / 2] & 0x0F) | (nibble << 4));
      }
    }
  };

  const auto nb = static_cast<std::ptrdiff_t>(q.num_blocks());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_block(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_block(static_cast<std::size_t>(b));
  }
  return q;
}

template <typename T>
Mat<T> dequantize(const QuantizedMatrix& q, Exec exec) {
  if (q.block_size == 0 || q.block_size % 2 != 0 ||
      q.absmax.size() != q.num_blocks() || q.packed.size() != (q.size() + 1) / 2) {
    throw Error(ErrorCode::CorruptFile, "inconsistent quantized matrix");
  }
  Mat<T> out(static_cast<Eigen::Index>(q.rows), static_cast<Eigen::Index>(q.cols));
  T* data = out.data();
  const std::size_t n = q.size();
  auto one_block = [&](std::size_t b) {
    const std::size_t begin = b * q.block_size;
    const std::size_t end = std::min(n, begin + q.block_size);
    for (std::size_t i = begin; i < end; ++i) {
      data[i] = static_cast<T>(q.absmax[b] *
                               (static_cast<double>(q.code(i)) / kQuantLevels));
    }
  };
  const auto nb = static_cast<std::ptrdiff_t>(q.num_blocks());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_block(static_cast<std::size_t>(b));
  } else {
    for (std::ptrdiff_t b = 0; b < nb; ++b) one_block(static_cast<std::size_t>(b));
  }
  return out;
}

template QuantizedMatrix quantize_blockwise<float>(const Mat<float>&, Exec);
template QuantizedMatrix quantize_blockwise<double>(const Mat<double>&, Exec);
template Mat<float> dequantize<float>(const QuantizedMatrix&, Exec);
template Mat<double> dequantize<double>(const QuantizedMatrix&, Exec);

}  // namespace bdx::model
