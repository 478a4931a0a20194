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

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bdx/model/classifier.hpp"

namespace bdx::model {

// Layout (all integers and floats little-endian):
//   "BDLM" | u16 version | u8 scalar bytes | u32 len + config JSON |
//   u32 tensor count | tensors... | u32 CRC32 of everything before it
// Tensor: u16 len + name | u8 flags (1 trainable, 2 quantized) | u32 rows |
//   u32 cols | dense: f64[rows*cols] row-major
//            quantized: u32 block | f64 absmax[blocks] | u8 codes[(n+1)/2]
inline constexpr std::uint16_t kCheckpointVersion = 1;

template <typename T>
std::vector<std::uint8_t> serialize_checkpoint(const Classifier<T>& model);
template <typename T>
Classifier<T> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

template <typename T>
void save_checkpoint(const Classifier<T>& model, const std::filesystem::path& path);
// Throws CorruptFile (bad magic, checksum, truncation, shape/tag mismatch) or
// VersionMismatch.
template <typename T>
Classifier<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace bdx::model
