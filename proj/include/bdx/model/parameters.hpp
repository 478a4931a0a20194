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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "bdx/model/quant.hpp"
#include "bdx/model/tensor.hpp"

namespace bdx::model {

template <typename T>
struct Parameter {
  std::string name;
  Mat<T> value;  // for quantized parameters: the dequantized matrix
  std::optional<QuantizedMatrix> quantized;

  bool trainable() const { return trainable_; }

 private:
  template <typename>
  friend class ParameterSet;
  bool trainable_ = false;
};

// Named tensors, each tagged frozen or trainable exactly once at insertion.
template <typename T>
class ParameterSet {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t add(std::string name, Mat<T> value, bool trainable);
  // Removes the named parameters; indices of the remaining ones shift.
  void remove(const std::vector<std::string>& names);

  std::size_t size() const { return items_.size(); }
  Parameter<T>& operator[](std::size_t i) { return items_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return items_[i]; }
  std::size_t find(const std::string& name) const;
  Parameter<T>& at(const std::string& name);
  const Parameter<T>& at(const std::string& name) const;

  std::size_t num_trainable_scalars() const;
  std::size_t num_frozen_scalars() const;

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<Parameter<T>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Gradient buffers aligned with a ParameterSet. Frozen parameters get an
// empty (0 x 0) buffer: no storage, never written.
template <typename T>
struct Gradients {
  std::vector<Mat<T>> g;

  static Gradients zeros_like(const ParameterSet<T>& params);
  void set_zero();
  bool has(std::size_t i) const { return g[i].size() != 0; }
};

}  // namespace bdx::model
