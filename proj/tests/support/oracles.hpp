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

// Brute-force reference implementations for the tests. Written straight from
// the defining formulas in long double, sharing no code with the library.

#pragma once

#include <array>
#include <bitset>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace oracle {

using ld = long double;
using cld = std::complex<long double>;

// O(N^2) DFT with the twiddle angle reduced as (k*n mod N) before sin/cos.
std::vector<cld> naive_dft(const std::vector<double>& x);
std::vector<cld> naive_dft(const std::vector<std::complex<double>>& x);

// |X_k| for k = 0..floor(N/2).
std::vector<ld> naive_magnitudes(const std::vector<double>& x);

// Single DFT bin (Goertzel-free direct sum), for long signals.
cld dft_bin(const std::vector<double>& x, std::size_t k);

struct Features {
  std::array<ld, 24> p{};
  std::bitset<24> undefined;
};

// The 24 features with the project's conventions: |x| restored in p3/p4/p5,
// p9 = p7/p8^2 (or p7/p6 when literal), raw one-sided |DFT| with DC, f_k =
// k*rate/N, denominators below 1e-30 leave the feature undefined.
Features features(const std::vector<double>& x, double rate, bool literal_p9 = false);
Features time_features(const std::vector<double>& x, bool literal_p9 = false);
Features frequency_features(const std::vector<ld>& s, const std::vector<ld>& f);

std::vector<ld> instance_normalize(const std::vector<double>& x, ld eps = 1e-5L);

// Pre-norm transformer classifier evaluated with plain loops. `param` returns
// a row-major copy of the named tensor and its shape.
struct Tensor {
  std::size_t rows = 0, cols = 0;
  std::vector<ld> v;
  ld at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};
struct ModelShape {
  std::size_t patch_len, stride, d_model, n_heads, n_layers, n_classes;
  bool causal = true;
  bool mean_pool = true;
  ld ln_eps = 1e-5L;
  ld lora_scale = 0;  // used when lora tensors are present
  bool lora_q = false, lora_v = false;
};
std::vector<ld> model_logits(const std::vector<double>& window, const ModelShape& shape,
                             const std::function<Tensor(const std::string&)>& param);

// Overlapping pairs between two index groups, by direct interval comparison.
struct Window {
  std::string signal;
  std::size_t start, len;
};
std::size_t overlapping_pairs(const std::vector<Window>& a, const std::vector<Window>& b);

// Largest-remainder quotas for round(fraction * total), ties to lower index.
std::vector<std::size_t> largest_remainder(const std::vector<std::size_t>& counts,
                                           double fraction);

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p);
std::string read_text(const std::filesystem::path& p);
void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& b);

// Relative error with a floor on the denominator.
inline ld rel_err(ld got, ld want, ld floor = 1e-300L) {
  const ld d = got > want ? got - want : want - got;
  const ld m = want < 0 ? -want : want;
  return d / (m > floor ? m : floor);
}

}  // namespace oracle
