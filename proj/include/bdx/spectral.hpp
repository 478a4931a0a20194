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

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "bdx/parallel.hpp"

namespace bdx {

using cplx = std::complex<double>;

// Forward DFT X_k = sum_n x_n exp(-2 pi i k n / N). Radix-2 when N is a power
// of two, Bluestein (chirp-z over a radix-2 convolution) otherwise.
std::vector<cplx> dft(std::span<const cplx> x);
std::vector<cplx> dft_real(std::span<const double> x);

bool is_power_of_two(std::size_t n);

// One-sided magnitude spectrum, raw |X_k| (no 2/N scaling), DC included.
struct Spectrum {
  std::vector<double> magnitudes;
  std::vector<double> freqs_hz;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return magnitudes.size(); }
};

// K = floor(N/2) + 1 bins, f_k = k * rate / N for k = 0..K-1.
Spectrum magnitude_spectrum(std::span<const double> samples,
                            double sample_rate_hz);

enum class WindowFn { Rect, Hann };

struct Spectrogram {
  std::vector<std::vector<double>> frames;  // frame x bin
  std::vector<double> frame_times_s;        // centre of each frame
  std::vector<double> freqs_hz;
  std::size_t window_len = 0;
  std::size_t hop = 0;
};

struct StftConfig {
  std::size_t window_len = 256;
  std::size_t hop = 128;
  WindowFn window = WindowFn::Hann;
};

std::vector<double> make_window(WindowFn fn, std::size_t n);

// Frame f is the magnitude spectrum of samples[f*hop, f*hop + window_len)
// multiplied by the window. Frames are independent, so the parallel path is
// bitwise equal to the serial one.
Spectrogram stft(std::span<const double> samples, double sample_rate_hz,
                 const StftConfig& cfg, Exec exec = Exec::Parallel);

// Header: time_s,<f_0>,<f_1>,...; then one row per frame.
void write_spectrogram_csv(const Spectrogram& sg, std::ostream& os);

}  // namespace bdx
