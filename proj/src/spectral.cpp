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

#include "bdx/spectral.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "bdx/error.hpp"

namespace bdx {

namespace {

// exp(-2 pi i m / n) with the angle reduced exactly in integers first.
cplx twiddle(std::size_t m, std::size_t n) {
  m %= n;
  const double ang = -2.0 * std::numbers::pi * static_cast<double>(m) /
                     static_cast<double>(n);
  return {std::cos(ang), std::sin(ang)};
}

void fft_radix2_inplace(std::vector<cplx>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::vector<cplx> tw(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    tw[k] = twiddle(k, n);
    if (inverse) tw[k] = std::conj(tw[k]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const cplx u = a[i + j];
        const cplx v = a[i + j + half] * tw[j * stride];
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

std::vector<cplx> bluestein(std::span<const cplx> x) {
  const std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  // chirp w_k = exp(-i pi k^2 / n); k^2 reduced mod 2n keeps the angle small.
  std::vector<cplx> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = -std::numbers::pi * static_cast<double>(k2) /
                       static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }
  std::vector<cplx> a(m, cplx{}), b(m, cplx{});
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    b[k] = std::conj(chirp[k]);
    b[m - k] = std::conj(chirp[k]);
  }
  fft_radix2_inplace(a, false);
  fft_radix2_inplace(b, false);
  for (std::size_t i = 0; i < m; ++i) a[i] *= b[i];
  fft_radix2_inplace(a, true);
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<cplx> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * inv_m * chirp[k];
  return out;
}

}  // namespace

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<cplx> dft(std::span<const cplx> x) {
  if (x.empty()) throw Error(ErrorCode::EmptyInput, "dft of empty input");
  if (x.size() == 1) return {x[0]};
  if (is_power_of_two(x.size())) {
    std::vector<cplx> a(x.begin(), x.end());
    fft_radix2_inplace(a, false);
    return a;
  }
  return bluestein(x);
}

std::vector<cplx> dft_real(std::span<const double> x) {
  std::vector<cplx> c(x.begin(), x.end());
  return dft(c);
}

Spectrum magnitude_spectrum(std::span<const double> samples,
                            double sample_rate_hz) {
  if (samples.size() < 2) {
    throw Error(ErrorCode::EmptyInput, "spectrum needs at least 2 samples",
                {{"length", std::to_string(samples.size())}});
  }
  const std::size_t n = samples.size();
  const auto full = dft_real(samples);
  const std::size_t k_bins = n / 2 + 1;
  Spectrum s;
  s.sample_rate_hz = sample_rate_hz;
  s.magnitudes.resize(k_bins);
  s.freqs_hz.resize(k_bins);
  for (std::size_t k = 0; k < k_bins; ++k) {
    s.magnitudes[k] = std::abs(full[k]);
    s.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(n);
  }
  return s;
}

std::vector<double> make_window(WindowFn fn, std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (fn == WindowFn::Hann) {
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(n));
    }
  }
  return w;
}

Spectrogram stft(std::span<const double> samples, double sample_rate_hz,
                 const StftConfig& cfg, Exec exec) {
  if (cfg.hop == 0 || cfg.window_len < 2) {
    throw Error(ErrorCode::InvalidConfig, "stft needs hop >= 1 and window >= 2");
  }
  if (samples.size() < cfg.window_len) {
    throw Error(ErrorCode::SignalTooShort, "signal shorter than stft window",
                {{"length", std::to_string(samples.size())},
                 {"window_len", std::to_string(cfg.window_len)}});
  }
  const std::size_t n_frames = (samples.size() - cfg.window_len) / cfg.hop + 1;
  const auto win = make_window(cfg.window, cfg.window_len);

  Spectrogram sg;
  sg.window_len = cfg.window_len;
  sg.hop = cfg.hop;
  sg.frames.resize(n_frames);
  sg.frame_times_s.resize(n_frames);

  auto one_frame = [&](std::size_t f) {
    std::vector<double> slice(cfg.window_len);
    const std::size_t start = f * cfg.hop;
    for (std::size_t i = 0; i < cfg.window_len; ++i) {
      slice[i] = samples[start + i] * win[i];
    }
    sg.frames[f] = magnitude_spectrum(slice, sample_rate_hz).magnitudes;
    sg.frame_times_s[f] =
        (static_cast<double>(start) + 0.5 * static_cast<double>(cfg.window_len)) /
        sample_rate_hz;
  };

  const auto nf = static_cast<std::ptrdiff_t>(n_frames);
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t f = 0; f < nf; ++f) one_frame(static_cast<std::size_t>(f));
  } else {
    for (std::ptrdiff_t f = 0; f < nf; ++f) one_frame(static_cast<std::size_t>(f));
  }

  const std::size_t k_bins = cfg.window_len / 2 + 1;
  sg.freqs_hz.resize(k_bins);
  for (std::size_t k = 0; k < k_bins; ++k) {
    sg.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz /
                     static_cast<double>(cfg.window_len);
  }
  return sg;
}

void write_spectrogram_csv(const Spectrogram& sg, std::ostream& os) {
  const auto old_prec = os.precision(17);
  os << "time_s";
  for (double f : sg.freqs_hz) os << ',' << f;
  os << '\n';
  for (std::size_t i = 0; i < sg.frames.size(); ++i) {
    os << sg.frame_times_s[i];
    for (double m : sg.frames[i]) os << ',' << m;
    os << '\n';
  }
  os.precision(old_prec);
}

}  // namespace bdx
