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

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "bdx/error.hpp"
#include "bdx/signal.hpp"

namespace bdx {

Signal synth_signal(const SyntheticSpec& spec) {
  if (!(spec.sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "sample rate must be positive");
  }
  if (spec.length == 0) {
    throw Error(ErrorCode::InvalidConfig, "synthetic length must be positive");
  }
  if (spec.noise_std < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "noise_std must be non-negative");
  }
  const bool faulty = spec.label != FaultLabel::Normal;
  if (faulty) {
    if (!(spec.carrier_hz > 0.0) || spec.carrier_hz >= spec.sample_rate_hz / 2.0) {
      throw Error(ErrorCode::InvalidConfig, "carrier_hz violates Nyquist",
                  {{"carrier_hz", std::to_string(spec.carrier_hz)},
                   {"sample_rate_hz", std::to_string(spec.sample_rate_hz)}});
    }
    if (!(spec.impact_rate_hz > 0.0) || !(spec.decay > 0.0)) {
      throw Error(ErrorCode::InvalidConfig,
                  "impact_rate_hz and decay must be positive");
    }
  }

  std::mt19937_64 rng(spec.seed);
  Signal sig;
  sig.sample_rate_hz = spec.sample_rate_hz;
  sig.label = spec.label;
  sig.samples.assign(spec.length, 0.0);

  if (faulty) {
    const double fs = spec.sample_rate_hz;
    const double period = 1.0 / spec.impact_rate_hz;
    std::uniform_real_distribution<double> phase(0.0, period);
    std::uniform_real_distribution<double> amp(0.8, 1.2);
    const double t_end = static_cast<double>(spec.length) / fs;
    // Bursts below exp(-12) of their peak are truncated.
    const auto burst_len = static_cast<std::size_t>(std::ceil(12.0 / spec.decay * fs));
    const double w = 2.0 * std::numbers::pi * spec.carrier_hz;
    for (double tk = phase(rng); tk < t_end; tk += period) {
      const double a = amp(rng);
      const auto first = static_cast<std::size_t>(std::ceil(tk * fs));
      const std::size_t last = std::min(spec.length, first + burst_len);
      for (std::size_t n = first; n < last; ++n) {
        const double dt = static_cast<double>(n) / fs - tk;
        sig.samples[n] += a * std::exp(-spec.decay * dt) * std::sin(w * dt);
      }
    }
  }
  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    for (double& v : sig.samples) v += noise(rng);
  }
  return sig;
}

SyntheticSpec fixture_spec(FaultLabel label, std::uint64_t seed,
                           std::size_t length, int dataset_variant,
                           int condition_variant) {
  // synthetic-v1 table; changing any entry requires bumping kFixtureVersion.
  SyntheticSpec s;
  s.label = label;
  s.seed = seed;
  s.length = length;
  s.sample_rate_hz = 12000.0;
  switch (label) {
    case FaultLabel::Normal:
      s.carrier_hz = 0.0;
      s.impact_rate_hz = 0.0;
      s.decay = 1.0;
      s.noise_std = 1.0;
      break;
    case FaultLabel::InnerRace:
      s.carrier_hz = 3000.0;
      s.impact_rate_hz = 162.0;
      s.decay = 800.0;
      s.noise_std = 0.3;
      break;
    case FaultLabel::OuterRace:
      s.carrier_hz = 2000.0;
      s.impact_rate_hz = 107.0;
      s.decay = 600.0;
      s.noise_std = 0.3;
      break;
    case FaultLabel::RollingElement:
      s.carrier_hz = 4200.0;
      s.impact_rate_hz = 141.0;
      s.decay = 1000.0;
      s.noise_std = 0.3;
      break;
  }
  s.carrier_hz *= 1.0 + 0.12 * dataset_variant;
  s.impact_rate_hz *= 1.0 - 0.0125 * condition_variant;
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

std::vector<Signal> fixture_dataset(const FixtureDatasetSpec& spec) {
  std::vector<Signal> out;
  for (std::size_t c = 0; c < spec.n_conditions; ++c) {
    for (FaultLabel label : spec.labels) {
      for (std::size_t k = 0; k < spec.signals_per_condition; ++k) {
        std::uint64_t seed = splitmix64(spec.seed);
        seed = splitmix64(seed ^ static_cast<std::uint64_t>(spec.dataset_variant));
        seed = splitmix64(seed ^ c);
        seed = splitmix64(seed ^ static_cast<std::uint64_t>(label));
        seed = splitmix64(seed ^ k);
        auto sig = synth_signal(fixture_spec(label, seed, spec.length, spec.dataset_variant,
                                             static_cast<int>(c)));
        sig.dataset_id = spec.dataset_id;
        sig.condition_id = std::to_string(c);
        sig.id = spec.dataset_id + "/c" + std::to_string(c) + "/" +
                 std::string(to_string(label)) + "/" + std::to_string(k);
        out.push_back(std::move(sig));
      }
    }
  }
  return out;
}

}  // namespace bdx
