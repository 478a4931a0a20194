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

#include "bdx/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "bdx/error.hpp"

namespace bdx {

std::string_view to_string(FaultLabel label) {
  switch (label) {
    case FaultLabel::RollingElement: return "ball";
    case FaultLabel::InnerRace: return "inner";
    case FaultLabel::Normal: return "normal";
    case FaultLabel::OuterRace: return "outer";
  }
  return "normal";
}

std::optional<FaultLabel> parse_fault_label(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (t == "ball" || t == "rollingelement" || t == "rolling_element") {
    return FaultLabel::RollingElement;
  }
  if (t == "inner" || t == "innerrace" || t == "inner_race") {
    return FaultLabel::InnerRace;
  }
  if (t == "normal") return FaultLabel::Normal;
  if (t == "outer" || t == "outerrace" || t == "outer_race") {
    return FaultLabel::OuterRace;
  }
  return std::nullopt;
}

void Signal::validate() const {
  if (samples.empty()) {
    throw Error(ErrorCode::InvalidInput, "signal '" + id + "' has no samples");
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw Error(ErrorCode::InvalidInput,
                "signal '" + id + "' has a non-positive sample rate");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isfinite(samples[i])) {
      throw Error(ErrorCode::InvalidInput,
                  "signal '" + id + "' has a non-finite sample",
                  {{"index", std::to_string(i)}});
    }
  }
}

void SegmentationConfig::validate() const {
  if (window_len == 0) {
    throw Error(ErrorCode::InvalidConfig, "window_len must be positive");
  }
  if (step == 0 || step > window_len) {
    throw Error(ErrorCode::InvalidConfig,
                "step must satisfy 0 < step <= window_len",
                {{"step", std::to_string(step)},
                 {"window_len", std::to_string(window_len)}});
  }
}

std::size_t segment_count(std::size_t signal_len,
                          const SegmentationConfig& cfg) {
  if (signal_len < cfg.window_len) return 0;
  return (signal_len - cfg.window_len) / cfg.step + 1;
}

std::vector<Segment> segment_sliding_window(const Signal& signal,
                                            const SegmentationConfig& cfg) {
  cfg.validate();
  const std::size_t len = signal.samples.size();
  if (len < cfg.window_len) {
    throw Error(ErrorCode::SignalTooShort,
                "signal '" + signal.id + "' is shorter than one window",
                {{"length", std::to_string(len)},
                 {"window_len", std::to_string(cfg.window_len)}});
  }
  const std::size_t n = segment_count(len, cfg);
  std::vector<Segment> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * cfg.step;
    Segment seg;
    seg.samples.assign(signal.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       signal.samples.begin() +
                           static_cast<std::ptrdiff_t>(start + cfg.window_len));
    seg.origin = {signal.id, start};
    seg.label = signal.label;
    seg.condition_id = signal.condition_id;
    seg.dataset_id = signal.dataset_id;
    seg.sample_rate_hz = signal.sample_rate_hz;
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<double> instance_normalize(std::span<const double> x, double eps) {
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv;
  return out;
}

}  // namespace bdx
