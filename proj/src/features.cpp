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

#include "bdx/features.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "bdx/csv.hpp"
#include "bdx/error.hpp"

namespace bdx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool tiny(double v) { return !(std::abs(v) >= kDegenerateThreshold); }

void set(FeatureVector& fv, std::size_t k, double v) {
  fv.values[k - 1] = v;
  fv.undefined.reset(k - 1);
}

void unset(FeatureVector& fv, std::size_t k) {
  fv.values[k - 1] = kNaN;
  fv.undefined.set(k - 1);
}

void ratio(FeatureVector& fv, std::size_t k, double num, double den) {
  if (tiny(den)) {
    unset(fv, k);
  } else {
    set(fv, k, num / den);
  }
}

}  // namespace

const std::array<FeatureInfo, kNumFeatures>& feature_table() {
  static const std::array<FeatureInfo, kNumFeatures> table = {{
      {"p1", "Mean value", false},
      {"p2", "Standard deviation", false},
      {"p3", "Square root amplitude", false},
      {"p4", "Absolute mean value", false},
      {"p5", "Peak value", false},
      {"p6", "Skewness", false},
      {"p7", "Kurtosis", false},
      {"p8", "Variance", false},
      {"p9", "Kurtosis index", false},
      {"p10", "Peak index", false},
      {"p11", "Waveform index", false},
      {"p12", "Pulse index", false},
      {"p13", "Frequency mean value", true},
      {"p14", "Frequency variance", true},
      {"p15", "Frequency skewness", true},
      {"p16", "Frequency kurtosis", true},
      {"p17", "Gravity frequency", true},
      {"p18", "Frequency standard deviation", true},
      {"p19", "Frequency root mean square", true},
      {"p20", "Average frequency", true},
      {"p21", "Regularity degree", true},
      {"p22", "Variation parameter", true},
      {"p23", "Eighth-order moment", true},
      {"p24", "Sixteenth-order moment", true},
  }};
  return table;
}

void time_features(std::span<const double> x, FeatureVector& out,
                   const FeatureOptions& opts) {
  if (x.size() < 2) {
    throw Error(ErrorCode::InvalidInput, "time features need at least 2 samples",
                {{"length", std::to_string(x.size())}});
  }
  const auto n = static_cast<double>(x.size());

  double sum = 0.0, sum_sqrt_abs = 0.0, sum_abs = 0.0, peak = 0.0;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double a = std::abs(v);
    const double v2 = v * v;
    sum += v;
    sum_sqrt_abs += std::sqrt(a);
    sum_abs += a;
    peak = std::max(peak, a);
    m2 += v2;
    m3 += v2 * v;
    m4 += v2 * v2;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);

  const double p1 = mean;
  const double p2 = std::sqrt(ss / (n - 1.0));
  const double r = sum_sqrt_abs / n;
  const double p3 = r * r;
  const double p4 = sum_abs / n;
  const double p5 = peak;
  const double p6 = m3 / n;
  const double p7 = m4 / n;
  const double p8 = m2 / n;

  set(out, 1, p1);
  set(out, 2, p2);
  set(out, 3, p3);
  set(out, 4, p4);
  set(out, 5, p5);
  set(out, 6, p6);
  set(out, 7, p7);
  set(out, 8, p8);
  if (opts.literal_kurtosis_index) {
    ratio(out, 9, p7, p6);
  } else {
    ratio(out, 9, p7, p8 * p8);
  }
  ratio(out, 10, p5, p2);
  ratio(out, 11, p2, p4);
  ratio(out, 12, p5, p4);
}

void frequency_features(const Spectrum& spectrum, FeatureVector& out) {
  const std::size_t k_bins = spectrum.size();
  if (k_bins < 2 || spectrum.freqs_hz.size() != k_bins) {
    throw Error(ErrorCode::InvalidInput,
                "frequency features need K >= 2 matching bins",
                {{"K", std::to_string(k_bins)}});
  }
  const auto& s = spectrum.magnitudes;
  const auto& f = spectrum.freqs_hz;
  const auto kk = static_cast<double>(k_bins);

  double sum_s = 0.0, sum_fs = 0.0, sum_f2s = 0.0, sum_f4s = 0.0;
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double f2 = f[k] * f[k];
    sum_s += s[k];
    sum_fs += f[k] * s[k];
    sum_f2s += f2 * s[k];
    sum_f4s += f2 * f2 * s[k];
  }
  const double p13 = sum_s / kk;
  double c2 = 0.0, c3 = 0.0, c4 = 0.0;
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double d = s[k] - p13;
    const double d2 = d * d;
    c2 += d2;
    c3 += d2 * d;
    c4 += d2 * d2;
  }
  const double p14 = c2 / (kk - 1.0);
  set(out, 13, p13);
  set(out, 14, p14);
  ratio(out, 15, c3, kk * std::pow(p14, 1.5));
  ratio(out, 16, c4, kk * p14 * p14);

  if (tiny(sum_s)) {
    for (std::size_t k = 17; k <= 24; ++k) unset(out, k);
    return;
  }
  const double p17 = sum_fs / sum_s;
  double g2 = 0.0, g3 = 0.0, g4 = 0.0;
  for (std::size_t k = 0; k < k_bins; ++k) {
    const double d = f[k] - p17;
    const double d2 = d * d;
    g2 += d2 * s[k];
    g3 += d2 * d * s[k];
    g4 += d2 * d2 * s[k];
  }
  const double p18 = std::sqrt(g2 / (kk * sum_s));
  set(out, 17, p17);
  set(out, 18, p18);
  set(out, 19, std::sqrt(sum_f2s / sum_s));
  if (tiny(sum_f2s)) {
    unset(out, 20);
  } else {
    set(out, 20, std::sqrt(sum_f4s / sum_f2s));
  }
  ratio(out, 21, sum_f2s, std::sqrt(sum_s * sum_f4s));
  ratio(out, 22, p18, p17);
  ratio(out, 23, g3, kk * p18 * p18 * p18);
  ratio(out, 24, g4, kk * p18 * p18 * p18 * p18);
}

FeatureVector extract_features(std::span<const double> samples,
                               double sample_rate_hz,
                               const FeatureOptions& opts) {
  FeatureVector fv;
  time_features(samples, fv, opts);
  frequency_features(magnitude_spectrum(samples, sample_rate_hz), fv);
  return fv;
}

FeatureVector extract_features(const Segment& segment,
                               const FeatureOptions& opts) {
  return extract_features(segment.samples, segment.sample_rate_hz, opts);
}

std::vector<FeatureVector> extract_features_batch(std::span<const Segment> segments,
                                                  Exec exec,
                                                  const FeatureOptions& opts) {
  std::vector<FeatureVector> out(segments.size());
  const auto n = static_cast<std::ptrdiff_t>(segments.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] =
          extract_features(segments[static_cast<std::size_t>(i)], opts);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] =
          extract_features(segments[static_cast<std::size_t>(i)], opts);
    }
  }
  return out;
}

void write_feature_csv(std::span<const Segment> segments,
                       std::span<const FeatureVector> features,
                       std::ostream& os) {
  if (segments.size() != features.size()) {
    throw Error(ErrorCode::LengthMismatch, "segments and features differ in length");
  }
  std::vector<std::string> row;
  for (const auto& info : feature_table()) row.emplace_back(info.id);
  row.emplace_back("label");
  row.emplace_back("dataset_id");
  row.emplace_back("condition_id");
  write_csv_row(os, row);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    row.clear();
    for (std::size_t k = 0; k < kNumFeatures; ++k) {
      row.push_back(features[i].undefined[k] ? std::string()
                                             : format_double(features[i].values[k]));
    }
    row.emplace_back(to_string(segments[i].label));
    row.push_back(segments[i].dataset_id);
    row.push_back(segments[i].condition_id);
    write_csv_row(os, row);
  }
}

}  // namespace bdx
