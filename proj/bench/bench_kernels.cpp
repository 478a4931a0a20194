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

// Serial reference vs OpenMP path for each parallel kernel. Arg 0 = serial,
// 1 = parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "bdx/features.hpp"
#include "bdx/model/classifier.hpp"
#include "bdx/model/quant.hpp"
#include "bdx/signal.hpp"
#include "bdx/spectral.hpp"

namespace {

bdx::Exec exec_of(const benchmark::State& st) {
  return st.range(0) ? bdx::Exec::Parallel : bdx::Exec::Serial;
}

const std::vector<bdx::Segment>& segments() {
  static const auto segs = [] {
    bdx::FixtureDatasetSpec spec;
    spec.length = 2048 + 63 * 1024;
    std::vector<bdx::Segment> out;
    for (const auto& sig : bdx::fixture_dataset(spec)) {
      for (auto& s : bdx::segment_sliding_window(sig, {})) out.push_back(std::move(s));
    }
    return out;
  }();
  return segs;
}

void BM_FeaturesBatch(benchmark::State& st) {
  const auto& segs = segments();
  for (auto _ : st) {
    auto fv = bdx::extract_features_batch(segs, exec_of(st));
    benchmark::DoNotOptimize(fv.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(segs.size()));
}
BENCHMARK(BM_FeaturesBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Stft(benchmark::State& st) {
  const auto sig = bdx::synth_signal(bdx::fixture_spec(bdx::FaultLabel::OuterRace, 1, 1 << 18));
  for (auto _ : st) {
    auto sg = bdx::stft(sig.samples, sig.sample_rate_hz, {}, exec_of(st));
    benchmark::DoNotOptimize(sg.frames.data());
  }
}
BENCHMARK(BM_Stft)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& st) {
  bdx::model::ModelConfig cfg;
  cfg.d_model = 64;
  cfg.n_layers = 2;
  cfg.stride = 32;
  const bdx::model::Classifier<float> m(cfg);
  const auto& segs = segments();
  std::vector<std::span<const double>> windows;
  for (std::size_t i = 0; i < 64 && i < segs.size(); ++i) windows.push_back(segs[i].samples);
  for (auto _ : st) {
    auto pred = bdx::model::predict_batch(m, std::span<const std::span<const double>>(windows), exec_of(st));
    benchmark::DoNotOptimize(pred.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(windows.size()));
}
BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_QuantizeRoundTrip(benchmark::State& st) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd(0.0f, 0.02f);
  bdx::model::Mat<float> w(1024, 1024);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
  for (auto _ : st) {
    const auto q = bdx::model::quantize_blockwise(w, exec_of(st));
    auto d = bdx::model::dequantize<float>(q, exec_of(st));
    benchmark::DoNotOptimize(d.data());
  }
  st.SetBytesProcessed(st.iterations() * static_cast<std::int64_t>(w.size() * sizeof(float)));
}
BENCHMARK(BM_QuantizeRoundTrip)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
