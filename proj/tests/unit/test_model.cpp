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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "bdx/error.hpp"
#include "bdx/model/checkpoint.hpp"
#include "bdx/model/classifier.hpp"
#include "bdx/model/layers.hpp"
#include "bdx/model/quant.hpp"
#include "bdx/model/trainer.hpp"
#include "oracles.hpp"

using namespace bdx;
using namespace bdx::model;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 1;
  c.window_len = 64;
  c.patch_len = 16;
  c.stride = 8;
  c.n_classes = 4;
  c.seed = 3;
  return c;
}

std::vector<double> random_window(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.2, 1.5);
  std::vector<double> w(n);
  for (auto& v : w) v = nd(rng);
  return w;
}

// Moves every trainable tensor off its special initial value (ones, zeros).
template <typename T>
void perturb_trainable(Classifier<T>& m, std::uint64_t seed, double sd = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sd);
  for (auto& p : m.params()) {
    if (!p.trainable()) continue;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += static_cast<T>(nd(rng));
  }
}

template <typename T>
oracle::Tensor tensor_of(const Classifier<T>& m, const std::string& name) {
  const auto& v = m.params().at(name).value;
  oracle::Tensor t;
  t.rows = static_cast<std::size_t>(v.rows());
  t.cols = static_cast<std::size_t>(v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r)
    for (Eigen::Index c = 0; c < v.cols(); ++c) t.v.push_back(static_cast<long double>(v(r, c)));
  return t;
}

oracle::ModelShape shape_of(const ModelConfig& c) {
  oracle::ModelShape s{c.patch_len, c.stride, c.d_model, c.n_heads, c.n_layers, c.n_classes};
  s.causal = c.causal_attention;
  s.mean_pool = c.pooling == Pooling::Mean;
  s.ln_eps = static_cast<long double>(c.ln_eps);
  if (c.lora) {
    s.lora_scale = static_cast<long double>(c.lora->scale());
    s.lora_q = c.lora->target_query;
    s.lora_v = c.lora->target_value;
  }
  return s;
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidInput;
}

// Max relative error between analytic and central-difference gradients over
// every trainable scalar of a two-example batch.
double gradient_check(Classifier<double>& m, double h = 1e-5) {
  const auto w0 = random_window(m.config().window_len, 1);
  const auto w1 = random_window(m.config().window_len, 2);
  const std::vector<std::span<const double>> batch{w0, w1};
  const std::vector<int> labels{1, 3};
  auto grads = Gradients<double>::zeros_like(m.params());
  m.accumulate_gradients(w0, labels[0], grads, 0.5);
  m.accumulate_gradients(w1, labels[1], grads, 0.5);
  double worst = 0.0;
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    auto& p = m.params()[i];
    if (!p.trainable()) continue;
    REQUIRE(grads.has(i));
    for (Eigen::Index j = 0; j < p.value.size(); ++j) {
      double& x = p.value.data()[j];
      const double keep = x;
      x = keep + h;
      const double up = m.loss(batch, labels);
      x = keep - h;
      const double down = m.loss(batch, labels);
      x = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grads.g[i].data()[j];
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
      worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
  }
  return worst;
}

// Bitwise CRC-32 (reflected, poly 0xEDB88320) over all but the trailing four
// bytes, written little-endian into them.
void reseal(std::vector<std::uint8_t>& b) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i + 4 < b.size(); ++i) {
    crc ^= b[i];
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  crc ^= 0xFFFFFFFFu;
  for (int k = 0; k < 4; ++k) b[b.size() - 4 + k] = static_cast<std::uint8_t>(crc >> (8 * k));
}

}  // namespace

TEST_CASE("patchify and patch counts") {
  CHECK(num_patches(2048, 128, 8) == 241);
  CHECK(num_patches(64, 16, 8) == 7);
  std::vector<double> w(10);
  for (std::size_t i = 0; i < 10; ++i) w[i] = static_cast<double>(i);
  const auto p = patchify<double>(w, 4, 3);
  REQUIRE(p.rows() == 3);
  REQUIRE(p.cols() == 4);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(1, 0) == 3.0);
  CHECK(p(2, 3) == 9.0);
}

TEST_CASE("sinusoidal position table") {
  const auto t = sinusoidal_position_table(5, 8);
  for (std::size_t pos = 0; pos < 5; ++pos) {
    for (std::size_t k = 0; k < 4; ++k) {
      const long double w = std::pow(10000.0L, -2.0L * k / 8.0L);
      CHECK(t(pos, 2 * k) == doctest::Approx(static_cast<double>(std::sin(w * pos))).epsilon(1e-14));
      CHECK(t(pos, 2 * k + 1) == doctest::Approx(static_cast<double>(std::cos(w * pos))).epsilon(1e-14));
    }
  }
}

TEST_CASE("affine layer norm") {
  const std::vector<double> x{1, 2, 3, 4}, g{1, 2, 0.5, -1}, b{0, 1, 0, 2};
  const auto y = affine_layer_norm(x, g, b);
  const double rstd = 1.0 / std::sqrt(1.25 + 1e-5);
  const std::vector<double> want{-1.5 * rstd, 2 * -0.5 * rstd + 1, 0.5 * 0.5 * rstd, -1.5 * rstd + 2};
  for (std::size_t i = 0; i < 4; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-14));
}

TEST_CASE("GELU tanh form and its derivative") {
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double c = std::sqrt(2.0 / std::numbers::pi);
    CHECK(gelu(x) == doctest::Approx(0.5 * x * (1 + std::tanh(c * (x + 0.044715 * x * x * x)))));
    const double h = 1e-6;
    CHECK(gelu_grad(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-8));
  }
  Mat<double> m(1, 3);
  m << -1.0, 0.25, 4.0;
  const auto gm = gelu_matrix<double>(m);
  const auto gg = gelu_grad_matrix<double>(m);
  for (int i = 0; i < 3; ++i) {
    CHECK(gm(0, i) == doctest::Approx(gelu(m(0, i))).epsilon(1e-14));
    CHECK(gg(0, i) == doctest::Approx(gelu_grad(m(0, i))).epsilon(1e-12));
  }
}

TEST_CASE("causal softmax zeroes the future") {
  Mat<double> s = Mat<double>::Random(4, 4);
  softmax_rows(s, true);
  for (int i = 0; i < 4; ++i) {
    CHECK(s.row(i).sum() == doctest::Approx(1.0));
    for (int j = i + 1; j < 4; ++j) CHECK(s(i, j) == 0.0);
  }
  CHECK(s(0, 0) == 1.0);
}

TEST_CASE("cross entropy: value, one-hot form, gradient") {
  Mat<double> logits(2, 3);
  logits << 1.0, 2.0, 0.5, -1.0, 0.0, 3.0;
  const std::vector<int> labels{1, 2};
  long double want = 0;
  for (int r = 0; r < 2; ++r) {
    long double z = 0;
    for (int c = 0; c < 3; ++c) z += std::exp(static_cast<long double>(logits(r, c)));
    want += -std::log(std::exp(static_cast<long double>(logits(r, labels[r]))) / z);
  }
  want /= 2;
  Mat<double> d;
  CHECK(cross_entropy(logits, labels, &d) == doctest::Approx(static_cast<double>(want)).epsilon(1e-14));
  Mat<double> onehot = Mat<double>::Zero(2, 3);
  onehot(0, 1) = onehot(1, 2) = 1.0;
  CHECK(cross_entropy_onehot(logits, onehot) == doctest::Approx(static_cast<double>(want)).epsilon(1e-14));
  const auto probs = softmax_probabilities(logits);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(d(r, c) == doctest::Approx((probs(r, c) - onehot(r, c)) / 2.0).epsilon(1e-12));
  // large logits stay finite
  Mat<double> big(1, 2);
  big << 1000.0, -1000.0;
  CHECK(std::isfinite(cross_entropy(big, std::vector<int>{1})));
}

TEST_CASE("config validation and JSON") {
  auto c = tiny_config();
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.n_heads = 3;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = c;
  bad.patch_len = 65;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = c;
  bad.labels = {"a"};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::InvalidConfig);
  bad = c;
  bad.lora = LoraConfig{32, 1.0};
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::RankTooLarge);

  c.labels = {"ball", "inner", "normal", "outer"};
  c.lora = LoraConfig{};
  c.lora->rank = 4;
  const auto back = model_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.labels == c.labels);
  auto j = to_json(c);
  j["dropout"] = 0.1;
  CHECK(code_of([&] { model_config_from_json(j); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("parameter partition") {
  Classifier<float> m(ModelConfig{});
  for (const auto& p : m.params()) {
    const bool frozen_kind = p.name.find(".attn.") != std::string::npos ||
                             p.name.find(".ffn.") != std::string::npos;
    INFO(p.name);
    CHECK(p.trainable() == !frozen_kind);
  }
  CHECK(m.params().at("embed.weight").trainable());
  CHECK(m.params().at("pos.table").trainable());
  CHECK(m.params().at("head.weight").trainable());
  CHECK_FALSE(m.params().at("blocks.0.attn.q.weight").trainable());
  CHECK_FALSE(m.params().at("blocks.2.ffn.fc2.bias").trainable());
  CHECK(m.params().num_frozen_scalars() > m.params().num_trainable_scalars());
  const auto grads = Gradients<float>::zeros_like(m.params());
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    CHECK(grads.has(i) == m.params()[i].trainable());
  }
}

TEST_CASE("initialization statistics") {
  Classifier<double> m(ModelConfig{});
  auto stats = [](const Mat<double>& v) {
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    return std::pair{mean, sd};
  };
  const auto [qm, qs] = stats(m.params().at("blocks.0.attn.q.weight").value);
  CHECK(std::abs(qm) < 1e-3);
  CHECK(qs == doctest::Approx(0.02).epsilon(0.05));
  const auto [em, es] = stats(m.params().at("embed.weight").value);
  CHECK(std::abs(em) < 0.01);
  CHECK(es == doctest::Approx(1.0 / std::sqrt(128.0)).epsilon(0.05));
  CHECK(m.params().at("head.bias").value.isZero());
  CHECK(m.params().at("blocks.1.ln2.gamma").value.isOnes());
}

TEST_CASE("forward pass matches the loop oracle") {
  for (bool causal : {true, false}) {
    for (auto pooling : {Pooling::Mean, Pooling::Last}) {
      auto cfg = tiny_config();
      cfg.n_heads = 2;
      cfg.causal_attention = causal;
      cfg.pooling = pooling;
      Classifier<double> m(cfg);
      perturb_trainable(m, 5);
      const auto w = random_window(cfg.window_len, 9);
      const auto got = m.logits(w);
      const auto want = oracle::model_logits(w, shape_of(cfg), [&](const std::string& n) { return tensor_of(m, n); });
      for (std::size_t k = 0; k < cfg.n_classes; ++k) {
        CHECK(std::abs(got(static_cast<Eigen::Index>(k)) - static_cast<double>(want[k])) < 1e-10);
      }
    }
  }
}

TEST_CASE("window length is checked") {
  Classifier<double> m(tiny_config());
  CHECK(code_of([&] { m.logits(random_window(63, 1)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("analytic gradients match central differences") {
  Classifier<double> m(tiny_config());
  perturb_trainable(m, 7);
  CHECK(gradient_check(m) <= 1e-4);
}

TEST_CASE("gradients with LoRA adapters and last-token pooling") {
  auto cfg = tiny_config();
  cfg.pooling = Pooling::Last;
  cfg.n_heads = 2;
  Classifier<double> m(cfg);
  m.enable_lora(LoraConfig{4, 8.0}, 11);
  perturb_trainable(m, 8);
  // some adapter gradients are ~1e-7; a wider step keeps round-off below them
  CHECK(gradient_check(m, 1e-4) <= 1e-4);
}

TEST_CASE("fresh LoRA is bitwise neutral; merge equals the adapted forward") {
  auto cfg = tiny_config();
  Classifier<double> base(cfg);
  perturb_trainable(base, 2);
  Classifier<double> adapted = base;
  adapted.enable_lora(LoraConfig{4, 16.0}, 1);
  CHECK(adapted.has_lora());
  CHECK(adapted.params().at("blocks.0.attn.q.lora_B").value.isZero());
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto w = random_window(cfg.window_len, 100 + s);
    const auto a = base.logits(w);
    const auto b = adapted.logits(w);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 4) == 0);
  }
  perturb_trainable(adapted, 3, 0.05);
  Classifier<double> merged = adapted;
  merged.merge_lora();
  CHECK_FALSE(merged.has_lora());
  CHECK(merged.params().find("blocks.0.attn.q.lora_A") == ParameterSet<double>::npos);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto w = random_window(cfg.window_len, 200 + s);
    CHECK((adapted.logits(w) - merged.logits(w)).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto w = random_window(cfg.window_len, 7);
  const auto want = oracle::model_logits(w, shape_of(adapted.config()),
                                         [&](const std::string& n) { return tensor_of(adapted, n); });
  for (int k = 0; k < 4; ++k) CHECK(std::abs(adapted.logits(w)(k) - static_cast<double>(want[k])) < 1e-10);
}

TEST_CASE("LoRA init is seeded") {
  Classifier<double> a(tiny_config()), b(tiny_config()), c(tiny_config());
  a.enable_lora(LoraConfig{}, 5);
  b.enable_lora(LoraConfig{}, 5);
  c.enable_lora(LoraConfig{}, 6);
  CHECK(a.params().at("blocks.1.attn.v.lora_A").value == b.params().at("blocks.1.attn.v.lora_A").value);
  CHECK(a.params().at("blocks.1.attn.v.lora_A").value != c.params().at("blocks.1.attn.v.lora_A").value);
}

TEST_CASE("int4 blockwise quantization") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 0.3);
  Mat<double> w(37, 29);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = nd(rng);
  const auto q = quantize_blockwise(w, Exec::Serial);
  CHECK(q.num_blocks() == (37 * 29 + 63) / 64);
  CHECK(q.packed.size() == (37 * 29 + 1) / 2);
  CHECK(q == quantize_blockwise(w, Exec::Parallel));
  const auto d = dequantize<double>(q, Exec::Serial);
  CHECK(d == dequantize<double>(q, Exec::Parallel));
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    const auto blk = static_cast<std::size_t>(i) / 64;
    double absmax = 0;
    for (std::size_t j = blk * 64; j < std::min<std::size_t>(w.size(), (blk + 1) * 64); ++j)
      absmax = std::max(absmax, std::abs(w.data()[j]));
    CHECK(q.absmax[blk] == absmax);
    const int code = q.code(static_cast<std::size_t>(i));
    CHECK(code >= -7);
    CHECK(code <= 7);
    CHECK(code == static_cast<int>(std::lround(w.data()[i] / absmax * 7)));
    CHECK(d.data()[i] == absmax * (code / 7.0));
    CHECK(std::abs(d.data()[i] - w.data()[i]) <= absmax / 7.0);
  }
}

TEST_CASE("equal-magnitude blocks and zero blocks round-trip exactly") {
  Mat<float> w(2, 64);
  for (int j = 0; j < 64; ++j) {
    w(0, j) = j % 2 ? 0.75f : -0.75f;
    w(1, j) = 0.0f;
  }
  CHECK(dequantize<float>(quantize_blockwise(w)) == w);
}

TEST_CASE("quantized base uses dequantized frozen weights") {
  auto cfg = tiny_config();
  Classifier<double> m(cfg);
  const auto before = m.params().at("blocks.0.attn.k.weight").value;
  m.quantize_base();
  const auto& p = m.params().at("blocks.0.attn.k.weight");
  REQUIRE(p.quantized);
  CHECK(p.value == dequantize<double>(*p.quantized));
  CHECK((p.value - before).cwiseAbs().maxCoeff() <= before.cwiseAbs().maxCoeff() / 7.0);
  CHECK_FALSE(m.params().at("head.weight").quantized);
  const auto w = random_window(cfg.window_len, 4);
  const auto want = oracle::model_logits(w, shape_of(cfg), [&](const std::string& n) { return tensor_of(m, n); });
  for (int k = 0; k < 4; ++k) CHECK(std::abs(m.logits(w)(k) - static_cast<double>(want[k])) < 1e-10);
}

TEST_CASE("Adam update matches the textbook formula") {
  auto cfg = tiny_config();
  Classifier<double> m(cfg);
  TrainHyper hyper;
  hyper.lr = 0.01;
  Adam<double> adam(m.params(), hyper);
  auto grads = Gradients<double>::zeros_like(m.params());
  const auto idx = m.params().find("head.bias");
  const double x0 = m.params()[idx].value(0, 0);
  const double g1 = 0.3, g2 = -0.1;
  grads.g[idx](0, 0) = g1;
  adam.step(m.params(), grads);
  grads.g[idx](0, 0) = g2;
  adam.step(m.params(), grads);
  long double x = x0, mm = 0, vv = 0;
  int t = 0;
  for (long double g : {(long double)g1, (long double)g2}) {
    ++t;
    mm = 0.9L * mm + 0.1L * g;
    vv = 0.999L * vv + 0.001L * g * g;
    const long double mh = mm / (1 - std::pow(0.9L, t));
    const long double vh = vv / (1 - std::pow(0.999L, t));
    x -= 0.01L * mh / (std::sqrt(vh) + 1e-8L);
  }
  CHECK(m.params()[idx].value(0, 0) == doctest::Approx(static_cast<double>(x)).epsilon(1e-10));
  CHECK(adam.steps() == 2);
}

namespace {

// Two classes a model separates easily: low- vs high-frequency sinusoids.
std::vector<std::vector<double>> toy_windows(std::size_t per_class, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0, 2 * std::numbers::pi);
  std::normal_distribution<double> nd(0, 0.1);
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const double f = i % 2 ? 0.3 : 0.05;
    const double p = ph(rng);
    std::vector<double> w(len);
    for (std::size_t t = 0; t < len; ++t) w[t] = std::sin(2 * std::numbers::pi * f * t + p) + nd(rng);
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Example> as_examples(const std::vector<std::vector<double>>& ws) {
  std::vector<Example> ex;
  for (std::size_t i = 0; i < ws.size(); ++i) ex.push_back({ws[i], static_cast<int>(i % 2)});
  return ex;
}

}  // namespace

TEST_CASE("training: frozen weights untouched, deterministic, learns a toy task") {
  auto cfg = tiny_config();
  cfg.n_classes = 2;
  const auto tr = toy_windows(32, 64, 1), va = toy_windows(8, 64, 2);
  const auto trx = as_examples(tr), vax = as_examples(va);
  TrainHyper hyper;
  hyper.epochs = 20;
  hyper.batch_size = 8;
  hyper.lr = 1e-2;
  hyper.stop_at_perfect_val = false;

  Classifier<float> m(cfg);
  const Classifier<float> start = m;
  const auto r1 = train(m, std::span<const Example>(trx), std::span<const Example>(vax), hyper);
  CHECK(r1.log.size() == 20);
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    const auto& a = m.params()[i].value;
    const auto& b = start.params()[i].value;
    if (!m.params()[i].trainable()) {
      REQUIRE(std::memcmp(a.data(), b.data(), sizeof(float) * static_cast<std::size_t>(a.size())) == 0);
    }
  }
  CHECK(m.params().at("head.weight").value != start.params().at("head.weight").value);

  Classifier<float> again(cfg);
  const auto r2 = train(again, std::span<const Example>(trx), std::span<const Example>(vax), hyper);
  for (std::size_t e = 0; e < r1.log.size(); ++e) {
    CHECK(r1.log[e].train_loss == r2.log[e].train_loss);
    CHECK(r1.log[e].val_accuracy == r2.log[e].val_accuracy);
  }
  CHECK(m.params().at("embed.weight").value == again.params().at("embed.weight").value);

  // best epoch = earliest maximum of the validation curve
  std::size_t best = 0;
  for (std::size_t e = 0; e < r1.log.size(); ++e) {
    if (r1.log[e].val_accuracy > r1.log[best].val_accuracy) best = e;
  }
  CHECK(r1.best_epoch == best + 1);
  CHECK(accuracy(m, std::span<const Example>(vax), Exec::Serial) == r1.best_val_accuracy);
  CHECK(r1.best_val_accuracy >= 0.9);
}

TEST_CASE("training stops once validation is perfect") {
  auto cfg = tiny_config();
  cfg.n_classes = 2;
  const auto tr = toy_windows(32, 64, 3), va = toy_windows(8, 64, 4);
  const auto trx = as_examples(tr), vax = as_examples(va);
  TrainHyper hyper;
  hyper.epochs = 40;
  hyper.batch_size = 8;
  hyper.lr = 3e-3;
  Classifier<float> m(cfg);
  const auto r = train(m, std::span<const Example>(trx), std::span<const Example>(vax), hyper);
  CHECK(r.best_val_accuracy == 1.0);
  CHECK(r.stopped_early);
  CHECK(r.log.size() == r.best_epoch);
}

TEST_CASE("parallel prediction equals serial") {
  auto cfg = tiny_config();
  Classifier<float> m(cfg);
  perturb_trainable(m, 1, 0.5);
  const auto ws = toy_windows(20, 64, 9);
  std::vector<std::span<const double>> spans(ws.begin(), ws.end());
  CHECK(predict_batch(m, std::span<const std::span<const double>>(spans), Exec::Serial) ==
        predict_batch(m, std::span<const std::span<const double>>(spans), Exec::Parallel));
  const auto e1 = embed_batch(m, std::span<const std::span<const double>>(spans), Exec::Serial);
  const auto e2 = embed_batch(m, std::span<const std::span<const double>>(spans), Exec::Parallel);
  for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e1[i] == e2[i]);
}

TEST_CASE("checkpoint round trip") {
  oracle::TempDir dir("ckpt");
  auto cfg = tiny_config();
  cfg.labels = {"ball", "inner", "normal", "outer"};
  Classifier<float> m(cfg);
  perturb_trainable(m, 4);
  m.enable_lora(LoraConfig{2, 4.0}, 3);
  m.quantize_base();
  save_checkpoint(m, dir / "m.bdlm");
  const auto back = load_checkpoint<float>(dir / "m.bdlm");
  CHECK(back.config().labels == cfg.labels);
  CHECK(back.has_lora());
  REQUIRE(back.params().size() == m.params().size());
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    CHECK(back.params()[i].name == m.params()[i].name);
    CHECK(back.params()[i].trainable() == m.params()[i].trainable());
    CHECK(back.params()[i].value == m.params()[i].value);
    CHECK(back.params()[i].quantized.has_value() == m.params()[i].quantized.has_value());
  }
  const auto w = random_window(64, 5);
  const auto a = m.logits(w), b = back.logits(w);
  CHECK(std::memcmp(a.data(), b.data(), sizeof(float) * 4) == 0);
  CHECK(serialize_checkpoint(back) == serialize_checkpoint(m));
}

TEST_CASE("checkpoint corruption is detected") {
  Classifier<float> m(tiny_config());
  const auto bytes = serialize_checkpoint(m);
  CHECK(bytes[0] == 'B');
  CHECK(bytes[3] == 'M');

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(code_of([&] { deserialize_checkpoint<float>(flipped); }) == ErrorCode::CorruptFile);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of([&] { deserialize_checkpoint<float>(magic); }) == ErrorCode::CorruptFile);

  for (std::size_t cut : {std::size_t{0}, std::size_t{5}, bytes.size() / 3, bytes.size() - 1}) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    CHECK(code_of([&] { deserialize_checkpoint<float>(part); }) == ErrorCode::CorruptFile);
  }

  auto version = bytes;
  version[4] = 9;
  reseal(version);
  CHECK(code_of([&] { deserialize_checkpoint<float>(version); }) == ErrorCode::VersionMismatch);

  CHECK(code_of([] { load_checkpoint<float>("/nonexistent/m.bdlm"); }) == ErrorCode::Io);
}
