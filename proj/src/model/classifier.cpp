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

#include "bdx/model/classifier.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bdx/error.hpp"
#include "bdx/signal.hpp"

namespace bdx::model {

// ---- ParameterSet / Gradients ------------------------------------------------

template <typename T>
std::size_t ParameterSet<T>::add(std::string name, Mat<T> value, bool trainable) {
  if (index_.count(name)) {
    throw Error(ErrorCode::InvalidConfig, "duplicate parameter '" + name + "'");
  }
  Parameter<T> p;
  p.name = std::move(name);
  p.value = std::move(value);
  p.trainable_ = trainable;
  index_[p.name] = items_.size();
  items_.push_back(std::move(p));
  return items_.size() - 1;
}

template <typename T>
void ParameterSet<T>::remove(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    auto it = index_.find(n);
    if (it == index_.end()) continue;
    items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(it->second));
    index_.clear();
    for (std::size_t i = 0; i < items_.size(); ++i) index_[items_[i].name] = i;
  }
}

template <typename T>
std::size_t ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? npos : it->second;
}

template <typename T>
Parameter<T>& ParameterSet<T>::at(const std::string& name) {
  const std::size_t i = find(name);
  if (i == npos) throw Error(ErrorCode::InvalidInput, "no parameter '" + name + "'");
  return items_[i];
}

template <typename T>
const Parameter<T>& ParameterSet<T>::at(const std::string& name) const {
  const std::size_t i = find(name);
  if (i == npos) throw Error(ErrorCode::InvalidInput, "no parameter '" + name + "'");
  return items_[i];
}

template <typename T>
std::size_t ParameterSet<T>::num_trainable_scalars() const {
  std::size_t n = 0;
  for (const auto& p : items_) {
    if (p.trainable()) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

template <typename T>
std::size_t ParameterSet<T>::num_frozen_scalars() const {
  std::size_t n = 0;
  for (const auto& p : items_) {
    if (!p.trainable()) n += static_cast<std::size_t>(p.value.size());
  }
  return n;
}

template <typename T>
Gradients<T> Gradients<T>::zeros_like(const ParameterSet<T>& params) {
  Gradients<T> g;
  g.g.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].trainable()) {
      g.g[i] = Mat<T>::Zero(params[i].value.rows(), params[i].value.cols());
    }
  }
  return g;
}

template <typename T>
void Gradients<T>::set_zero() {
  for (auto& m : g) m.setZero();
}

// ---- Classifier --------------------------------------------------------------

template <typename T>
struct Classifier<T>::Cache {
  struct Layer {
    LayerNormCache<T> ln1, ln2;
    Mat<T> n1, q, k, v, o, n2, u, zq, zv;
    std::vector<Mat<T>> attn;
  };
  Mat<T> patches;
  std::vector<Layer> layers;
  LayerNormCache<T> lnf;
  Mat<T> nf;
  Vec<T> pooled;
  Vec<T> logits;
};

namespace {

template <typename T>
Mat<T> gaussian(Eigen::Index r, Eigen::Index c, double std, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std);
  Mat<T> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
  return m;
}

std::string layer_name(std::size_t l, const char* leaf) {
  return "blocks." + std::to_string(l) + "." + leaf;
}

constexpr std::uint64_t kLoraSeedSalt = 0x9E3779B97F4A7C15ULL;

}  // namespace

template <typename T>
Classifier<T>::Classifier(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  const auto len = static_cast<Eigen::Index>(cfg_.patch_len);
  const auto ffn = static_cast<Eigen::Index>(cfg_.d_model * cfg_.ffn_mult);
  const auto np = static_cast<Eigen::Index>(cfg_.num_patches());
  const auto nc = static_cast<Eigen::Index>(cfg_.n_classes);
  std::mt19937_64 rng(cfg_.seed);
  const double s = cfg_.init_std;

  params_.add("embed.weight",
              gaussian<T>(d, len, 1.0 / std::sqrt(static_cast<double>(len)), rng), true);
  params_.add("embed.bias", Mat<T>::Zero(1, d), true);
  params_.add("pos.table",
              sinusoidal_position_table(cfg_.num_patches(), cfg_.d_model).cast<T>(), true);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    params_.add(layer_name(l, "ln1.gamma"), Mat<T>::Ones(1, d), true);
    params_.add(layer_name(l, "ln1.beta"), Mat<T>::Zero(1, d), true);
    for (const char* proj : {"q", "k", "v", "out"}) {
      params_.add(layer_name(l, (std::string("attn.") + proj + ".weight").c_str()),
                  gaussian<T>(d, d, s, rng), false);
      params_.add(layer_name(l, (std::string("attn.") + proj + ".bias").c_str()),
                  Mat<T>::Zero(1, d), false);
    }
    params_.add(layer_name(l, "ln2.gamma"), Mat<T>::Ones(1, d), true);
    params_.add(layer_name(l, "ln2.beta"), Mat<T>::Zero(1, d), true);
    params_.add(layer_name(l, "ffn.fc1.weight"), gaussian<T>(ffn, d, s, rng), false);
    params_.add(layer_name(l, "ffn.fc1.bias"), Mat<T>::Zero(1, ffn), false);
    params_.add(layer_name(l, "ffn.fc2.weight"), gaussian<T>(d, ffn, s, rng), false);
    params_.add(layer_name(l, "ffn.fc2.bias"), Mat<T>::Zero(1, d), false);
  }
  params_.add("final_ln.gamma", Mat<T>::Ones(1, d), true);
  params_.add("final_ln.beta", Mat<T>::Zero(1, d), true);
  params_.add("head.weight", gaussian<T>(nc, d, s, rng), true);
  params_.add("head.bias", Mat<T>::Zero(1, nc), true);
  (void)np;

  const auto lora = cfg_.lora;
  cfg_.lora.reset();
  reindex();
  if (lora) enable_lora(*lora, cfg_.seed ^ kLoraSeedSalt);
  if (cfg_.quantize_base) quantize_base();
}

template <typename T>
void Classifier<T>::reindex() {
  auto idx = [&](const std::string& n) {
    const std::size_t i = params_.find(n);
    if (i == ParameterSet<T>::npos) {
      throw Error(ErrorCode::InvalidInput, "missing parameter '" + n + "'");
    }
    return i;
  };
  embed_w_ = idx("embed.weight");
  embed_b_ = idx("embed.bias");
  pos_ = idx("pos.table");
  lnf_g_ = idx("final_ln.gamma");
  lnf_b_ = idx("final_ln.beta");
  head_w_ = idx("head.weight");
  head_b_ = idx("head.bias");
  layers_.assign(cfg_.n_layers, LayerIdx{});
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    auto& L = layers_[l];
    L.ln1_g = idx(layer_name(l, "ln1.gamma"));
    L.ln1_b = idx(layer_name(l, "ln1.beta"));
    L.wq = idx(layer_name(l, "attn.q.weight"));
    L.bq = idx(layer_name(l, "attn.q.bias"));
    L.wk = idx(layer_name(l, "attn.k.weight"));
    L.bk = idx(layer_name(l, "attn.k.bias"));
    L.wv = idx(layer_name(l, "attn.v.weight"));
    L.bv = idx(layer_name(l, "attn.v.bias"));
    L.wo = idx(layer_name(l, "attn.out.weight"));
    L.bo = idx(layer_name(l, "attn.out.bias"));
    L.ln2_g = idx(layer_name(l, "ln2.gamma"));
    L.ln2_b = idx(layer_name(l, "ln2.beta"));
    L.w1 = idx(layer_name(l, "ffn.fc1.weight"));
    L.b1 = idx(layer_name(l, "ffn.fc1.bias"));
    L.w2 = idx(layer_name(l, "ffn.fc2.weight"));
    L.b2 = idx(layer_name(l, "ffn.fc2.bias"));
    L.qa = params_.find(layer_name(l, "attn.q.lora_A"));
    L.qb = params_.find(layer_name(l, "attn.q.lora_B"));
    L.va = params_.find(layer_name(l, "attn.v.lora_A"));
    L.vb = params_.find(layer_name(l, "attn.v.lora_B"));
  }
}

template <typename T>
void Classifier<T>::enable_lora(const LoraConfig& lora, std::uint64_t seed) {
  if (cfg_.lora) throw Error(ErrorCode::InvalidConfig, "LoRA adapters already enabled");
  if (lora.rank == 0) throw Error(ErrorCode::InvalidConfig, "LoRA rank must be >= 1");
  if (lora.rank > cfg_.d_model) {
    throw Error(ErrorCode::RankTooLarge, "LoRA rank exceeds projection dims",
                {{"rank", std::to_string(lora.rank)},
                 {"d_model", std::to_string(cfg_.d_model)}});
  }
  const auto d = static_cast<Eigen::Index>(cfg_.d_model);
  const auto r = static_cast<Eigen::Index>(lora.rank);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    if (lora.target_query) {
      params_.add(layer_name(l, "attn.q.lora_A"), gaussian<T>(r, d, lora.init_std, rng), true);
      params_.add(layer_name(l, "attn.q.lora_B"), Mat<T>::Zero(d, r), true);
    }
    if (lora.target_value) {
      params_.add(layer_name(l, "attn.v.lora_A"), gaussian<T>(r, d, lora.init_std, rng), true);
      params_.add(layer_name(l, "attn.v.lora_B"), Mat<T>::Zero(d, r), true);
    }
  }
  cfg_.lora = lora;
  reindex();
}

template <typename T>
void Classifier<T>::merge_lora() {
  if (!cfg_.lora) return;
  const T s = static_cast<T>(cfg_.lora->scale());
  std::vector<std::string> drop;
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const auto& L = layers_[l];
    auto merge = [&](std::size_t w, std::size_t a, std::size_t b) {
      if (a == ParameterSet<T>::npos) return;
      params_[w].value.noalias() += s * (params_[b].value * params_[a].value);
      params_[w].quantized.reset();
      drop.push_back(params_[a].name);
      drop.push_back(params_[b].name);
    };
    merge(L.wq, L.qa, L.qb);
    merge(L.wv, L.va, L.vb);
  }
  params_.remove(drop);
  cfg_.lora.reset();
  reindex();
}

template <typename T>
void Classifier<T>::quantize_base() {
  for (auto& p : params_) {
    if (p.trainable() || p.value.rows() <= 1) continue;  // biases stay dense
    if (p.quantized) continue;
    p.quantized = quantize_blockwise<T>(p.value);
    p.value = dequantize<T>(*p.quantized);
  }
  cfg_.quantize_base = true;
}

template <typename T>
void Classifier<T>::forward(std::span<const double> window, Cache& c) const {
  if (window.size() != cfg_.window_len) {
    throw Error(ErrorCode::ShapeMismatch, "window length does not match model",
                {{"expected", std::to_string(cfg_.window_len)},
                 {"got", std::to_string(window.size())}});
  }
  const auto normalized = instance_normalize(window);
  std::vector<T> xt(normalized.begin(), normalized.end());
  c.patches = patchify<T>(xt, cfg_.patch_len, cfg_.stride);

  const auto dh = static_cast<Eigen::Index>(cfg_.head_dim());
  const T att_scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T eps = static_cast<T>(cfg_.ln_eps);
  const T lora_s = cfg_.lora ? static_cast<T>(cfg_.lora->scale()) : T(0);

  Mat<T> h = value_embed<T>(c.patches, p(embed_w_), p(embed_b_));
  h += p(pos_);
  c.layers.resize(cfg_.n_layers);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const auto& L = layers_[l];
    auto& lc = c.layers[l];
    lc.n1 = layer_norm_rows<T>(h, p(L.ln1_g), p(L.ln1_b), eps, &lc.ln1);

    auto project = [&](std::size_t w, std::size_t b, std::size_t a, std::size_t bb,
                       Mat<T>& out, Mat<T>& z) {
      out.noalias() = lc.n1 * p(w).transpose();
      out.rowwise() += p(b).row(0);
      if (a != ParameterSet<T>::npos) {
        z.noalias() = lc.n1 * p(a).transpose();
        out.noalias() += lora_s * (z * p(bb).transpose());
      }
    };
    Mat<T> unused;
    project(L.wq, L.bq, L.qa, L.qb, lc.q, lc.zq);
    project(L.wk, L.bk, ParameterSet<T>::npos, ParameterSet<T>::npos, lc.k, unused);
    project(L.wv, L.bv, L.va, L.vb, lc.v, lc.zv);

    lc.o.resize(h.rows(), h.cols());
    lc.attn.resize(cfg_.n_heads);
    for (std::size_t hh = 0; hh < cfg_.n_heads; ++hh) {
      const auto off = static_cast<Eigen::Index>(hh) * dh;
      Mat<T> sc = lc.q.middleCols(off, dh) * lc.k.middleCols(off, dh).transpose();
      sc *= att_scale;
      softmax_rows(sc, cfg_.causal_attention);
      lc.o.middleCols(off, dh).noalias() = sc * lc.v.middleCols(off, dh);
      lc.attn[hh] = std::move(sc);
    }
    h.noalias() += lc.o * p(L.wo).transpose();
    h.rowwise() += p(L.bo).row(0);

    lc.n2 = layer_norm_rows<T>(h, p(L.ln2_g), p(L.ln2_b), eps, &lc.ln2);
    lc.u.noalias() = lc.n2 * p(L.w1).transpose();
    lc.u.rowwise() += p(L.b1).row(0);
    const Mat<T> g = gelu_matrix<T>(lc.u);
    h.noalias() += g * p(L.w2).transpose();
    h.rowwise() += p(L.b2).row(0);
  }
  c.nf = layer_norm_rows<T>(h, p(lnf_g_), p(lnf_b_), eps, &c.lnf);
  if (cfg_.pooling == Pooling::Mean) {
    c.pooled = c.nf.colwise().mean().transpose();
  } else {
    c.pooled = c.nf.row(c.nf.rows() - 1).transpose();
  }
  c.logits = p(head_w_) * c.pooled + p(head_b_).row(0).transpose();
}

template <typename T>
void Classifier<T>::backward(const Cache& c, const Vec<T>& dlogits,
                             Gradients<T>& grads, T scale) const {
  auto G = [&](std::size_t i) -> Mat<T>& { return grads.g[i]; };
  const Vec<T> dl = dlogits * scale;
  const auto np = c.nf.rows();
  const auto d = c.nf.cols();
  const auto dh = static_cast<Eigen::Index>(cfg_.head_dim());
  const T att_scale = T(1) / std::sqrt(static_cast<T>(dh));
  const T lora_s = cfg_.lora ? static_cast<T>(cfg_.lora->scale()) : T(0);

  G(head_w_).noalias() += dl * c.pooled.transpose();
  G(head_b_).row(0) += dl.transpose();
  const Vec<T> dpooled = p(head_w_).transpose() * dl;

  Mat<T> dnf = Mat<T>::Zero(np, d);
  if (cfg_.pooling == Pooling::Mean) {
    dnf.rowwise() = dpooled.transpose() / static_cast<T>(np);
  } else {
    dnf.row(np - 1) = dpooled.transpose();
  }
  Mat<T> dh_acc = layer_norm_rows_backward<T>(dnf, c.lnf, p(lnf_g_), &G(lnf_g_), &G(lnf_b_));

  for (std::size_t li = cfg_.n_layers; li-- > 0;) {
    const auto& L = layers_[li];
    const auto& lc = c.layers[li];

    // FFN branch: h2 = h1 + gelu(n2 W1^T + b1) W2^T + b2
    Mat<T> du = dh_acc * p(L.w2);
    du.array() *= gelu_grad_matrix<T>(lc.u).array();
    const Mat<T> dn2 = du * p(L.w1);
    dh_acc += layer_norm_rows_backward<T>(dn2, lc.ln2, p(L.ln2_g), &G(L.ln2_g), &G(L.ln2_b));

    // Attention branch: h1 = h + softmax(q k^T / sqrt(dh)) v Wo^T + bo
    const Mat<T> d_o = dh_acc * p(L.wo);
    Mat<T> dq(np, d), dk(np, d), dv(np, d);
    for (std::size_t hh = 0; hh < cfg_.n_heads; ++hh) {
      const auto off = static_cast<Eigen::Index>(hh) * dh;
      const Mat<T>& a = lc.attn[hh];
      const auto doh = d_o.middleCols(off, dh);
      const Mat<T> da = doh * lc.v.middleCols(off, dh).transpose();
      dv.middleCols(off, dh).noalias() = a.transpose() * doh;
      const Vec<T> rs = (da.array() * a.array()).rowwise().sum();
      Mat<T> ds = ((da.array().colwise() - rs.array()) * a.array()).matrix();
      ds *= att_scale;
      dq.middleCols(off, dh).noalias() = ds * lc.k.middleCols(off, dh);
      dk.middleCols(off, dh).noalias() = ds.transpose() * lc.q.middleCols(off, dh);
    }
    Mat<T> dn1 = dq * p(L.wq);
    dn1.noalias() += dk * p(L.wk);
    dn1.noalias() += dv * p(L.wv);

    auto lora_back = [&](std::size_t a, std::size_t b, const Mat<T>& dproj,
                         const Mat<T>& z) {
      if (a == ParameterSet<T>::npos) return;
      G(b).noalias() += lora_s * (dproj.transpose() * z);
      const Mat<T> dz = lora_s * (dproj * p(b));
      G(a).noalias() += dz.transpose() * lc.n1;
      dn1.noalias() += dz * p(a);
    };
    lora_back(L.qa, L.qb, dq, lc.zq);
    lora_back(L.va, L.vb, dv, lc.zv);

    dh_acc += layer_norm_rows_backward<T>(dn1, lc.ln1, p(L.ln1_g), &G(L.ln1_g), &G(L.ln1_b));
  }

  G(pos_) += dh_acc;
  G(embed_w_).noalias() += dh_acc.transpose() * c.patches;
  G(embed_b_).row(0) += dh_acc.colwise().sum();
}

template <typename T>
Vec<T> Classifier<T>::logits(std::span<const double> window) const {
  Cache c;
  forward(window, c);
  return c.logits;
}

template <typename T>
Vec<T> Classifier<T>::embedding(std::span<const double> window) const {
  Cache c;
  forward(window, c);
  return c.pooled;
}

template <typename T>
std::vector<Mat<T>> Classifier<T>::attention_maps(std::span<const double> window,
                                                  std::size_t layer) const {
  Cache c;
  forward(window, c);
  return c.layers.at(layer).attn;
}

template <typename T>
T Classifier<T>::accumulate_gradients(std::span<const double> window, int label,
                                      Gradients<T>& grads, T scale) const {
  if (grads.g.size() != params_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient buffers do not match parameters");
  }
  Cache c;
  forward(window, c);
  Mat<T> lrow = c.logits.transpose();
  Mat<T> dlogits;
  const int labels[1] = {label};
  const T loss = cross_entropy<T>(lrow, labels, &dlogits);
  backward(c, dlogits.row(0).transpose(), grads, scale);
  return loss;
}

template <typename T>
T Classifier<T>::loss(std::span<const std::span<const double>> windows,
                      std::span<const int> labels) const {
  if (windows.size() != labels.size() || windows.empty()) {
    throw Error(ErrorCode::LengthMismatch, "windows and labels differ in length");
  }
  Mat<T> all(static_cast<Eigen::Index>(windows.size()),
             static_cast<Eigen::Index>(cfg_.n_classes));
  for (std::size_t i = 0; i < windows.size(); ++i) {
    all.row(static_cast<Eigen::Index>(i)) = logits(windows[i]).transpose();
  }
  return cross_entropy<T>(all, labels);
}

template <typename T>
std::vector<int> predict_batch(const Classifier<T>& model,
                               std::span<const std::span<const double>> windows,
                               Exec exec) {
  std::vector<int> out(windows.size());
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  auto one = [&](std::ptrdiff_t i) {
    const Vec<T> z = model.logits(windows[static_cast<std::size_t>(i)]);
    Eigen::Index arg = 0;
    z.maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  };
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) one(i);
  }
  return out;
}

template <typename T>
std::vector<Vec<T>> embed_batch(const Classifier<T>& model,
                                std::span<const std::span<const double>> windows,
                                Exec exec) {
  std::vector<Vec<T>> out(windows.size());
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = model.embedding(windows[static_cast<std::size_t>(i)]);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[static_cast<std::size_t>(i)] = model.embedding(windows[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template struct Gradients<float>;
template struct Gradients<double>;
template class Classifier<float>;
template class Classifier<double>;
template std::vector<int> predict_batch<float>(const Classifier<float>&,
                                               std::span<const std::span<const double>>, Exec);
template std::vector<int> predict_batch<double>(const Classifier<double>&,
                                                std::span<const std::span<const double>>, Exec);
template std::vector<Vec<float>> embed_batch<float>(const Classifier<float>&,
                                                    std::span<const std::span<const double>>,
                                                    Exec);
template std::vector<Vec<double>> embed_batch<double>(const Classifier<double>&,
                                                      std::span<const std::span<const double>>,
                                                      Exec);

}  // namespace bdx::model
