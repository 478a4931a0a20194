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

#include "bdx/model/layers.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bdx/error.hpp"

namespace bdx::model {

std::size_t num_patches(std::size_t window_len, std::size_t patch_len,
                        std::size_t stride) {
  if (patch_len == 0 || stride == 0 || patch_len > window_len) {
    throw Error(ErrorCode::InvalidConfig,
                "patching needs 0 < patch_len <= window_len and stride >= 1",
                {{"window_len", std::to_string(window_len)},
                 {"patch_len", std::to_string(patch_len)},
                 {"stride", std::to_string(stride)}});
  }
  return (window_len - patch_len) / stride + 1;
}

template <typename T>
Mat<T> patchify(std::span<const T> window, std::size_t patch_len,
                std::size_t stride) {
  const std::size_t p = num_patches(window.size(), patch_len, stride);
  Mat<T> out(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(patch_len));
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < patch_len; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          window[i * stride + j];
    }
  }
  return out;
}

template <typename T>
Mat<T> value_embed(const Mat<T>& patches, const Mat<T>& kernel,
                   const Mat<T>& bias) {
  if (kernel.cols() != patches.cols() || bias.rows() != 1 ||
      bias.cols() != kernel.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "value_embed kernel/bias shape mismatch",
                {{"patch_len", std::to_string(patches.cols())},
                 {"kernel_cols", std::to_string(kernel.cols())},
                 {"bias_cols", std::to_string(bias.cols())}});
  }
  Mat<T> out = patches * kernel.transpose();
  out.rowwise() += bias.row(0);
  return out;
}

Mat<double> sinusoidal_position_table(std::size_t num_positions,
                                      std::size_t d_model) {
  if (d_model % 2 != 0) {
    throw Error(ErrorCode::OddDimension, "position table needs an even d_model",
                {{"d_model", std::to_string(d_model)}});
  }
  Mat<double> table(static_cast<Eigen::Index>(num_positions),
                    static_cast<Eigen::Index>(d_model));
  for (std::size_t k = 0; k < d_model / 2; ++k) {
    const double omega =
        std::pow(10000.0, -2.0 * static_cast<double>(k) / static_cast<double>(d_model));
    for (std::size_t t = 0; t < num_positions; ++t) {
      const double a = omega * static_cast<double>(t);
      table(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(2 * k)) = std::sin(a);
      table(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(2 * k + 1)) =
          std::cos(a);
    }
  }
  return table;
}

template <typename T>
Mat<T> layer_norm_rows(const Mat<T>& x, const Mat<T>& gamma, const Mat<T>& beta,
                       T eps, LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gamma.size() != d || beta.size() != d) {
    throw Error(ErrorCode::ShapeMismatch, "layer norm gamma/beta width mismatch");
  }
  Mat<T> xhat(n, d);
  Vec<T> rstd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const auto centered = (x.row(i).array() - mean).eval();
    const T var = centered.square().sum() / static_cast<T>(d);
    rstd(i) = T(1) / std::sqrt(var + eps);
    xhat.row(i) = centered * rstd(i);
  }
  Mat<T> y = (xhat.array().rowwise() * gamma.row(0).array()).matrix();
  y.rowwise() += beta.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->rstd = std::move(rstd);
  }
  return y;
}

template <typename T>
Mat<T> layer_norm_rows_backward(const Mat<T>& dy, const LayerNormCache<T>& cache,
                                const Mat<T>& gamma, Mat<T>* dgamma,
                                Mat<T>* dbeta) {
  const Eigen::Index d = dy.cols();
  if (dgamma) dgamma->row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  if (dbeta) dbeta->row(0) += dy.colwise().sum();
  Mat<T> dxhat = (dy.array().rowwise() * gamma.row(0).array()).matrix();
  Mat<T> dx(dy.rows(), d);
  const T inv_d = T(1) / static_cast<T>(d);
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_dxhat = dxhat.row(i).sum() * inv_d;
    const T mean_dxhat_xhat = dxhat.row(i).dot(cache.xhat.row(i)) * inv_d;
    dx.row(i) = cache.rstd(i) *
                (dxhat.row(i).array() - mean_dxhat -
                 cache.xhat.row(i).array() * mean_dxhat_xhat)
                    .matrix();
  }
  return dx;
}

std::vector<double> affine_layer_norm(std::span<const double> x,
                                      std::span<const double> gamma,
                                      std::span<const double> beta, double eps) {
  if (gamma.size() != x.size() || beta.size() != x.size() || x.empty()) {
    throw Error(ErrorCode::ShapeMismatch, "gamma and beta must match x");
  }
  Mat<double> xm(1, static_cast<Eigen::Index>(x.size()));
  Mat<double> g(1, xm.cols()), b(1, xm.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    xm(0, c) = x[i];
    g(0, c) = gamma[i];
    b(0, c) = beta[i];
  }
  const Mat<double> y = layer_norm_rows<double>(xm, g, b, eps);
  return {y.data(), y.data() + y.size()};
}

namespace {
template <typename T>
constexpr T kGeluC = static_cast<T>(0.7978845608028654);  // sqrt(2/pi)
}

template <typename T>
T gelu(T x) {
  const T inner = kGeluC<T> * (x + T(0.044715) * x * x * x);
  return T(0.5) * x * (T(1) + std::tanh(inner));
}

template <typename T>
T gelu_grad(T x) {
  const T x2 = x * x;
  const T inner = kGeluC<T> * (x + T(0.044715) * x2 * x);
  const T th = std::tanh(inner);
  const T dinner = kGeluC<T> * (T(1) + T(3) * T(0.044715) * x2);
  return T(0.5) * (T(1) + th) + T(0.5) * x * (T(1) - th * th) * dinner;
}

template <typename T>
Mat<T> gelu_matrix(const Mat<T>& x) {
  const auto a = x.array();
  const auto inner = (kGeluC<T> * (a + T(0.044715) * a.cube())).eval();
  return (T(0.5) * a * (T(1) + inner.tanh())).matrix();
}

template <typename T>
Mat<T> gelu_grad_matrix(const Mat<T>& x) {
  const auto a = x.array();
  const auto x2 = a.square().eval();
  const auto th = (kGeluC<T> * (a + T(0.044715) * x2 * a)).tanh().eval();
  const auto dinner = kGeluC<T> * (T(1) + T(3 * 0.044715) * x2);
  return (T(0.5) * (T(1) + th) + T(0.5) * a * (T(1) - th.square()) * dinner).matrix();
}

template <typename T>
void softmax_rows(Mat<T>& s, bool causal) {
  const Eigen::Index n = s.rows();
  const Eigen::Index m = s.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index valid = causal ? std::min<Eigen::Index>(i + 1, m) : m;
    auto row = s.row(i);
    const T mx = row.head(valid).maxCoeff();
    row.head(valid) = (row.head(valid).array() - mx).exp().matrix();
    const T inv = T(1) / row.head(valid).sum();
    row.head(valid) *= inv;
    for (Eigen::Index j = valid; j < m; ++j) row(j) = 0;
  }
}

template <typename T>
Mat<T> softmax_probabilities(const Mat<T>& logits) {
  Mat<T> p = logits;
  softmax_rows(p, false);
  return p;
}

template <typename T>
T cross_entropy(const Mat<T>& logits, std::span<const int> labels,
                Mat<T>* dlogits) {
  const Eigen::Index n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0) {
    throw Error(ErrorCode::ShapeMismatch, "logits rows must match labels");
  }
  if (dlogits) dlogits->setZero(n, logits.cols());
  T total = 0;
  const T inv_n = T(1) / static_cast<T>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) {
      throw Error(ErrorCode::ShapeMismatch, "label index out of range",
                  {{"label", std::to_string(y)}});
    }
    const T mx = logits.row(i).maxCoeff();
    const T lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    total += lse - logits(i, y);
    if (dlogits) {
      dlogits->row(i) = ((logits.row(i).array() - lse).exp() * inv_n).matrix();
      (*dlogits)(i, y) -= inv_n;
    }
  }
  return total * inv_n;
}

template <typename T>
T cross_entropy_onehot(const Mat<T>& logits, const Mat<T>& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols() ||
      logits.rows() == 0) {
    throw Error(ErrorCode::ShapeMismatch, "logits and targets must have equal shape");
  }
  T total = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const T mx = logits.row(i).maxCoeff();
    const T lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    total -= (targets.row(i).array() * (logits.row(i).array() - lse)).sum();
  }
  return total / static_cast<T>(logits.rows());
}

#define BDX_INSTANTIATE_LAYERS(T)                                                   \
  template Mat<T> patchify<T>(std::span<const T>, std::size_t, std::size_t);        \
  template Mat<T> value_embed<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&);      \
  template Mat<T> layer_norm_rows<T>(const Mat<T>&, const Mat<T>&, const Mat<T>&,   \
                                     T, LayerNormCache<T>*);                        \
  template Mat<T> layer_norm_rows_backward<T>(const Mat<T>&, const LayerNormCache<T>&, \
                                              const Mat<T>&, Mat<T>*, Mat<T>*);     \
  template T gelu<T>(T);                                                            \
  template T gelu_grad<T>(T);                                                       \
  template Mat<T> gelu_matrix<T>(const Mat<T>&);                                    \
  template Mat<T> gelu_grad_matrix<T>(const Mat<T>&);                               \
  template void softmax_rows<T>(Mat<T>&, bool);                                     \
  template Mat<T> softmax_probabilities<T>(const Mat<T>&);                          \
  template T cross_entropy<T>(const Mat<T>&, std::span<const int>, Mat<T>*);        \
  template T cross_entropy_onehot<T>(const Mat<T>&, const Mat<T>&);

BDX_INSTANTIATE_LAYERS(float)
BDX_INSTANTIATE_LAYERS(double)

#undef BDX_INSTANTIATE_LAYERS

}  // namespace bdx::model
