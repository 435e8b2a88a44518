/* Copyright 2026 The ragaxai Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "ragaxai/nd/graph.hpp"

namespace ragaxai::nd {

namespace detail {

template <typename S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MapMat = Eigen::Map<RowMat<S>>;
template <typename S>
using ConstMapMat = Eigen::Map<const RowMat<S>>;
template <typename S>
using StridedMat = Eigen::Map<RowMat<S>, 0, Eigen::OuterStride<>>;
template <typename S>
using ConstStridedMat = Eigen::Map<const RowMat<S>, 0, Eigen::OuterStride<>>;

inline void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

// Vanishing gradients through long sequences drift toward the subnormal range,
// where float arithmetic is orders of magnitude slower. Values below
// sqrt(min normal) are dropped so that their products stay normal too.
template <typename S>
S flush_subnormal(S v) {
  static const S threshold = std::sqrt(std::numeric_limits<S>::min());
  return std::abs(v) < threshold ? S(0) : v;
}

template <typename S>
S sigmoid(S x) {
  return S(1) / (S(1) + std::exp(-x));
}

// Patch matrix for a same-padded, stride-1 kh x kw convolution of one
// T x F x C image: row (t*F + f), column ((dh*kw + dw)*C + c).
template <typename S>
void im2col(const S* x, int T, int F, int C, int kh, int kw, S* col) {
  const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const std::size_t K = static_cast<std::size_t>(kh * kw * C);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      S* row = col + (static_cast<std::size_t>(t) * F + f) * K;
      for (int dh = 0; dh < kh; ++dh) {
        const int tt = t + dh - ph;
        for (int dw = 0; dw < kw; ++dw) {
          const int ff = f + dw - pw;
          S* dst = row + static_cast<std::size_t>(dh * kw + dw) * C;
          if (tt < 0 || tt >= T || ff < 0 || ff >= F) {
            std::fill(dst, dst + C, S(0));
          } else {
            const S* src = x + (static_cast<std::size_t>(tt) * F + ff) * C;
            std::copy(src, src + C, dst);
          }
        }
      }
    }
  }
}

template <typename S>
void col2im_add(const S* col, int T, int F, int C, int kh, int kw, S* dx) {
  const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;
  const std::size_t K = static_cast<std::size_t>(kh * kw * C);
  for (int t = 0; t < T; ++t) {
    for (int f = 0; f < F; ++f) {
      const S* row = col + (static_cast<std::size_t>(t) * F + f) * K;
      for (int dh = 0; dh < kh; ++dh) {
        const int tt = t + dh - ph;
        if (tt < 0 || tt >= T) continue;
        for (int dw = 0; dw < kw; ++dw) {
          const int ff = f + dw - pw;
          if (ff < 0 || ff >= F) continue;
          const S* src = row + static_cast<std::size_t>(dh * kw + dw) * C;
          S* dst = dx + (static_cast<std::size_t>(tt) * F + ff) * C;
          for (int c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and structural ops

template <typename S>
Var<S> relu(Var<S> x) {
  const Tensor<S>& X = x.value();
  Tensor<S> out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = X[i] > S(0) ? X[i] : S(0);
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [xi](Graph<S>& g, const Tensor<S>& dy) {
    const Tensor<S>& X = g.value(xi);
    Tensor<S>& dx = g.grad(xi);
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (X[i] > S(0)) dx[i] += dy[i];
    }
  });
}

template <typename S>
Var<S> reshape(Var<S> x, Shape shape) {
  Tensor<S> out = x.value().reshaped(std::move(shape));
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [xi](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i];
  });
}

template <typename S>
Var<S> add(Var<S> a, Var<S> b) {
  detail::require(a.shape() == b.shape(), "add: shape mismatch");
  Tensor<S> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  const int ai = a.id(), bi = b.id();
  return a.graph().record(std::move(out), {a, b}, [ai, bi](Graph<S>& g, const Tensor<S>& dy) {
    for (int id : {ai, bi}) {
      if (!g.requires_grad(id)) continue;
      Tensor<S>& d = g.grad(id);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i];
    }
  });
}

template <typename S>
Var<S> mul(Var<S> a, Var<S> b) {
  detail::require(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor<S> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  const int ai = a.id(), bi = b.id();
  return a.graph().record(std::move(out), {a, b}, [ai, bi](Graph<S>& g, const Tensor<S>& dy) {
    const Tensor<S>& A = g.value(ai);
    const Tensor<S>& B = g.value(bi);
    if (g.requires_grad(ai)) {
      Tensor<S>& d = g.grad(ai);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * B[i];
    }
    if (g.requires_grad(bi)) {
      Tensor<S>& d = g.grad(bi);
      for (std::size_t i = 0; i < dy.size(); ++i) d[i] += dy[i] * A[i];
    }
  });
}

template <typename S>
Var<S> scale(Var<S> x, S factor) {
  Tensor<S> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.value()[i] * factor;
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [xi, factor](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * factor;
  });
}

template <typename S>
Var<S> sum(Var<S> x) {
  double acc = 0.0;
  for (S v : x.value().values()) acc += v;
  const int xi = x.id();
  return x.graph().record(Tensor<S>({1}, {static_cast<S>(acc)}), {x},
                          [xi](Graph<S>& g, const Tensor<S>& dy) {
                            Tensor<S>& dx = g.grad(xi);
                            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[0];
                          });
}

template <typename S>
Var<S> mean(Var<S> x) {
  return scale(sum(x), static_cast<S>(1.0 / static_cast<double>(x.value().size())));
}

// Frames [t0, t1) along axis 1.
template <typename S>
Var<S> slice_time(Var<S> x, int t0, int t1) {
  const Tensor<S>& X = x.value();
  detail::require(X.rank() >= 2 && 0 <= t0 && t0 < t1 && t1 <= X.dim(1), "slice_time: bad range");
  const int B = X.dim(0), T = X.dim(1);
  const std::size_t inner = X.size() / (static_cast<std::size_t>(B) * T);
  Shape shape = X.shape();
  shape[1] = t1 - t0;
  Tensor<S> out(shape);
  const std::size_t span = static_cast<std::size_t>(t1 - t0) * inner;
  for (int b = 0; b < B; ++b) {
    const S* src = X.data() + (static_cast<std::size_t>(b) * T + t0) * inner;
    std::copy(src, src + span, out.data() + static_cast<std::size_t>(b) * span);
  }
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [=](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (int b = 0; b < B; ++b) {
      S* dst = dx.data() + (static_cast<std::size_t>(b) * T + t0) * inner;
      const S* src = dy.data() + static_cast<std::size_t>(b) * span;
      for (std::size_t i = 0; i < span; ++i) dst[i] += src[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Layers

// Same-padded, stride-1 2-D cross-correlation.
// x: [B, T, F, Cin], kernel: [kh, kw, Cin, Cout], bias: [Cout] -> [B, T, F, Cout].
template <typename S>
Var<S> conv2d(Var<S> x, Var<S> kernel, Var<S> bias) {
  const Tensor<S>& X = x.value();
  const Tensor<S>& W = kernel.value();
  detail::require(X.rank() == 4 && W.rank() == 4, "conv2d: expected 4-d input and kernel");
  detail::require(X.dim(3) == W.dim(2), "conv2d: input has " + std::to_string(X.dim(3)) +
                                            " channels, kernel expects " + std::to_string(W.dim(2)));
  detail::require(bias.value().size() == static_cast<std::size_t>(W.dim(3)), "conv2d: bias size mismatch");
  const int B = X.dim(0), T = X.dim(1), F = X.dim(2), C = X.dim(3);
  const int kh = W.dim(0), kw = W.dim(1), O = W.dim(3);
  const int K = kh * kw * C;
  const int rows = T * F;

  Tensor<S> out({B, T, F, O});
  Buffer<S> col(static_cast<std::size_t>(rows) * K);
  detail::ConstMapMat<S> Wm(W.data(), K, O);
  Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>> bv(bias.value().data(), O);
  for (int b = 0; b < B; ++b) {
    detail::im2col(X.data() + static_cast<std::size_t>(b) * rows * C, T, F, C, kh, kw, col.data());
    detail::MapMat<S> Y(out.data() + static_cast<std::size_t>(b) * rows * O, rows, O);
    Y.noalias() = detail::ConstMapMat<S>(col.data(), rows, K) * Wm;
    Y.rowwise() += bv;
  }

  const int xi = x.id(), wi = kernel.id(), bi = bias.id();
  return x.graph().record(std::move(out), {x, kernel, bias}, [=](Graph<S>& g, const Tensor<S>& dy) {
    const Tensor<S>& X = g.value(xi);
    const Tensor<S>& W = g.value(wi);
    const bool need_x = g.requires_grad(xi), need_w = g.requires_grad(wi), need_b = g.requires_grad(bi);
    Buffer<S> col(static_cast<std::size_t>(rows) * K);
    detail::ConstMapMat<S> Wm(W.data(), K, O);
    for (int b = 0; b < B; ++b) {
      detail::ConstMapMat<S> dY(dy.data() + static_cast<std::size_t>(b) * rows * O, rows, O);
      if (need_w) {
        detail::im2col(X.data() + static_cast<std::size_t>(b) * rows * C, T, F, C, kh, kw, col.data());
        detail::MapMat<S>(g.grad(wi).data(), K, O).noalias() +=
            detail::ConstMapMat<S>(col.data(), rows, K).transpose() * dY;
      }
      if (need_b) {
        Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(bi).data(), O) += dY.colwise().sum();
      }
      if (need_x) {
        detail::MapMat<S> dcol(col.data(), rows, K);
        dcol.noalias() = dY * Wm.transpose();
        detail::col2im_add(col.data(), T, F, C, kh, kw, g.grad(xi).data() + static_cast<std::size_t>(b) * rows * C);
      }
    }
  });
}

// Max over non-overlapping frequency windows of width w; time is untouched.
// x: [B, T, F, C] -> [B, T, ceil(F / w), C]. Ties route to the first index.
template <typename S>
Var<S> maxpool_freq(Var<S> x, int w) {
  const Tensor<S>& X = x.value();
  detail::require(X.rank() == 4, "maxpool_freq: expected 4-d input");
  detail::require(w >= 1, "maxpool_freq: window must be >= 1");
  const int B = X.dim(0), T = X.dim(1), F = X.dim(2), C = X.dim(3);
  const int Fo = (F + w - 1) / w;
  Tensor<S> out({B, T, Fo, C});
  std::vector<std::size_t> arg(out.size());
  std::size_t o = 0;
  for (int bt = 0; bt < B * T; ++bt) {
    const std::size_t base = static_cast<std::size_t>(bt) * F * C;
    for (int fo = 0; fo < Fo; ++fo) {
      for (int c = 0; c < C; ++c, ++o) {
        std::size_t best = base + static_cast<std::size_t>(fo * w) * C + c;
        for (int f = fo * w + 1; f < std::min(F, (fo + 1) * w); ++f) {
          const std::size_t idx = base + static_cast<std::size_t>(f) * C + c;
          if (X[idx] > X[best]) best = idx;
        }
        arg[o] = best;
        out[o] = X[best];
      }
    }
  }
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [xi, arg = std::move(arg)](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (std::size_t i = 0; i < arg.size(); ++i) dx[arg[i]] += dy[i];
  });
}

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

// Training-mode batch normalization over every axis but the last (channels).
// Requires a batch of at least two. When running_mean / running_var are given
// they are updated as running = momentum * running + (1 - momentum) * batch.
template <typename S>
Var<S> batchnorm_train(Var<S> x, Var<S> gamma, Var<S> beta, Tensor<S>* running_mean = nullptr,
                       Tensor<S>* running_var = nullptr, double momentum = kBatchNormMomentum,
                       double eps = kBatchNormEpsilon) {
  const Tensor<S>& X = x.value();
  detail::require(X.rank() >= 2, "batchnorm: expected at least 2-d input");
  if (X.dim(0) < 2) throw Error("batchnorm: training mode needs a batch of at least 2");
  const int C = X.dim(-1);
  detail::require(gamma.value().size() == static_cast<std::size_t>(C) &&
                      beta.value().size() == static_cast<std::size_t>(C),
                  "batchnorm: gamma/beta size mismatch");
  const std::size_t N = X.size() / static_cast<std::size_t>(C);
  std::vector<double> mu(static_cast<std::size_t>(C), 0.0), var(static_cast<std::size_t>(C), 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) mu[static_cast<std::size_t>(c)] += X[n * C + c];
  }
  for (double& m : mu) m /= static_cast<double>(N);
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const double d = X[n * C + c] - mu[static_cast<std::size_t>(c)];
      var[static_cast<std::size_t>(c)] += d * d;
    }
  }
  for (double& v : var) v /= static_cast<double>(N);
  std::vector<S> inv_std(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) inv_std[static_cast<std::size_t>(c)] = static_cast<S>(1.0 / std::sqrt(var[static_cast<std::size_t>(c)] + eps));

  if (running_mean && running_var) {
    const double unbiased = N > 1 ? static_cast<double>(N) / static_cast<double>(N - 1) : 1.0;
    for (int c = 0; c < C; ++c) {
      const auto k = static_cast<std::size_t>(c);
      (*running_mean)[k] = static_cast<S>(momentum * (*running_mean)[k] + (1.0 - momentum) * mu[k]);
      (*running_var)[k] = static_cast<S>(momentum * (*running_var)[k] + (1.0 - momentum) * var[k] * unbiased);
    }
  }

  const Tensor<S>& G = gamma.value();
  const Tensor<S>& Bt = beta.value();
  Tensor<S> out(X.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const auto k = static_cast<std::size_t>(c);
      out[n * C + c] = static_cast<S>((X[n * C + c] - mu[k]) * inv_std[k]) * G[k] + Bt[k];
    }
  }

  std::vector<S> mean_s(mu.begin(), mu.end());
  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.graph().record(std::move(out), {x, gamma, beta},
                          [=, mean_s = std::move(mean_s), inv_std = std::move(inv_std)](Graph<S>& g, const Tensor<S>& dy) {
    const Tensor<S>& X = g.value(xi);
    const Tensor<S>& G = g.value(gi);
    std::vector<double> sum_dy(static_cast<std::size_t>(C), 0.0), sum_dy_xhat(static_cast<std::size_t>(C), 0.0);
    for (std::size_t n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const auto k = static_cast<std::size_t>(c);
        const double xhat = (X[n * C + c] - mean_s[k]) * inv_std[k];
        sum_dy[k] += dy[n * C + c];
        sum_dy_xhat[k] += dy[n * C + c] * xhat;
      }
    }
    if (g.requires_grad(gi)) {
      Tensor<S>& dg = g.grad(gi);
      for (int c = 0; c < C; ++c) dg[static_cast<std::size_t>(c)] += static_cast<S>(sum_dy_xhat[static_cast<std::size_t>(c)]);
    }
    if (g.requires_grad(bi)) {
      Tensor<S>& db = g.grad(bi);
      for (int c = 0; c < C; ++c) db[static_cast<std::size_t>(c)] += static_cast<S>(sum_dy[static_cast<std::size_t>(c)]);
    }
    if (g.requires_grad(xi)) {
      Tensor<S>& dx = g.grad(xi);
      const double inv_n = 1.0 / static_cast<double>(N);
      for (std::size_t n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
          const auto k = static_cast<std::size_t>(c);
          const double xhat = (X[n * C + c] - mean_s[k]) * inv_std[k];
          const double v = G[k] * inv_std[k] *
                           (dy[n * C + c] - sum_dy[k] * inv_n - xhat * sum_dy_xhat[k] * inv_n);
          dx[n * C + c] += static_cast<S>(v);
        }
      }
    }
  });
}

// Inference-mode batch normalization with fixed statistics.
template <typename S>
Var<S> batchnorm_infer(Var<S> x, Var<S> gamma, Var<S> beta, const Tensor<S>& running_mean,
                       const Tensor<S>& running_var, double eps = kBatchNormEpsilon) {
  const Tensor<S>& X = x.value();
  const int C = X.dim(-1);
  detail::require(running_mean.size() == static_cast<std::size_t>(C) && running_var.size() == static_cast<std::size_t>(C),
                  "batchnorm: running statistics size mismatch");
  const std::size_t N = X.size() / static_cast<std::size_t>(C);
  std::vector<S> inv_std(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    inv_std[static_cast<std::size_t>(c)] = static_cast<S>(1.0 / std::sqrt(static_cast<double>(running_var[static_cast<std::size_t>(c)]) + eps));
  }
  const Tensor<S>& G = gamma.value();
  const Tensor<S>& Bt = beta.value();
  Tensor<S> out(X.shape());
  for (std::size_t n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const auto k = static_cast<std::size_t>(c);
      out[n * C + c] = (X[n * C + c] - running_mean[k]) * inv_std[k] * G[k] + Bt[k];
    }
  }
  std::vector<S> mean_s(running_mean.values().begin(), running_mean.values().end());
  const int xi = x.id(), gi = gamma.id(), bi = beta.id();
  return x.graph().record(std::move(out), {x, gamma, beta},
                          [=, mean_s = std::move(mean_s), inv_std = std::move(inv_std)](Graph<S>& g, const Tensor<S>& dy) {
    const Tensor<S>& X = g.value(xi);
    const Tensor<S>& G = g.value(gi);
    const bool need_x = g.requires_grad(xi), need_g = g.requires_grad(gi), need_b = g.requires_grad(bi);
    for (std::size_t n = 0; n < N; ++n) {
      for (int c = 0; c < C; ++c) {
        const auto k = static_cast<std::size_t>(c);
        const std::size_t i = n * C + c;
        if (need_x) g.grad(xi)[i] += dy[i] * G[k] * inv_std[k];
        if (need_g) g.grad(gi)[k] += dy[i] * (X[i] - mean_s[k]) * inv_std[k];
        if (need_b) g.grad(bi)[k] += dy[i];
      }
    }
  });
}

// x: [B, D], weights: [D, N], bias: [N] -> [B, N].
template <typename S>
Var<S> dense(Var<S> x, Var<S> weights, Var<S> bias) {
  const Tensor<S>& X = x.value();
  const Tensor<S>& W = weights.value();
  detail::require(X.rank() == 2 && W.rank() == 2 && X.dim(1) == W.dim(0),
                  "dense: shape mismatch " + shape_string(X.shape()) + " x " + shape_string(W.shape()));
  const int B = X.dim(0), D = X.dim(1), N = W.dim(1);
  detail::require(bias.value().size() == static_cast<std::size_t>(N), "dense: bias size mismatch");
  Tensor<S> out({B, N});
  detail::MapMat<S> Y(out.data(), B, N);
  Y.noalias() = detail::ConstMapMat<S>(X.data(), B, D) * detail::ConstMapMat<S>(W.data(), D, N);
  Y.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias.value().data(), N);
  const int xi = x.id(), wi = weights.id(), bi = bias.id();
  return x.graph().record(std::move(out), {x, weights, bias}, [=](Graph<S>& g, const Tensor<S>& dy) {
    detail::ConstMapMat<S> dY(dy.data(), B, N);
    if (g.requires_grad(wi)) {
      detail::MapMat<S>(g.grad(wi).data(), D, N).noalias() +=
          detail::ConstMapMat<S>(g.value(xi).data(), B, D).transpose() * dY;
    }
    if (g.requires_grad(bi)) {
      Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(bi).data(), N) += dY.colwise().sum();
    }
    if (g.requires_grad(xi)) {
      detail::MapMat<S>(g.grad(xi).data(), B, D).noalias() +=
          dY * detail::ConstMapMat<S>(g.value(wi).data(), D, N).transpose();
    }
  });
}

template <typename S>
struct LstmOutput {
  Var<S> outputs;          // [B, T, H]
  Tensor<S> final_hidden;  // [B, H]
  Tensor<S> final_cell;    // [B, H]
};

// Unidirectional LSTM from a zero initial state. Gate order in the fused
// weights is (input, forget, candidate, output).
// x: [B, T, D], input_weights: [D, 4H], recurrent_weights: [H, 4H], bias: [4H].
// Throws NumericError if any state becomes non-finite.
template <typename S>
LstmOutput<S> lstm_sequence(Var<S> x, Var<S> input_weights, Var<S> recurrent_weights, Var<S> bias) {
  using detail::sigmoid;
  const Tensor<S>& X = x.value();
  const Tensor<S>& Wx = input_weights.value();
  const Tensor<S>& Wh = recurrent_weights.value();
  detail::require(X.rank() == 3, "lstm: expected [batch, time, features] input");
  const int B = X.dim(0), T = X.dim(1), D = X.dim(2);
  detail::require(T >= 1, "lstm: sequence must have at least one step");
  detail::require(Wx.rank() == 2 && Wx.dim(0) == D && Wx.dim(1) % 4 == 0, "lstm: input weight shape mismatch");
  const int H4 = Wx.dim(1), H = H4 / 4;
  detail::require(Wh.rank() == 2 && Wh.dim(0) == H && Wh.dim(1) == H4, "lstm: recurrent weight shape mismatch");
  detail::require(bias.value().size() == static_cast<std::size_t>(H4), "lstm: bias size mismatch");

  // Activated gates and cell states are kept for the backward pass.
  auto gates = std::make_shared<Tensor<S>>(Shape{B, T, H4});
  auto cells = std::make_shared<Tensor<S>>(Shape{B, T, H});
  Tensor<S> out({B, T, H});
  {
    detail::MapMat<S> pre(gates->data(), B * T, H4);
    pre.noalias() = detail::ConstMapMat<S>(X.data(), B * T, D) * detail::ConstMapMat<S>(Wx.data(), D, H4);
    pre.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(bias.value().data(), H4);
  }
  detail::ConstMapMat<S> WhM(Wh.data(), H, H4);
  detail::RowMat<S> rec(B, H4);
  for (int t = 0; t < T; ++t) {
    detail::StridedMat<S> z(gates->data() + static_cast<std::size_t>(t) * H4, B, H4,
                            Eigen::OuterStride<>(static_cast<Eigen::Index>(T) * H4));
    if (t > 0) {
      detail::ConstStridedMat<S> h_prev(out.data() + static_cast<std::size_t>(t - 1) * H, B, H,
                                        Eigen::OuterStride<>(static_cast<Eigen::Index>(T) * H));
      rec.noalias() = h_prev * WhM;
      z += rec;
    }
    for (int b = 0; b < B; ++b) {
      S* zr = gates->data() + (static_cast<std::size_t>(b) * T + t) * H4;
      S* c = cells->data() + (static_cast<std::size_t>(b) * T + t) * H;
      const S* c_prev = t > 0 ? c - H : nullptr;
      S* h = out.data() + (static_cast<std::size_t>(b) * T + t) * H;
      for (int j = 0; j < H; ++j) {
        const S i_g = sigmoid(zr[j]);
        const S f_g = sigmoid(zr[H + j]);
        const S g_g = std::tanh(zr[2 * H + j]);
        const S o_g = sigmoid(zr[3 * H + j]);
        zr[j] = i_g;
        zr[H + j] = f_g;
        zr[2 * H + j] = g_g;
        zr[3 * H + j] = o_g;
        c[j] = (c_prev ? f_g * c_prev[j] : S(0)) + i_g * g_g;
        h[j] = o_g * std::tanh(c[j]);
      }
    }
  }
  for (S v : out.values()) {
    if (!std::isfinite(v)) throw NumericError("lstm: non-finite hidden state");
  }

  LstmOutput<S> result;
  result.final_hidden = Tensor<S>({B, H});
  result.final_cell = Tensor<S>({B, H});
  for (int b = 0; b < B; ++b) {
    for (int j = 0; j < H; ++j) {
      const std::size_t src = (static_cast<std::size_t>(b) * T + (T - 1)) * H + j;
      result.final_hidden[static_cast<std::size_t>(b) * H + j] = out[src];
      result.final_cell[static_cast<std::size_t>(b) * H + j] = (*cells)[src];
    }
  }

  const int xi = x.id(), wxi = input_weights.id(), whi = recurrent_weights.id(), bi = bias.id();
  const int out_id = static_cast<int>(x.graph().size());
  result.outputs = x.graph().record(
      std::move(out), {x, input_weights, recurrent_weights, bias},
      [=](Graph<S>& g, const Tensor<S>& dy) {
        const Tensor<S>& hs = g.value(out_id);
        Tensor<S> dz({B, T, H4});
        detail::RowMat<S> dh_next = detail::RowMat<S>::Zero(B, H);
        detail::RowMat<S> dc_next = detail::RowMat<S>::Zero(B, H);
        detail::ConstMapMat<S> WhM(g.value(whi).data(), H, H4);
        for (int t = T - 1; t >= 0; --t) {
          for (int b = 0; b < B; ++b) {
            const std::size_t row = static_cast<std::size_t>(b) * T + t;
            const S* gt = gates->data() + row * H4;
            const S* c = cells->data() + row * H;
            const S* dyr = dy.data() + row * H;
            S* dzr = dz.data() + row * H4;
            for (int j = 0; j < H; ++j) {
              const S i_g = gt[j], f_g = gt[H + j], g_g = gt[2 * H + j], o_g = gt[3 * H + j];
              const S tc = std::tanh(c[j]);
              const S dh = dyr[j] + dh_next(b, j);
              const S dc = dc_next(b, j) + dh * o_g * (S(1) - tc * tc);
              const S c_prev = t > 0 ? c[j - H] : S(0);
              dzr[j] = detail::flush_subnormal(dc * g_g * i_g * (S(1) - i_g));
              dzr[H + j] = detail::flush_subnormal(dc * c_prev * f_g * (S(1) - f_g));
              dzr[2 * H + j] = detail::flush_subnormal(dc * i_g * (S(1) - g_g * g_g));
              dzr[3 * H + j] = detail::flush_subnormal(dh * tc * o_g * (S(1) - o_g));
              dc_next(b, j) = detail::flush_subnormal(dc * f_g);
            }
          }
          detail::ConstStridedMat<S> dzt(dz.data() + static_cast<std::size_t>(t) * H4, B, H4,
                                         Eigen::OuterStride<>(static_cast<Eigen::Index>(T) * H4));
          dh_next.noalias() = dzt * WhM.transpose();
          dh_next = dh_next.unaryExpr([](S v) { return detail::flush_subnormal(v); });
        }
        detail::ConstMapMat<S> dZ(dz.data(), B * T, H4);
        if (g.requires_grad(whi)) {
          // h_{t-1} for every row; zero at t = 0.
          detail::RowMat<S> h_prev = detail::RowMat<S>::Zero(B * T, H);
          for (int b = 0; b < B; ++b) {
            for (int t = 1; t < T; ++t) {
              const std::size_t row = static_cast<std::size_t>(b) * T + t;
              std::copy(hs.data() + (row - 1) * H, hs.data() + row * H, h_prev.data() + row * H);
            }
          }
          detail::MapMat<S>(g.grad(whi).data(), H, H4).noalias() += h_prev.transpose() * dZ;
        }
        if (g.requires_grad(wxi)) {
          detail::MapMat<S>(g.grad(wxi).data(), D, H4).noalias() +=
              detail::ConstMapMat<S>(g.value(xi).data(), B * T, D).transpose() * dZ;
        }
        if (g.requires_grad(bi)) {
          Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(g.grad(bi).data(), H4) += dZ.colwise().sum();
        }
        if (g.requires_grad(xi)) {
          detail::MapMat<S>(g.grad(xi).data(), B * T, D).noalias() +=
              dZ * detail::ConstMapMat<S>(g.value(wxi).data(), D, H4).transpose();
        }
      });
  return result;
}

// Last step of a [B, T, H] sequence -> [B, H].
template <typename S>
Var<S> last_timestep(Var<S> x) {
  const Tensor<S>& X = x.value();
  detail::require(X.rank() == 3, "last_timestep: expected [batch, time, features]");
  const int B = X.dim(0), T = X.dim(1), H = X.dim(2);
  Tensor<S> out({B, H});
  for (int b = 0; b < B; ++b) {
    const S* src = X.data() + (static_cast<std::size_t>(b) * T + (T - 1)) * H;
    std::copy(src, src + H, out.data() + static_cast<std::size_t>(b) * H);
  }
  const int xi = x.id();
  return x.graph().record(std::move(out), {x}, [=](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (int b = 0; b < B; ++b) {
      S* dst = dx.data() + (static_cast<std::size_t>(b) * T + (T - 1)) * H;
      for (int j = 0; j < H; ++j) dst[j] += dy[static_cast<std::size_t>(b) * H + j];
    }
  });
}

// Sum over the batch of column c of a [B, N] matrix; the scalar whose
// gradient a class-specific attribution needs.
template <typename S>
Var<S> pick(Var<S> x, int c) {
  const Tensor<S>& X = x.value();
  detail::require(X.rank() == 2 && 0 <= c && c < X.dim(1), "pick: class index out of range");
  const int B = X.dim(0), N = X.dim(1);
  double acc = 0.0;
  for (int b = 0; b < B; ++b) acc += X[static_cast<std::size_t>(b) * N + c];
  const int xi = x.id();
  return x.graph().record(Tensor<S>({1}, {static_cast<S>(acc)}), {x}, [=](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dx = g.grad(xi);
    for (int b = 0; b < B; ++b) dx[static_cast<std::size_t>(b) * N + c] += dy[0];
  });
}

// ---------------------------------------------------------------------------
// Softmax and cross-entropy

inline constexpr double kLogGuard = 1e-12;

// Max-shifted softmax of one logit vector.
template <typename S>
std::vector<S> softmax(std::span<const S> logits) {
  std::vector<S> out(logits.size());
  if (logits.empty()) return out;
  const S peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += std::exp(static_cast<double>(logits[i] - peak));
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = static_cast<S>(std::exp(static_cast<double>(logits[i] - peak)) / total);
  }
  return out;
}

// -sum t_i log(p_i + 1e-12). Throws unless `target` is one-hot.
template <typename S>
double cce_loss(std::span<const S> probabilities, std::span<const S> target) {
  if (probabilities.size() != target.size()) throw Error("cce_loss: size mismatch");
  int ones = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (target[i] == S(1)) {
      ++ones;
      loss -= std::log(static_cast<double>(probabilities[i]) + kLogGuard);
    } else if (target[i] != S(0)) {
      throw Error("cce_loss: target is not one-hot");
    }
  }
  if (ones != 1) throw Error("cce_loss: target is not one-hot");
  return loss;
}

// Mean over the batch of the categorical cross-entropy of softmax(logits)
// against integer labels; the fused gradient is (p - onehot) / B.
template <typename S>
Var<S> softmax_cross_entropy(Var<S> logits, std::span<const int> labels) {
  const Tensor<S>& Z = logits.value();
  detail::require(Z.rank() == 2 && labels.size() == static_cast<std::size_t>(Z.dim(0)),
                  "softmax_cross_entropy: labels do not match batch");
  const int B = Z.dim(0), N = Z.dim(1);
  Tensor<S> probs({B, N});
  double loss = 0.0;
  for (int b = 0; b < B; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    detail::require(0 <= y && y < N, "softmax_cross_entropy: label out of range");
    const auto p = softmax<S>(std::span<const S>(Z.data() + static_cast<std::size_t>(b) * N, static_cast<std::size_t>(N)));
    std::copy(p.begin(), p.end(), probs.data() + static_cast<std::size_t>(b) * N);
    // log-softmax computed directly for accuracy.
    const S* z = Z.data() + static_cast<std::size_t>(b) * N;
    const double peak = *std::max_element(z, z + N);
    double total = 0.0;
    for (int i = 0; i < N; ++i) total += std::exp(z[i] - peak);
    loss -= (z[y] - peak) - std::log(total);
  }
  loss /= B;
  std::vector<int> lab(labels.begin(), labels.end());
  const int zi = logits.id();
  return logits.graph().record(Tensor<S>({1}, {static_cast<S>(loss)}), {logits},
                               [=, probs = std::move(probs), lab = std::move(lab)](Graph<S>& g, const Tensor<S>& dy) {
    Tensor<S>& dz = g.grad(zi);
    const S scale = dy[0] / static_cast<S>(B);
    for (int b = 0; b < B; ++b) {
      for (int i = 0; i < N; ++i) {
        const std::size_t k = static_cast<std::size_t>(b) * N + i;
        dz[k] += (probs[k] - (i == lab[static_cast<std::size_t>(b)] ? S(1) : S(0))) * scale;
      }
    }
  });
}

}  // namespace ragaxai::nd
