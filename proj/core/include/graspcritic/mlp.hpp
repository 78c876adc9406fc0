/*
 * Copyright (c) 2026, the graspcritic authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <string>
#include <vector>

#include "graspcritic/common.hpp"

namespace graspcritic {

// ---------------------------------------------------------------------------
// Dense layers with tanh hidden activations and hand-written reverse-mode
// gradients. Kernels accumulate in a fixed order (eight independent lanes,
// then a fixed reduction tree), so a batched forward pass is bit-identical
// to row-by-row evaluation and results do not depend on batch size. Training
// runs in float; tests instantiate the same code with double for
// finite-difference gradient checks.
// ---------------------------------------------------------------------------

namespace detail {

#if defined(__GNUC__) && defined(__x86_64__)
using v8f = float __attribute__((vector_size(32)));

/// Eight independent accumulator lanes (lane l sums k = l mod 8), reduced in
/// a fixed tree: identical result for any batch size and any call site.
inline float fixed_order_dot(const float* a, const float* b, int n) {
  v8f acc = {0, 0, 0, 0, 0, 0, 0, 0};
  int k = 0;
  for (; k + 8 <= n; k += 8) {
    v8f va, vb;
    __builtin_memcpy(&va, a + k, sizeof(va));
    __builtin_memcpy(&vb, b + k, sizeof(vb));
    acc += va * vb;
  }
  float s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

/// Four dot products against a shared right-hand side; each output uses the
/// same lane assignment and reduction tree as fixed_order_dot.
inline void fixed_order_dot4(const float* a0, const float* a1, const float* a2, const float* a3,
                             const float* b, int n, float* out) {
  v8f acc0 = {0, 0, 0, 0, 0, 0, 0, 0}, acc1 = acc0, acc2 = acc0, acc3 = acc0;
  int k = 0;
  for (; k + 8 <= n; k += 8) {
    v8f vb;
    __builtin_memcpy(&vb, b + k, sizeof(vb));
    v8f v0, v1, v2, v3;
    __builtin_memcpy(&v0, a0 + k, sizeof(v0));
    __builtin_memcpy(&v1, a1 + k, sizeof(v1));
    __builtin_memcpy(&v2, a2 + k, sizeof(v2));
    __builtin_memcpy(&v3, a3 + k, sizeof(v3));
    acc0 += v0 * vb;
    acc1 += v1 * vb;
    acc2 += v2 * vb;
    acc3 += v3 * vb;
  }
  auto reduce = [](const v8f& acc) {
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
  };
  float s0 = reduce(acc0), s1 = reduce(acc1), s2 = reduce(acc2), s3 = reduce(acc3);
  for (; k < n; ++k) {
    s0 += a0[k] * b[k];
    s1 += a1[k] * b[k];
    s2 += a2[k] * b[k];
    s3 += a3[k] * b[k];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

inline void dense_row(const float* w, const float* bias, const float* x, int in, int out,
                      float* y) {
  int j = 0;
  for (; j + 4 <= out; j += 4) {
    const float* r = w + static_cast<size_t>(j) * in;
    fixed_order_dot4(r, r + in, r + 2 * in, r + 3 * in, x, in, y + j);
    for (int q = 0; q < 4; ++q) y[j + q] += bias[j + q];
  }
  for (; j < out; ++j) y[j] = bias[j] + fixed_order_dot(w + static_cast<size_t>(j) * in, x, in);
}
#endif

template <typename T>
inline T fixed_order_dot(const T* a, const T* b, int n) {
  T acc[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
  int k = 0;
  for (; k + 8 <= n; k += 8) {
    for (int l = 0; l < 8; ++l) acc[l] += a[k + l] * b[k + l];
  }
  T s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
  for (; k < n; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace detail

/// Row-major matrix of shape rows x cols.
template <typename T>
struct Mat {
  int rows = 0;
  int cols = 0;
  std::vector<T> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, T(0)) {}
  T* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const T* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
  size_t size() const { return a.size(); }
};

/// Named view over one parameter tensor; the unit Adam and the checkpoint
/// writer iterate these.
template <typename T>
struct TensorRef {
  std::string name;
  T* data = nullptr;
  size_t size = 0;
};

template <typename T>
struct Mlp {
  std::vector<int> sizes;     // e.g. {in, 256, 256, out}
  std::vector<Mat<T>> w;      // w[l] has shape sizes[l+1] x sizes[l]
  std::vector<std::vector<T>> b;

  int in_dim() const { return sizes.front(); }
  int out_dim() const { return sizes.back(); }
  int layers() const { return static_cast<int>(w.size()); }

  std::vector<TensorRef<T>> tensors(const std::string& prefix) {
    std::vector<TensorRef<T>> out;
    for (int l = 0; l < layers(); ++l) {
      out.push_back({prefix + ".w" + std::to_string(l), w[l].a.data(), w[l].a.size()});
      out.push_back({prefix + ".b" + std::to_string(l), b[l].data(), b[l].size()});
    }
    return out;
  }
};

/// Per-layer activations captured by a forward pass for the backward pass.
/// act[0] is the input batch; act[l+1] the output of layer l (post-tanh for
/// hidden layers, linear for the last).
template <typename T>
struct MlpCache {
  std::vector<Mat<T>> act;
};

/// Xavier-uniform init; the final layer is scaled by final_scale (0 gives the
/// zero output head used for fresh critics).
template <typename T>
Mlp<T> mlp_init(const std::vector<int>& sizes, Rng& rng, double final_scale) {
  Mlp<T> net;
  net.sizes = sizes;
  int layers = static_cast<int>(sizes.size()) - 1;
  for (int l = 0; l < layers; ++l) {
    int fan_in = sizes[l], fan_out = sizes[l + 1];
    Mat<T> wm(fan_out, fan_in);
    double lim = std::sqrt(6.0 / (fan_in + fan_out));
    if (l == layers - 1) lim *= final_scale;
    for (T& v : wm.a) v = static_cast<T>(rng.uniform(-lim, lim));
    net.w.push_back(std::move(wm));
    net.b.emplace_back(fan_out, T(0));
  }
  return net;
}

/// Forward pass over a batch (n rows). Writes n x out_dim into `out`; when
/// `cache` is non-null it is filled for a later backward pass.
template <typename T>
void mlp_forward(const Mlp<T>& net, const T* input, int n, T* out, MlpCache<T>* cache = nullptr) {
  int layers = net.layers();
  Mat<T> cur(n, net.in_dim());
  std::copy(input, input + static_cast<size_t>(n) * net.in_dim(), cur.a.begin());
  if (cache) {
    cache->act.clear();
    cache->act.push_back(cur);
  }
  for (int l = 0; l < layers; ++l) {
    const Mat<T>& wm = net.w[l];
    const std::vector<T>& bias = net.b[l];
    bool last = l == layers - 1;
    Mat<T> next(n, wm.rows);
    for (int r = 0; r < n; ++r) {
      const T* x = cur.row(r);
      T* y = next.row(r);
#if defined(__GNUC__) && defined(__x86_64__)
      if constexpr (std::is_same_v<T, float>) {
        detail::dense_row(wm.a.data(), bias.data(), x, wm.cols, wm.rows, y);
        if (!last) {
          for (int j = 0; j < wm.rows; ++j) y[j] = std::tanh(y[j]);
        }
        continue;
      }
#endif
      for (int j = 0; j < wm.rows; ++j) {
        T v = bias[j] + detail::fixed_order_dot(wm.row(j), x, wm.cols);
        y[j] = last ? v : std::tanh(v);
      }
    }
    cur = std::move(next);
    if (cache) cache->act.push_back(cur);
  }
  std::copy(cur.a.begin(), cur.a.end(), out);
}

/// Gradients produced by a backward pass; same shapes as the network.
template <typename T>
struct MlpGrads {
  std::vector<Mat<T>> w;
  std::vector<std::vector<T>> b;

  static MlpGrads zeros_like(const Mlp<T>& net) {
    MlpGrads g;
    for (int l = 0; l < net.layers(); ++l) {
      g.w.emplace_back(net.w[l].rows, net.w[l].cols);
      g.b.emplace_back(net.b[l].size(), T(0));
    }
    return g;
  }

  void accumulate(const MlpGrads& o, T scale) {
    for (size_t l = 0; l < w.size(); ++l) {
      for (size_t i = 0; i < w[l].a.size(); ++i) w[l].a[i] += scale * o.w[l].a[i];
      for (size_t i = 0; i < b[l].size(); ++i) b[l][i] += scale * o.b[l][i];
    }
  }

  std::vector<TensorRef<T>> tensors(const std::string& prefix) {
    std::vector<TensorRef<T>> out;
    for (size_t l = 0; l < w.size(); ++l) {
      out.push_back({prefix + ".w" + std::to_string(l), w[l].a.data(), w[l].a.size()});
      out.push_back({prefix + ".b" + std::to_string(l), b[l].data(), b[l].size()});
    }
    return out;
  }
};

/// Reverse-mode pass: given dL/d(output) for the cached batch, accumulates
/// parameter gradients into `grads` and optionally writes dL/d(input).
template <typename T>
void mlp_backward(const Mlp<T>& net, const MlpCache<T>& cache, const Mat<T>& dout,
                  MlpGrads<T>& grads, Mat<T>* dinput = nullptr) {
  int layers = net.layers();
  int n = dout.rows;
  Mat<T> delta = dout;  // dL/d(pre-activation of current layer), built in place
  for (int l = layers - 1; l >= 0; --l) {
    const Mat<T>& wm = net.w[l];
    const Mat<T>& x = cache.act[l];        // layer input
    const Mat<T>& y = cache.act[l + 1];    // layer output
    bool last = l == layers - 1;

    if (!last) {
      // Through tanh: dL/dz = dL/dy * (1 - y^2).
      for (int r = 0; r < n; ++r) {
        T* d = delta.row(r);
        const T* yr = y.row(r);
        for (int j = 0; j < wm.rows; ++j) d[j] *= T(1) - yr[j] * yr[j];
      }
    }

    // Parameter gradients.
    for (int j = 0; j < wm.rows; ++j) {
      T* gw = grads.w[l].row(j);
      T gb = T(0);
      for (int r = 0; r < n; ++r) {
        T d = delta.row(r)[j];
        if (d == T(0)) continue;
        const T* xr = x.row(r);
        for (int k = 0; k < wm.cols; ++k) gw[k] += d * xr[k];
        gb += d;
      }
      grads.b[l][j] += gb;
    }

    // Propagate to the layer input.
    if (l > 0 || dinput) {
      Mat<T> dx(n, wm.cols);
      for (int r = 0; r < n; ++r) {
        const T* d = delta.row(r);
        T* o = dx.row(r);
        for (int j = 0; j < wm.rows; ++j) {
          T dj = d[j];
          if (dj == T(0)) continue;
          const T* wr = wm.row(j);
          for (int k = 0; k < wm.cols; ++k) o[k] += dj * wr[k];
        }
      }
      if (l == 0) {
        if (dinput) *dinput = std::move(dx);
      } else {
        delta = std::move(dx);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Adam over a flat list of tensors.
// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t t = 0;

  void init(const std::vector<TensorRef<T>>& params) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.size, T(0));
      v.emplace_back(p.size, T(0));
    }
    t = 0;
  }
};

template <typename T>
void adam_step(const std::vector<TensorRef<T>>& params, const std::vector<TensorRef<T>>& grads,
               AdamState<T>& state, const AdamConfig& cfg) {
  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    T* p = params[i].data;
    const T* g = grads[i].data;
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    for (size_t k = 0; k < params[i].size; ++k) {
      m[k] = static_cast<T>(cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k]);
      v[k] = static_cast<T>(cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k]);
      double mh = m[k] / bc1;
      double vh = v[k] / bc2;
      p[k] = static_cast<T>(p[k] - cfg.lr * mh / (std::sqrt(vh) + cfg.eps));
    }
  }
}

}  // namespace graspcritic
