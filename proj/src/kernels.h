// Copyright 2026 The evs Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Raw loops shared by the pure ops and the tape's backward passes. Callers
// validate shapes; nothing here checks.

#ifndef EVS_SRC_KERNELS_H_
#define EVS_SRC_KERNELS_H_

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace evs::kernels {

struct ConvGeometry {
  int c_in, h_in, w_in;
  int c_out, k;
  int pad;
  int h_out, w_out;

  static ConvGeometry make(int c_in, int h_in, int w_in, int c_out, int k,
                           bool same) {
    ConvGeometry g{c_in, h_in, w_in, c_out, k, same ? k / 2 : 0, 0, 0};
    g.h_out = same ? h_in : h_in - k + 1;
    g.w_out = same ? w_in : w_in - k + 1;
    return g;
  }

  // Output columns [x0, x1) whose tap kx lands inside the input row.
  void x_range(int kx, int* x0, int* x1) const {
    *x0 = std::max(0, pad - kx);
    *x1 = std::min(w_out, w_in - kx + pad);
  }
};

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* in, const T* kernel,
                    const T* bias, T* out) {
  const std::size_t plane_out = static_cast<std::size_t>(g.h_out) * g.w_out;
  const std::size_t plane_in = static_cast<std::size_t>(g.h_in) * g.w_in;
  for (int o = 0; o < g.c_out; ++o) {
    T* out_plane = out + o * plane_out;
    std::fill(out_plane, out_plane + plane_out, bias ? bias[o] : T(0));
    for (int i = 0; i < g.c_in; ++i) {
      const T* in_plane = in + i * plane_in;
      const T* w = kernel + (static_cast<std::size_t>(o) * g.c_in + i) * g.k * g.k;
      for (int ky = 0; ky < g.k; ++ky) {
        for (int kx = 0; kx < g.k; ++kx) {
          const T wv = w[ky * g.k + kx];
          if (wv == T(0)) continue;
          int x0, x1;
          g.x_range(kx, &x0, &x1);
          const int shift = kx - g.pad;
          for (int y = 0; y < g.h_out; ++y) {
            const int iy = y + ky - g.pad;
            if (iy < 0 || iy >= g.h_in) continue;
            const T* src = in_plane + static_cast<std::size_t>(iy) * g.w_in + shift;
            T* dst = out_plane + static_cast<std::size_t>(y) * g.w_out;
            for (int x = x0; x < x1; ++x) dst[x] += wv * src[x];
          }
        }
      }
    }
  }
}

// Accumulates into grad_in, grad_kernel and grad_bias (any may be null).
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* in, const T* kernel,
                     const T* grad_out, T* grad_in, T* grad_kernel,
                     T* grad_bias) {
  const std::size_t plane_out = static_cast<std::size_t>(g.h_out) * g.w_out;
  const std::size_t plane_in = static_cast<std::size_t>(g.h_in) * g.w_in;
  for (int o = 0; o < g.c_out; ++o) {
    const T* gout_plane = grad_out + o * plane_out;
    if (grad_bias) {
      T acc = 0;
      for (std::size_t j = 0; j < plane_out; ++j) acc += gout_plane[j];
      grad_bias[o] += acc;
    }
    for (int i = 0; i < g.c_in; ++i) {
      const T* in_plane = in + i * plane_in;
      const std::size_t woff = (static_cast<std::size_t>(o) * g.c_in + i) * g.k * g.k;
      for (int ky = 0; ky < g.k; ++ky) {
        for (int kx = 0; kx < g.k; ++kx) {
          int x0, x1;
          g.x_range(kx, &x0, &x1);
          const int shift = kx - g.pad;
          const T wv = kernel[woff + ky * g.k + kx];
          T acc = 0;
          for (int y = 0; y < g.h_out; ++y) {
            const int iy = y + ky - g.pad;
            if (iy < 0 || iy >= g.h_in) continue;
            const T* gout_row = gout_plane + static_cast<std::size_t>(y) * g.w_out;
            const std::size_t in_off = static_cast<std::size_t>(iy) * g.w_in + shift;
            if (grad_kernel) {
              const T* src = in_plane + in_off;
              for (int x = x0; x < x1; ++x) acc += gout_row[x] * src[x];
            }
            if (grad_in && wv != T(0)) {
              T* dst = grad_in + i * plane_in + in_off;
              for (int x = x0; x < x1; ++x) dst[x] += wv * gout_row[x];
            }
          }
          if (grad_kernel) grad_kernel[woff + ky * g.k + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace evs::kernels

#endif  // EVS_SRC_KERNELS_H_
