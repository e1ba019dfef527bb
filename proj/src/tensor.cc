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

#include "evs/tensor.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "kernels.h"

namespace evs {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ShapeError("non-positive dimension in " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("shape " + shape_string(shape_) + " does not hold " +
                     std::to_string(data_.size()) + " values");
  }
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(std::move(shape), data_);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](T v) { return std::isfinite(v); });
}

template <typename T>
void require_finite(const BasicTensor<T>& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

namespace ops {
namespace {

void require_rank(const Shape& shape, int rank, const char* op) {
  if (static_cast<int>(shape.size()) != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) +
                     ", got " + shape_string(shape));
  }
}

// Remaining (A, B) dims of a [C,H,W] shape after dropping `axis`.
std::pair<int, int> remaining_dims(const Shape& s, Axis axis) {
  switch (axis) {
    case Axis::kC: return {s[1], s[2]};
    case Axis::kH: return {s[0], s[2]};
    case Axis::kW: return {s[0], s[1]};
  }
  return {0, 0};
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      Padding padding, const BasicTensor<T>* bias) {
  require_rank(input.shape(), 3, "conv2d input");
  require_rank(kernel.shape(), 4, "conv2d kernel");
  const int k = kernel.dim(2);
  if (kernel.dim(1) != input.dim(0) || kernel.dim(3) != k || k % 2 == 0) {
    throw ShapeError("conv2d: kernel " + shape_string(kernel.shape()) +
                     " incompatible with input " + shape_string(input.shape()));
  }
  if (bias && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0))) {
    throw ShapeError("conv2d: bias " + shape_string(bias->shape()) +
                     " does not match kernel " + shape_string(kernel.shape()));
  }
  const bool same = padding == Padding::kSame;
  const auto g = kernels::ConvGeometry::make(input.dim(0), input.dim(1), input.dim(2),
                                             kernel.dim(0), k, same);
  if (g.h_out < 1 || g.w_out < 1) {
    throw ShapeError("conv2d: valid kernel " + shape_string(kernel.shape()) +
                     " larger than input " + shape_string(input.shape()));
  }
  BasicTensor<T> out({g.c_out, g.h_out, g.w_out});
  kernels::conv2d_forward(g, input.data().data(), kernel.data().data(),
                          bias ? bias->data().data() : nullptr, out.data().data());
  require_finite(out, "conv2d");
  return out;
}

template <typename T>
BasicTensor<T> zpool(const BasicTensor<T>& input, Axis axis) {
  require_rank(input.shape(), 3, "zpool");
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const auto [A, B] = remaining_dims(input.shape(), axis);
  BasicTensor<T> out({2, A, B});
  const std::size_t plane = static_cast<std::size_t>(A) * B;
  auto reduce = [&](int a, int b, int n, auto&& elem) {
    T mx = elem(0);
    T sum = 0;
    for (int j = 0; j < n; ++j) {
      const T v = elem(j);
      mx = std::max(mx, v);
      sum += v;
    }
    out[static_cast<std::size_t>(a) * B + b] = mx;
    out[plane + static_cast<std::size_t>(a) * B + b] = sum / static_cast<T>(n);
  };
  for (int a = 0; a < A; ++a) {
    for (int b = 0; b < B; ++b) {
      switch (axis) {
        case Axis::kC: reduce(a, b, C, [&](int j) { return input.at(j, a, b); }); break;
        case Axis::kH: reduce(a, b, H, [&](int j) { return input.at(a, j, b); }); break;
        case Axis::kW: reduce(a, b, W, [&](int j) { return input.at(a, b, j); }); break;
      }
    }
  }
  require_finite(out, "zpool");
  return out;
}

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind) {
  BasicTensor<T> out = input;
  auto v = out.data();
  switch (kind) {
    case Activation::kSigmoid:
      for (T& x : v) x = kernels::sigmoid(x);
      break;
    case Activation::kRelu:
      for (T& x : v) x = std::max(x, T(0));
      break;
    case Activation::kSoftmaxLastAxis: {
      if (input.rank() < 1) throw ShapeError("softmax: rank-0 input");
      const std::size_t n = static_cast<std::size_t>(input.shape().back());
      for (std::size_t row = 0; row < v.size(); row += n) {
        T* r = v.data() + row;
        const T mx = *std::max_element(r, r + n);
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j) sum += std::exp(static_cast<double>(r[j] - mx));
        for (std::size_t j = 0; j < n; ++j) {
          r[j] = static_cast<T>(std::exp(static_cast<double>(r[j] - mx)) / sum);
        }
      }
      break;
    }
  }
  require_finite(out, "activation");
  return out;
}

template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias) {
  if (weights.rank() != 2 || bias.rank() != 1 || bias.dim(0) != weights.dim(0) ||
      input.rank() < 1 || input.rank() > 2 || input.shape().back() != weights.dim(1)) {
    throw ShapeError("dense: input " + shape_string(input.shape()) + " weights " +
                     shape_string(weights.shape()) + " bias " +
                     shape_string(bias.shape()));
  }
  const int m = weights.dim(0), n = weights.dim(1);
  const int batch = input.rank() == 2 ? input.dim(0) : 1;
  BasicTensor<T> out(input.rank() == 2 ? Shape{batch, m} : Shape{m});
  for (int b = 0; b < batch; ++b) {
    const T* x = input.data().data() + static_cast<std::size_t>(b) * n;
    T* y = out.data().data() + static_cast<std::size_t>(b) * m;
    for (int i = 0; i < m; ++i) {
      const T* w = weights.data().data() + static_cast<std::size_t>(i) * n;
      T acc = 0;
      for (int j = 0; j < n; ++j) acc += w[j] * x[j];
      y[i] = acc + bias[i];
    }
  }
  require_finite(out, "dense");
  return out;
}

template <typename T>
BasicTensor<T> avgpool2x2(const BasicTensor<T>& input) {
  require_rank(input.shape(), 3, "avgpool2x2");
  const int C = input.dim(0), H = input.dim(1) / 2, W = input.dim(2) / 2;
  if (H < 1 || W < 1) {
    throw ShapeError("avgpool2x2: input too small " + shape_string(input.shape()));
  }
  BasicTensor<T> out({C, H, W});
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        out.at(c, y, x) = (input.at(c, 2 * y, 2 * x) + input.at(c, 2 * y, 2 * x + 1) +
                           input.at(c, 2 * y + 1, 2 * x) +
                           input.at(c, 2 * y + 1, 2 * x + 1)) * T(0.25);
      }
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& input) {
  require_rank(input.shape(), 3, "global_avg_pool");
  const int C = input.dim(0);
  const std::size_t plane = static_cast<std::size_t>(input.dim(1)) * input.dim(2);
  BasicTensor<T> out({C});
  for (int c = 0; c < C; ++c) {
    const T* p = input.data().data() + c * plane;
    T acc = 0;
    for (std::size_t j = 0; j < plane; ++j) acc += p[j];
    out[c] = acc / static_cast<T>(plane);
  }
  return out;
}

template <typename T>
BasicTensor<T> gate_mul(const BasicTensor<T>& psi, const BasicTensor<T>& gate,
                        Axis axis) {
  require_rank(psi.shape(), 3, "gate_mul");
  const auto [A, B] = remaining_dims(psi.shape(), axis);
  if (gate.shape() != Shape{1, A, B}) {
    throw ShapeError("gate_mul: attention map " + shape_string(gate.shape()) +
                     " does not broadcast onto " + shape_string(psi.shape()));
  }
  BasicTensor<T> out(psi.shape());
  const int C = psi.dim(0), H = psi.dim(1), W = psi.dim(2);
  for (int c = 0; c < C; ++c) {
    for (int h = 0; h < H; ++h) {
      for (int w = 0; w < W; ++w) {
        T g;
        switch (axis) {
          case Axis::kC: g = gate[static_cast<std::size_t>(h) * W + w]; break;
          case Axis::kH: g = gate[static_cast<std::size_t>(c) * W + w]; break;
          default: g = gate[static_cast<std::size_t>(c) * H + h]; break;
        }
        out.at(c, h, w) = psi.at(c, h, w) * g;
      }
    }
  }
  return out;
}

}  // namespace ops

#define EVS_INSTANTIATE(T)                                                      \
  template class BasicTensor<T>;                                                \
  template void require_finite(const BasicTensor<T>&, const char*);             \
  template BasicTensor<T> ops::conv2d(const BasicTensor<T>&, const BasicTensor<T>&, \
                                      Padding, const BasicTensor<T>*);          \
  template BasicTensor<T> ops::zpool(const BasicTensor<T>&, Axis);              \
  template BasicTensor<T> ops::activation(const BasicTensor<T>&, Activation);   \
  template BasicTensor<T> ops::dense(const BasicTensor<T>&, const BasicTensor<T>&, \
                                     const BasicTensor<T>&);                    \
  template BasicTensor<T> ops::avgpool2x2(const BasicTensor<T>&);               \
  template BasicTensor<T> ops::global_avg_pool(const BasicTensor<T>&);          \
  template BasicTensor<T> ops::gate_mul(const BasicTensor<T>&, const BasicTensor<T>&, Axis);

EVS_INSTANTIATE(float)
EVS_INSTANTIATE(double)

#undef EVS_INSTANTIATE

}  // namespace evs
