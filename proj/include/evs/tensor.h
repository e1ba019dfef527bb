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

#ifndef EVS_TENSOR_H_
#define EVS_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "evs/errors.h"

namespace evs {

using Shape = std::vector<int>;

std::string shape_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

// Dense row-major tensor. Image-like data is channel-first (C, H, W).
//
// Tensor (float) is the production type. The same engine is instantiated
// for double so gradient checks can run below float32 round-off.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Rank-3 accessor, (c, h, w).
  T& at(int c, int h, int w) {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }
  const T& at(int c, int h, int w) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + h) * shape_[2] + w];
  }

  BasicTensor reshaped(Shape shape) const;

  template <typename U>
  BasicTensor<U> cast() const {
    if (data_.empty()) return BasicTensor<U>();
    std::vector<U> out(data_.begin(), data_.end());
    return BasicTensor<U>(shape_, std::move(out));
  }

  bool all_finite() const;

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

// Throws NumericError naming the op if any element is NaN or Inf.
template <typename T>
void require_finite(const BasicTensor<T>& t, const char* op);

enum class Padding { kSame, kValid };
enum class Axis { kC = 0, kH = 1, kW = 2 };
enum class Activation { kSigmoid, kRelu, kSoftmaxLastAxis };

namespace ops {

// input [C_in,H,W], kernel [C_out,C_in,k,k], optional bias [C_out].
// Stride 1; kSame zero-pads by k/2.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                      Padding padding, const BasicTensor<T>* bias = nullptr);

// Max and mean over `axis` of a rank-3 tensor, stacked as [2, A, B] where
// A, B are the remaining axes in order.
template <typename T>
BasicTensor<T> zpool(const BasicTensor<T>& input, Axis axis);

template <typename T>
BasicTensor<T> activation(const BasicTensor<T>& input, Activation kind);

// input [n] -> [m], or batched [B,n] -> [B,m].
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                     const BasicTensor<T>& bias);

// 2x2 mean pooling with stride 2; odd trailing rows/cols are dropped.
template <typename T>
BasicTensor<T> avgpool2x2(const BasicTensor<T>& input);

// [C,H,W] -> [C]
template <typename T>
BasicTensor<T> global_avg_pool(const BasicTensor<T>& input);

// psi [C,H,W] times gate [1,A,B] broadcast along `axis`, where (A,B) are the
// axes of psi left after removing `axis`.
template <typename T>
BasicTensor<T> gate_mul(const BasicTensor<T>& psi, const BasicTensor<T>& gate,
                        Axis axis);

}  // namespace ops
}  // namespace evs

#endif  // EVS_TENSOR_H_
