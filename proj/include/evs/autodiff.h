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

#ifndef EVS_AUTODIFF_H_
#define EVS_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "evs/tensor.h"

namespace evs::ad {

using NodeId = std::size_t;

enum class OpKind {
  kConstant,
  kVariable,
  kParameter,
  kConv2d,
  kZpool,
  kSigmoid,
  kRelu,
  kSoftmax,
  kDense,
  kAvgPool,
  kGlobalAvgPool,
  kGateMul,
  kAdd,
  kScale,
  kStack,
  kBatchNorm,
  kAffineNorm,
  kDropout,
  kCrossEntropy,
  kSum,
};

const char* op_name(OpKind kind);

template <typename T>
class Gradients {
 public:
  bool contains(NodeId id) const { return grads_.count(id) != 0; }
  const BasicTensor<T>& operator[](NodeId id) const { return grads_.at(id); }
  std::size_t size() const { return grads_.size(); }
  // Nodes whose backward rule ran, in execution order (reverse topological).
  const std::vector<NodeId>& visit_order() const { return visit_order_; }

 private:
  template <typename>
  friend class Tape;
  std::unordered_map<NodeId, BasicTensor<T>> grads_;
  std::vector<NodeId> visit_order_;
};

// Append-only record of ops. Node ids are assigned in creation order, so an
// input always precedes its consumer and the tape is topologically sorted by
// construction. A tape is single-writer: build and differentiate it on one
// thread.
template <typename T>
class Tape {
 public:
  using TensorT = BasicTensor<T>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  NodeId constant(TensorT value);
  NodeId variable(TensorT value);
  NodeId parameter(TensorT value);

  std::size_t size() const { return nodes_.size(); }
  const TensorT& value(NodeId id) const { return nodes_.at(id).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  bool needs_grad(NodeId id) const { return nodes_.at(id).needs_grad; }

  NodeId conv2d(NodeId x, NodeId kernel, std::optional<NodeId> bias, Padding padding);
  NodeId zpool(NodeId x, Axis axis);
  NodeId sigmoid(NodeId x);
  NodeId relu(NodeId x);
  NodeId softmax(NodeId x);
  NodeId dense(NodeId x, NodeId weights, NodeId bias);
  NodeId avgpool2x2(NodeId x);
  NodeId global_avg_pool(NodeId x);
  NodeId gate_mul(NodeId psi, NodeId gate, Axis axis);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId x, T factor);
  // Rank-1 tensors of equal length -> [count, n].
  NodeId stack(std::span<const NodeId> rows);
  // Normalizes each column of x [B,n] with batch statistics, which are
  // written to batch_mean / batch_var (biased) when non-null.
  NodeId batch_norm(NodeId x, NodeId gamma, NodeId beta, T eps,
                    TensorT* batch_mean = nullptr, TensorT* batch_var = nullptr);
  // Normalization with frozen statistics.
  NodeId affine_norm(NodeId x, const TensorT& mean, const TensorT& var, NodeId gamma,
                     NodeId beta, T eps);
  // Inverted dropout: keeps each unit with probability keep_prob and scales
  // survivors by 1/keep_prob. The mask is drawn from rng.
  NodeId dropout(NodeId x, T keep_prob, std::mt19937_64& rng);
  // Mean negative log-likelihood of softmax(logits) over the batch.
  NodeId softmax_cross_entropy(NodeId logits, std::span<const int> labels);
  NodeId sum(NodeId x);

  // Reverse-mode sweep from a one-element loss node. Every node the loss
  // depends on through tracked inputs gets a gradient.
  Gradients<T> backward(NodeId loss) const;

 private:
  struct Node;
  using BackwardFn =
      std::function<void(const Node& node, const TensorT& grad_out,
                         std::span<TensorT* const> grad_in)>;

  struct Node {
    OpKind kind;
    std::vector<NodeId> inputs;
    TensorT value;
    bool needs_grad = false;
    BackwardFn backward;
  };

  NodeId push(OpKind kind, std::vector<NodeId> inputs, TensorT value, BackwardFn fn);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace evs::ad

#endif  // EVS_AUTODIFF_H_
