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

#include "evs/autodiff.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.h"

namespace evs::ad {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kConstant: return "constant";
    case OpKind::kVariable: return "variable";
    case OpKind::kParameter: return "parameter";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kZpool: return "zpool";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kRelu: return "relu";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kDense: return "dense";
    case OpKind::kAvgPool: return "avgpool2x2";
    case OpKind::kGlobalAvgPool: return "global_avg_pool";
    case OpKind::kGateMul: return "gate_mul";
    case OpKind::kAdd: return "add";
    case OpKind::kScale: return "scale";
    case OpKind::kStack: return "stack";
    case OpKind::kBatchNorm: return "batch_norm";
    case OpKind::kAffineNorm: return "affine_norm";
    case OpKind::kDropout: return "dropout";
    case OpKind::kCrossEntropy: return "softmax_cross_entropy";
    case OpKind::kSum: return "sum";
  }
  return "unknown";
}

template <typename T>
auto Tape<T>::node(NodeId id) const -> const Node& {
  if (id >= nodes_.size()) {
    throw ContractError("node id " + std::to_string(id) + " not on tape of size " +
                        std::to_string(nodes_.size()));
  }
  return nodes_[id];
}

template <typename T>
NodeId Tape<T>::push(OpKind kind, std::vector<NodeId> inputs, TensorT value,
                     BackwardFn fn) {
  require_finite(value, op_name(kind));
  bool needs = kind == OpKind::kVariable || kind == OpKind::kParameter;
  for (NodeId in : inputs) needs = needs || node(in).needs_grad;
  nodes_.push_back(Node{kind, std::move(inputs), std::move(value), needs, std::move(fn)});
  return nodes_.size() - 1;
}

template <typename T>
NodeId Tape<T>::constant(TensorT value) {
  return push(OpKind::kConstant, {}, std::move(value), nullptr);
}

template <typename T>
NodeId Tape<T>::variable(TensorT value) {
  return push(OpKind::kVariable, {}, std::move(value), nullptr);
}

template <typename T>
NodeId Tape<T>::parameter(TensorT value) {
  return push(OpKind::kParameter, {}, std::move(value), nullptr);
}

template <typename T>
NodeId Tape<T>::conv2d(NodeId x, NodeId kernel, std::optional<NodeId> bias,
                       Padding padding) {
  const TensorT* b = bias ? &value(*bias) : nullptr;
  TensorT out = ops::conv2d(value(x), value(kernel), padding, b);
  std::vector<NodeId> in{x, kernel};
  if (bias) in.push_back(*bias);
  const TensorT& xv = value(x);
  const TensorT& kv = value(kernel);
  const auto g = kernels::ConvGeometry::make(xv.dim(0), xv.dim(1), xv.dim(2), kv.dim(0),
                                             kv.dim(2), padding == Padding::kSame);
  return push(OpKind::kConv2d, std::move(in), std::move(out),
              [this, g](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                kernels::conv2d_backward(
                    g, value(n.inputs[0]).data().data(), value(n.inputs[1]).data().data(),
                    gout.data().data(), gin[0] ? gin[0]->data().data() : nullptr,
                    gin[1] ? gin[1]->data().data() : nullptr,
                    gin.size() > 2 && gin[2] ? gin[2]->data().data() : nullptr);
              });
}

template <typename T>
NodeId Tape<T>::zpool(NodeId x, Axis axis) {
  TensorT out = ops::zpool(value(x), axis);
  return push(OpKind::kZpool, {x}, std::move(out),
              [this, axis](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                const TensorT& in = value(n.inputs[0]);
                TensorT& gi = *gin[0];
                const int C = in.dim(0), H = in.dim(1), W = in.dim(2);
                const int A = gout.dim(1), B = gout.dim(2);
                const std::size_t plane = static_cast<std::size_t>(A) * B;
                const int len = axis == Axis::kC ? C : axis == Axis::kH ? H : W;
                auto index = [&](int a, int b, int j) -> std::size_t {
                  switch (axis) {
                    case Axis::kC: return (static_cast<std::size_t>(j) * H + a) * W + b;
                    case Axis::kH: return (static_cast<std::size_t>(a) * H + j) * W + b;
                    default: return (static_cast<std::size_t>(a) * H + b) * W + j;
                  }
                };
                for (int a = 0; a < A; ++a) {
                  for (int b = 0; b < B; ++b) {
                    const std::size_t o = static_cast<std::size_t>(a) * B + b;
                    int arg = 0;
                    for (int j = 1; j < len; ++j) {
                      if (in[index(a, b, j)] > in[index(a, b, arg)]) arg = j;
                    }
                    gi[index(a, b, arg)] += gout[o];
                    const T share = gout[plane + o] / static_cast<T>(len);
                    for (int j = 0; j < len; ++j) gi[index(a, b, j)] += share;
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::sigmoid(NodeId x) {
  TensorT out = ops::activation(value(x), Activation::kSigmoid);
  return push(OpKind::kSigmoid, {x}, std::move(out),
              [](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                for (std::size_t i = 0; i < gout.size(); ++i) {
                  const T y = n.value[i];
                  (*gin[0])[i] += gout[i] * y * (T(1) - y);
                }
              });
}

template <typename T>
NodeId Tape<T>::relu(NodeId x) {
  TensorT out = ops::activation(value(x), Activation::kRelu);
  return push(OpKind::kRelu, {x}, std::move(out),
              [this](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                const TensorT& in = value(n.inputs[0]);
                for (std::size_t i = 0; i < gout.size(); ++i) {
                  if (in[i] > T(0)) (*gin[0])[i] += gout[i];
                }
              });
}

template <typename T>
NodeId Tape<T>::softmax(NodeId x) {
  TensorT out = ops::activation(value(x), Activation::kSoftmaxLastAxis);
  return push(OpKind::kSoftmax, {x}, std::move(out),
              [](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                const std::size_t len = static_cast<std::size_t>(n.value.shape().back());
                for (std::size_t row = 0; row < gout.size(); row += len) {
                  T dot = 0;
                  for (std::size_t j = 0; j < len; ++j) dot += gout[row + j] * n.value[row + j];
                  for (std::size_t j = 0; j < len; ++j) {
                    (*gin[0])[row + j] += n.value[row + j] * (gout[row + j] - dot);
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::dense(NodeId x, NodeId weights, NodeId bias) {
  TensorT out = ops::dense(value(x), value(weights), value(bias));
  return push(OpKind::kDense, {x, weights, bias}, std::move(out),
              [this](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                const TensorT& xv = value(n.inputs[0]);
                const TensorT& wv = value(n.inputs[1]);
                const int m = wv.dim(0), k = wv.dim(1);
                const int batch = xv.rank() == 2 ? xv.dim(0) : 1;
                for (int b = 0; b < batch; ++b) {
                  const T* xr = xv.data().data() + static_cast<std::size_t>(b) * k;
                  const T* gr = gout.data().data() + static_cast<std::size_t>(b) * m;
                  for (int i = 0; i < m; ++i) {
                    const T g = gr[i];
                    if (g == T(0)) continue;
                    const std::size_t row = static_cast<std::size_t>(i) * k;
                    if (gin[0]) {
                      T* gx = gin[0]->data().data() + static_cast<std::size_t>(b) * k;
                      for (int j = 0; j < k; ++j) gx[j] += g * wv[row + j];
                    }
                    if (gin[1]) {
                      T* gw = gin[1]->data().data() + row;
                      for (int j = 0; j < k; ++j) gw[j] += g * xr[j];
                    }
                    if (gin[2]) (*gin[2])[i] += g;
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::avgpool2x2(NodeId x) {
  TensorT out = ops::avgpool2x2(value(x));
  return push(OpKind::kAvgPool, {x}, std::move(out),
              [](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                TensorT& gi = *gin[0];
                for (int c = 0; c < gout.dim(0); ++c) {
                  for (int y = 0; y < gout.dim(1); ++y) {
                    for (int x = 0; x < gout.dim(2); ++x) {
                      const T g = gout.at(c, y, x) * T(0.25);
                      gi.at(c, 2 * y, 2 * x) += g;
                      gi.at(c, 2 * y, 2 * x + 1) += g;
                      gi.at(c, 2 * y + 1, 2 * x) += g;
                      gi.at(c, 2 * y + 1, 2 * x + 1) += g;
                    }
                  }
                }
                (void)n;
              });
}

template <typename T>
NodeId Tape<T>::global_avg_pool(NodeId x) {
  TensorT out = ops::global_avg_pool(value(x));
  return push(OpKind::kGlobalAvgPool, {x}, std::move(out),
              [](const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                TensorT& gi = *gin[0];
                const std::size_t plane = gi.size() / gout.size();
                for (std::size_t c = 0; c < gout.size(); ++c) {
                  const T g = gout[c] / static_cast<T>(plane);
                  for (std::size_t j = 0; j < plane; ++j) gi[c * plane + j] += g;
                }
              });
}

template <typename T>
NodeId Tape<T>::gate_mul(NodeId psi, NodeId gate, Axis axis) {
  TensorT out = ops::gate_mul(value(psi), value(gate), axis);
  return push(OpKind::kGateMul, {psi, gate}, std::move(out),
              [this, axis](const Node& n, const TensorT& gout, std::span<TensorT* const> gin) {
                const TensorT& p = value(n.inputs[0]);
                const TensorT& g = value(n.inputs[1]);
                const int C = p.dim(0), H = p.dim(1), W = p.dim(2);
                for (int c = 0; c < C; ++c) {
                  for (int h = 0; h < H; ++h) {
                    for (int w = 0; w < W; ++w) {
                      std::size_t gi;
                      switch (axis) {
                        case Axis::kC: gi = static_cast<std::size_t>(h) * W + w; break;
                        case Axis::kH: gi = static_cast<std::size_t>(c) * W + w; break;
                        default: gi = static_cast<std::size_t>(c) * H + h; break;
                      }
                      const T go = gout.at(c, h, w);
                      if (gin[0]) gin[0]->at(c, h, w) += go * g[gi];
                      if (gin[1]) (*gin[1])[gi] += go * p.at(c, h, w);
                    }
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::add(NodeId a, NodeId b) {
  const TensorT& av = value(a);
  const TensorT& bv = value(b);
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  TensorT out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return push(OpKind::kAdd, {a, b}, std::move(out),
              [](const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                for (TensorT* g : gin) {
                  if (!g) continue;
                  for (std::size_t i = 0; i < gout.size(); ++i) (*g)[i] += gout[i];
                }
              });
}

template <typename T>
NodeId Tape<T>::scale(NodeId x, T factor) {
  TensorT out = value(x);
  for (T& v : out.data()) v *= factor;
  return push(OpKind::kScale, {x}, std::move(out),
              [factor](const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                for (std::size_t i = 0; i < gout.size(); ++i) (*gin[0])[i] += factor * gout[i];
              });
}

template <typename T>
NodeId Tape<T>::stack(std::span<const NodeId> rows) {
  if (rows.empty()) throw ShapeError("stack: no rows");
  const Shape row_shape = value(rows[0]).shape();
  if (row_shape.size() != 1) throw ShapeError("stack: rows must be rank 1, got " + shape_string(row_shape));
  const int n = row_shape[0];
  std::vector<T> data;
  data.reserve(rows.size() * static_cast<std::size_t>(n));
  for (NodeId r : rows) {
    const TensorT& v = value(r);
    if (v.shape() != row_shape) {
      throw ShapeError("stack: " + shape_string(v.shape()) + " vs " + shape_string(row_shape));
    }
    data.insert(data.end(), v.data().begin(), v.data().end());
  }
  TensorT out({static_cast<int>(rows.size()), n}, std::move(data));
  return push(OpKind::kStack, {rows.begin(), rows.end()}, std::move(out),
              [n](const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                for (std::size_t r = 0; r < gin.size(); ++r) {
                  if (!gin[r]) continue;
                  for (int j = 0; j < n; ++j) (*gin[r])[j] += gout[r * n + j];
                }
              });
}

template <typename T>
NodeId Tape<T>::batch_norm(NodeId x, NodeId gamma, NodeId beta, T eps,
                           TensorT* batch_mean, TensorT* batch_var) {
  const TensorT& xv = value(x);
  const TensorT& gv = value(gamma);
  const TensorT& bv = value(beta);
  if (xv.rank() != 2 || gv.shape() != Shape{xv.dim(1)} || bv.shape() != gv.shape()) {
    throw ShapeError("batch_norm: x " + shape_string(xv.shape()) + " gamma " +
                     shape_string(gv.shape()) + " beta " + shape_string(bv.shape()));
  }
  const int B = xv.dim(0), n = xv.dim(1);
  TensorT mean({n}), var({n}), inv_std({n}), x_hat(xv.shape()), out(xv.shape());
  for (int j = 0; j < n; ++j) {
    T m = 0;
    for (int b = 0; b < B; ++b) m += xv[static_cast<std::size_t>(b) * n + j];
    m /= static_cast<T>(B);
    T v = 0;
    for (int b = 0; b < B; ++b) {
      const T d = xv[static_cast<std::size_t>(b) * n + j] - m;
      v += d * d;
    }
    v /= static_cast<T>(B);
    mean[j] = m;
    var[j] = v;
    inv_std[j] = T(1) / std::sqrt(v + eps);
    for (int b = 0; b < B; ++b) {
      const std::size_t i = static_cast<std::size_t>(b) * n + j;
      x_hat[i] = (xv[i] - m) * inv_std[j];
      out[i] = gv[j] * x_hat[i] + bv[j];
    }
  }
  if (batch_mean) *batch_mean = mean;
  if (batch_var) *batch_var = var;
  return push(OpKind::kBatchNorm, {x, gamma, beta}, std::move(out),
              [this, x_hat = std::move(x_hat), inv_std = std::move(inv_std), B, n](
                  const Node& node, const TensorT& gout, std::span<TensorT* const> gin) {
                const TensorT& gv = value(node.inputs[1]);
                for (int j = 0; j < n; ++j) {
                  T sum_g = 0, sum_gx = 0;
                  for (int b = 0; b < B; ++b) {
                    const std::size_t i = static_cast<std::size_t>(b) * n + j;
                    sum_g += gout[i];
                    sum_gx += gout[i] * x_hat[i];
                  }
                  if (gin[1]) (*gin[1])[j] += sum_gx;
                  if (gin[2]) (*gin[2])[j] += sum_g;
                  if (!gin[0]) continue;
                  const T k = gv[j] * inv_std[j] / static_cast<T>(B);
                  for (int b = 0; b < B; ++b) {
                    const std::size_t i = static_cast<std::size_t>(b) * n + j;
                    (*gin[0])[i] += k * (static_cast<T>(B) * gout[i] - sum_g - x_hat[i] * sum_gx);
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::affine_norm(NodeId x, const TensorT& mean, const TensorT& var,
                            NodeId gamma, NodeId beta, T eps) {
  const TensorT& xv = value(x);
  const TensorT& gv = value(gamma);
  const TensorT& bv = value(beta);
  const int n = xv.shape().back();
  if (gv.shape() != Shape{n} || bv.shape() != gv.shape() || mean.shape() != gv.shape() ||
      var.shape() != gv.shape()) {
    throw ShapeError("affine_norm: x " + shape_string(xv.shape()) + " gamma " +
                     shape_string(gv.shape()) + " stats " + shape_string(mean.shape()));
  }
  TensorT inv_std({n}), x_hat(xv.shape()), out(xv.shape());
  for (int j = 0; j < n; ++j) inv_std[j] = T(1) / std::sqrt(var[j] + eps);
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const std::size_t j = i % static_cast<std::size_t>(n);
    x_hat[i] = (xv[i] - mean[j]) * inv_std[j];
    out[i] = gv[j] * x_hat[i] + bv[j];
  }
  return push(OpKind::kAffineNorm, {x, gamma, beta}, std::move(out),
              [this, x_hat = std::move(x_hat), inv_std = std::move(inv_std), n](
                  const Node& node, const TensorT& gout, std::span<TensorT* const> gin) {
                const TensorT& gv = value(node.inputs[1]);
                for (std::size_t i = 0; i < gout.size(); ++i) {
                  const std::size_t j = i % static_cast<std::size_t>(n);
                  if (gin[0]) (*gin[0])[i] += gout[i] * gv[j] * inv_std[j];
                  if (gin[1]) (*gin[1])[j] += gout[i] * x_hat[i];
                  if (gin[2]) (*gin[2])[j] += gout[i];
                }
              });
}

template <typename T>
NodeId Tape<T>::dropout(NodeId x, T keep_prob, std::mt19937_64& rng) {
  if (!(keep_prob > T(0) && keep_prob <= T(1))) {
    throw ContractError("dropout: keep probability must lie in (0,1]");
  }
  const TensorT& xv = value(x);
  TensorT mask(xv.shape(), T(1));
  if (keep_prob < T(1)) {
    std::bernoulli_distribution keep(static_cast<double>(keep_prob));
    for (T& m : mask.data()) m = keep(rng) ? T(1) / keep_prob : T(0);
  }
  TensorT out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return push(OpKind::kDropout, {x}, std::move(out),
              [mask = std::move(mask)](const Node&, const TensorT& gout,
                                       std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                for (std::size_t i = 0; i < gout.size(); ++i) (*gin[0])[i] += gout[i] * mask[i];
              });
}

template <typename T>
NodeId Tape<T>::softmax_cross_entropy(NodeId logits, std::span<const int> labels) {
  const TensorT& lv = value(logits);
  const int L = lv.shape().back();
  const int B = lv.rank() == 2 ? lv.dim(0) : 1;
  if (lv.rank() < 1 || lv.rank() > 2 || static_cast<int>(labels.size()) != B) {
    throw ShapeError("softmax_cross_entropy: logits " + shape_string(lv.shape()) + " with " +
                     std::to_string(labels.size()) + " labels");
  }
  TensorT probs = ops::activation(lv, Activation::kSoftmaxLastAxis);
  T loss = 0;
  for (int b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || y >= L) throw ContractError("label " + std::to_string(y) + " out of range");
    // log-sum-exp form keeps the loss finite even when probs underflow.
    const T* row = lv.data().data() + static_cast<std::size_t>(b) * L;
    const T mx = *std::max_element(row, row + L);
    T s = 0;
    for (int j = 0; j < L; ++j) s += std::exp(row[j] - mx);
    loss += std::log(s) + mx - row[y];
  }
  loss /= static_cast<T>(B);
  std::vector<int> targets(labels.begin(), labels.end());
  return push(OpKind::kCrossEntropy, {logits}, TensorT({1}, {loss}),
              [probs = std::move(probs), targets = std::move(targets), B, L](
                  const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                const T scale = gout[0] / static_cast<T>(B);
                for (int b = 0; b < B; ++b) {
                  for (int j = 0; j < L; ++j) {
                    const std::size_t i = static_cast<std::size_t>(b) * L + j;
                    const T onehot = j == targets[b] ? T(1) : T(0);
                    (*gin[0])[i] += scale * (probs[i] - onehot);
                  }
                }
              });
}

template <typename T>
NodeId Tape<T>::sum(NodeId x) {
  T total = 0;
  for (T v : value(x).data()) total += v;
  return push(OpKind::kSum, {x}, TensorT({1}, {total}),
              [](const Node&, const TensorT& gout, std::span<TensorT* const> gin) {
                if (!gin[0]) return;
                for (T& g : gin[0]->data()) g += gout[0];
              });
}

template <typename T>
Gradients<T> Tape<T>::backward(NodeId loss) const {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " +
                        shape_string(root.value.shape()));
  }
  Gradients<T> result;
  result.grads_.emplace(loss, TensorT(root.value.shape(), T(1)));

  std::vector<TensorT*> gin;
  for (NodeId id = loss + 1; id-- > 0;) {
    auto it = result.grads_.find(id);
    if (it == result.grads_.end()) continue;
    const Node& n = nodes_[id];
    const TensorT& grad_out = it->second;
    result.visit_order_.push_back(id);
    if (!n.backward) continue;
    gin.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      const Node& in = nodes_[n.inputs[k]];
      if (!in.needs_grad) continue;
      auto [slot, inserted] = result.grads_.try_emplace(n.inputs[k], in.value.shape(), T(0));
      gin[k] = &slot->second;
    }
    // unordered_map references survive rehashing; iterators do not.
    n.backward(n, grad_out, gin);
  }
  return result;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace evs::ad
