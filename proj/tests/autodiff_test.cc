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

#include <gtest/gtest.h>

#include <functional>
#include <random>
#include <set>

#include "evs/checkpoint.h"
#include "oracles.h"

namespace evs::ad {
namespace {

using DTensor = BasicTensor<double>;

DTensor random_dtensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  DTensor t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

// Builds a graph over `leaves` and returns a scalar node. Checks every leaf
// coordinate against central differences of the same builder.
void expect_gradients_match(std::vector<DTensor> leaves,
                            const std::function<NodeId(Tape<double>&, const std::vector<NodeId>&)>& build,
                            double eps = 1e-5, double tol = 1e-6) {
  auto evaluate = [&](std::vector<DTensor>& values, Gradients<double>* grads,
                      std::vector<NodeId>* ids) {
    Tape<double> tape;
    std::vector<NodeId> leaf_ids;
    for (auto& v : values) leaf_ids.push_back(tape.variable(v));
    const NodeId loss = build(tape, leaf_ids);
    if (grads) *grads = tape.backward(loss);
    if (ids) *ids = leaf_ids;
    return tape.value(loss)[0];
  };
  Gradients<double> grads;
  std::vector<NodeId> ids;
  evaluate(leaves, &grads, &ids);
  std::vector<double*> coords;
  for (auto& l : leaves) {
    for (double& v : l.data()) coords.push_back(&v);
  }
  const auto fd = oracle::central_difference([&] { return evaluate(leaves, nullptr, nullptr); },
                                             coords, eps);
  std::size_t k = 0;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    ASSERT_TRUE(grads.contains(ids[l]));
    const DTensor& g = grads[ids[l]];
    for (std::size_t i = 0; i < g.size(); ++i, ++k) {
      EXPECT_NEAR(g[i], fd[k], tol * std::max(1.0, std::abs(fd[k]))) << "leaf " << l << " coord " << i;
    }
  }
}

TEST(BackwardTest, SumGivesOnes) {
  Tape<float> tape;
  const NodeId x = tape.variable(Tensor({2, 3, 4}, 0.7f));
  const auto grads = tape.backward(tape.sum(x));
  for (float g : grads[x].data()) EXPECT_EQ(g, 1.0f);
}

TEST(BackwardTest, SigmoidOfDotAtZero) {
  Tape<float> tape;
  const Tensor xv({3}, {1, -2, 0.5f});
  const NodeId w = tape.parameter(Tensor({1, 3}));
  const NodeId x = tape.constant(xv);
  const NodeId loss = tape.sum(tape.sigmoid(tape.dense(x, w, tape.constant(Tensor({1})))));
  const auto grads = tape.backward(loss);
  for (int j = 0; j < 3; ++j) EXPECT_FLOAT_EQ(grads[w][j], 0.25f * xv[j]);
  EXPECT_FALSE(grads.contains(x));
}

TEST(BackwardTest, LossGradientIsOne) {
  Tape<float> tape;
  const NodeId loss = tape.sum(tape.variable(Tensor({2}, 1.0f)));
  EXPECT_EQ(tape.backward(loss)[loss][0], 1.0f);
}

TEST(BackwardTest, NonScalarLossIsContractError) {
  Tape<float> tape;
  const NodeId x = tape.variable(Tensor({2}));
  EXPECT_THROW(tape.backward(tape.relu(x)), ContractError);
}

TEST(BackwardTest, VisitsEachReachableNodeOnceInReverseOrder) {
  Tape<double> tape;
  std::mt19937_64 rng(4);
  const NodeId x = tape.variable(random_dtensor({2, 6, 6}, rng));
  const NodeId k = tape.parameter(random_dtensor({1, 2, 7, 7}, rng));
  const NodeId gate = tape.sigmoid(tape.conv2d(tape.zpool(x, Axis::kC), k, std::nullopt, Padding::kSame));
  const NodeId y = tape.add(tape.gate_mul(x, gate, Axis::kC), x);  // x used twice
  const NodeId unused = tape.relu(x);
  const NodeId loss = tape.sum(y);
  const auto grads = tape.backward(loss);
  const auto& order = grads.visit_order();
  std::set<NodeId> seen(order.begin(), order.end());
  EXPECT_EQ(seen.size(), order.size());
  EXPECT_TRUE(std::is_sorted(order.rbegin(), order.rend()));
  EXPECT_FALSE(seen.count(unused));
  for (NodeId id = 0; id < tape.size(); ++id) {
    for (NodeId in : tape.inputs(id)) EXPECT_LT(in, id);
  }
}

TEST(OpGradientTest, Conv2dSameAndValid) {
  std::mt19937_64 rng(21);
  for (Padding p : {Padding::kSame, Padding::kValid}) {
    expect_gradients_match({random_dtensor({2, 6, 5}, rng), random_dtensor({3, 2, 3, 3}, rng),
                            random_dtensor({3}, rng)},
                           [p](Tape<double>& t, const std::vector<NodeId>& in) {
                             return t.sum(t.sigmoid(t.conv2d(in[0], in[1], in[2], p)));
                           });
  }
}

TEST(OpGradientTest, ZpoolEachAxis) {
  std::mt19937_64 rng(22);
  for (Axis a : {Axis::kC, Axis::kH, Axis::kW}) {
    expect_gradients_match({random_dtensor({3, 4, 5}, rng)},
                           [a](Tape<double>& t, const std::vector<NodeId>& in) {
                             // weight the pooled map so max and mean channels get distinct grads
                             const NodeId z = t.zpool(in[0], a);
                             const NodeId s = t.sigmoid(z);
                             return t.sum(t.scale(t.add(s, t.relu(z)), 0.5));
                           });
  }
}

TEST(OpGradientTest, GateMulEachAxis) {
  std::mt19937_64 rng(23);
  const Shape gates[3] = {{1, 4, 5}, {1, 3, 5}, {1, 3, 4}};
  const Axis axes[3] = {Axis::kC, Axis::kH, Axis::kW};
  for (int i = 0; i < 3; ++i) {
    expect_gradients_match({random_dtensor({3, 4, 5}, rng), random_dtensor(gates[i], rng)},
                           [a = axes[i]](Tape<double>& t, const std::vector<NodeId>& in) {
                             return t.sum(t.sigmoid(t.gate_mul(in[0], in[1], a)));
                           });
  }
}

TEST(OpGradientTest, PoolingAndDense) {
  std::mt19937_64 rng(24);
  expect_gradients_match({random_dtensor({2, 5, 7}, rng), random_dtensor({3, 2}, rng), random_dtensor({3}, rng)},
                         [](Tape<double>& t, const std::vector<NodeId>& in) {
                           const NodeId g = t.global_avg_pool(t.avgpool2x2(in[0]));
                           return t.sum(t.sigmoid(t.dense(g, in[1], in[2])));
                         });
}

TEST(OpGradientTest, StackBatchNormSoftmaxCrossEntropy) {
  std::mt19937_64 rng(25);
  expect_gradients_match({random_dtensor({4}, rng), random_dtensor({4}, rng), random_dtensor({4}, rng),
                          random_dtensor({4}, rng, 0.5, 1.5), random_dtensor({4}, rng),
                          random_dtensor({3, 4}, rng), random_dtensor({3}, rng)},
                         [](Tape<double>& t, const std::vector<NodeId>& in) {
                           const std::vector<NodeId> rows{in[0], in[1], in[2]};
                           const NodeId bn = t.batch_norm(t.stack(rows), in[3], in[4], 1e-5);
                           const NodeId logits = t.dense(bn, in[5], in[6]);
                           const std::vector<int> labels{0, 2, 1};
                           return t.softmax_cross_entropy(logits, labels);
                         });
}

TEST(OpGradientTest, AffineNormSoftmaxAndDropout) {
  std::mt19937_64 rng(26);
  const DTensor mean = random_dtensor({5}, rng), var = random_dtensor({5}, rng, 0.2, 2);
  expect_gradients_match({random_dtensor({2, 5}, rng), random_dtensor({5}, rng), random_dtensor({5}, rng)},
                         [&](Tape<double>& t, const std::vector<NodeId>& in) {
                           std::mt19937_64 mask_rng(99);  // same mask on every evaluation
                           const NodeId d = t.dropout(in[0], 0.8, mask_rng);
                           const NodeId n = t.affine_norm(d, mean, var, in[1], in[2], 1e-5);
                           const NodeId sm = t.softmax(n);
                           // softmax rows sum to 1, so weight them unevenly before reducing
                           const NodeId w = t.constant(DTensor({1, 5}, {3, -1, 2, 0.5, -2}));
                           return t.sum(t.sigmoid(t.dense(sm, w, t.constant(DTensor({1})))));
                         });
}

TEST(DropoutTest, MaskIsSeededAndInverted) {
  Tape<float> a, b;
  std::mt19937_64 r1(5), r2(5);
  const NodeId xa = a.dropout(a.constant(Tensor({1000}, 1.0f)), 0.8f, r1);
  const NodeId xb = b.dropout(b.constant(Tensor({1000}, 1.0f)), 0.8f, r2);
  EXPECT_EQ(a.value(xa), b.value(xb));
  int kept = 0;
  for (float v : a.value(xa).data()) {
    ASSERT_TRUE(v == 0.0f || v == 1.25f);
    kept += v > 0;
  }
  EXPECT_NEAR(kept / 1000.0, 0.8, 0.05);
}

TEST(CheckpointTest, RoundTripRandomTensors) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> rank(0, 4), dim(1, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<NamedTensor> tensors;
    const int n = trial % 5;
    for (int i = 0; i < n; ++i) {
      Shape s;
      for (int r = rank(rng); r > 0; --r) s.push_back(dim(rng));
      Tensor t(s);
      std::normal_distribution<float> nd;
      for (float& v : t.data()) v = nd(rng);
      tensors.push_back({"t" + std::to_string(i), t});
    }
    EXPECT_EQ(decode_checkpoint(encode_checkpoint(tensors)), tensors);
  }
}

TEST(CheckpointTest, LayoutIsLittleEndian) {
  const std::vector<NamedTensor> one{{"w", Tensor({2}, {1.0f, -2.0f})}};
  const auto bytes = encode_checkpoint(one);
  const std::vector<std::uint8_t> expected{
      'E', 'V', 'S', 'M', 1, 0,  1, 0, 0, 0,  1, 0, 'w',  1, 0, 0, 0,  2, 0, 0, 0,
      0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};
  EXPECT_EQ(bytes, expected);
}

TEST(CheckpointTest, RejectsCorruptInput) {
  const std::vector<NamedTensor> one{{"w", Tensor({2, 2}, 1.0f)}};
  auto bytes = encode_checkpoint(one);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_THROW(decode_checkpoint(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(decode_checkpoint(trailing), FormatError);
}

}  // namespace
}  // namespace evs::ad
