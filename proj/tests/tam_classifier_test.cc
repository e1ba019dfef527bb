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

#include "evs/tam_classifier.h"

#include <gtest/gtest.h>

#include <random>

#include "gradcheck.h"
#include "oracles.h"

namespace evs {
namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, float lo = -1, float hi = 1) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<float> d(lo, hi);
  for (float& v : t.data()) v = d(rng);
  return t;
}

TamParams random_tam(std::mt19937_64& rng) {
  TamParams p;
  for (auto& b : p.branches) {
    b.weight = random_tensor({1, 2, 7, 7}, rng, -0.3f, 0.3f);
    b.bias = random_tensor({1}, rng);
  }
  return p;
}

// 3x90x160 image: one solid colour, or a two-colour checkerboard.
Tensor synthetic_image(bool checker, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> c(0.1f, 0.9f);
  std::uniform_int_distribution<int> cell(6, 14);
  const float a[3] = {c(rng), c(rng), c(rng)};
  float b[3];
  for (int i = 0; i < 3; ++i) b[i] = 1.0f - a[i];
  const int s = cell(rng);
  Tensor t({3, kThumbnailHeight, kThumbnailWidth});
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < kThumbnailHeight; ++y) {
      for (int x = 0; x < kThumbnailWidth; ++x) {
        const bool odd = ((y / s) + (x / s)) % 2 == 1;
        t.at(ch, y, x) = checker && odd ? b[ch] : a[ch];
      }
    }
  }
  return t;
}

std::vector<LabeledImage> solid_vs_checker(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<LabeledImage> out;
  for (int i = 0; i < per_class; ++i) {
    out.push_back({synthetic_image(false, rng), 0});
    out.push_back({synthetic_image(true, rng), 1});
  }
  return out;
}

ModelConfig toy_config() {
  ModelConfig c;
  c.labels = {"solid", "checkerboard"};
  c.backbone_channels = {4, 8, 8};
  c.seed = 7;
  return c;
}

TEST(TamForwardTest, ZeroParamsHalveInput) {
  std::mt19937_64 rng(1);
  Tensor psi = random_tensor({3, 5, 6}, rng);
  Tensor out = tam_forward(psi, TamParams::zeros());
  for (std::size_t i = 0; i < psi.size(); ++i) EXPECT_NEAR(out[i], 0.5f * psi[i], 1e-6);
}

TEST(TamForwardTest, ZeroInputGivesZero) {
  std::mt19937_64 rng(2);
  Tensor out = tam_forward(Tensor({2, 4, 4}), random_tam(rng));
  for (float v : out.data()) EXPECT_EQ(v, 0.0f);
}

TEST(TamForwardTest, MatchesStandaloneComposition) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor psi = random_tensor({2, 4, 4}, rng);
    TamParams p = random_tam(rng);
    oracle::Volume v(2, 4, 4);
    for (std::size_t i = 0; i < psi.size(); ++i) v.v[i] = psi[i];
    oracle::Branch branches[3];
    for (int b = 0; b < 3; ++b) {
      branches[b].kernel.assign(p.branches[b].weight.data().begin(), p.branches[b].weight.data().end());
      branches[b].bias = p.branches[b].bias[0];
    }
    const auto ref = oracle::tam(v, branches);
    Tensor out = tam_forward(psi, p);
    for (std::size_t i = 0; i < out.size(); ++i) ASSERT_NEAR(out[i], ref.v[i], 1e-5);
  }
}

TEST(TamForwardTest, PreservesShape) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(1, 8);
  TamParams p = random_tam(rng);
  for (int trial = 0; trial < 100; ++trial) {
    const Shape s{dim(rng), dim(rng), dim(rng)};
    EXPECT_EQ(tam_forward(random_tensor(s, rng), p).shape(), s);
  }
}

// With H == W and psi[c,h,w] == psi[c,w,h], swapping the width-channel and
// height-channel branch parameters (and transposing the spatial kernel of
// the height-width branch) transposes the output.
TEST(TamForwardTest, BranchExchangeSymmetry) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int c = 1 + trial % 4, n = 2 + trial % 6;
    Tensor psi({c, n, n});
    std::uniform_real_distribution<float> d(-1, 1);
    for (int i = 0; i < c; ++i) {
      for (int h = 0; h < n; ++h) {
        for (int w = h; w < n; ++w) psi.at(i, h, w) = psi.at(i, w, h) = d(rng);
      }
    }
    TamParams p = random_tam(rng);
    TamParams q = p;
    std::swap(q.branches[0], q.branches[1]);
    for (int ch = 0; ch < 2; ++ch) {
      for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 7; ++x) {
          q.branches[2].weight[(ch * 7 + y) * 7 + x] = p.branches[2].weight[(ch * 7 + x) * 7 + y];
        }
      }
    }
    Tensor a = tam_forward(psi, p), b = tam_forward(psi, q);
    for (int i = 0; i < c; ++i) {
      for (int h = 0; h < n; ++h) {
        for (int w = 0; w < n; ++w) ASSERT_NEAR(b.at(i, h, w), a.at(i, w, h), 1e-6);
      }
    }
  }
}

TEST(ClassifyTest, ZeroClassifierIsUniform) {
  ModelConfig config = toy_config();
  config.labels = {"a", "b", "c", "d", "e"};
  ClassifierModel m = make_model(config);
  m.head.classifier.weight = Tensor(m.head.classifier.weight.shape());
  std::mt19937_64 rng(6);
  const auto probs = classify(synthetic_image(true, rng), m);
  ASSERT_EQ(probs.size(), 5u);
  for (float p : probs) EXPECT_NEAR(p, 0.2f, 1e-7);
}

TEST(ClassifyTest, ProbabilitiesSumToOneAndArePure) {
  ClassifierModel m = make_model(toy_config());
  std::mt19937_64 rng(7);
  Tensor im = synthetic_image(false, rng);
  const auto a = classify(im, m);
  double sum = 0;
  for (float p : a) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_EQ(classify(im, m), a);
}

TEST(ClassifyTest, RejectsWrongDimsAndLabelMismatch) {
  ClassifierModel m = make_model(toy_config());
  EXPECT_THROW(classify(Tensor({3, 90, 159}), m), ShapeError);
  EXPECT_THROW(classify(Tensor({1, 90, 160}), m), ShapeError);
  m.labels.push_back("extra");
  EXPECT_THROW(classify(Tensor({3, 90, 160}), m), ModelError);
}

TEST(ClassifyTest, PermutingLabelsPermutesOutput) {
  ModelConfig config = toy_config();
  config.labels = {"x", "y", "z"};
  ClassifierModel m = make_model(config);
  std::mt19937_64 rng(8);
  Tensor im = synthetic_image(true, rng);
  const auto before = classify(im, m);
  const int perm[3] = {2, 0, 1};
  ClassifierModel p = m;
  const int width = m.head.classifier.weight.dim(1);
  for (int i = 0; i < 3; ++i) {
    p.labels[i] = m.labels[perm[i]];
    p.head.classifier.bias[i] = m.head.classifier.bias[perm[i]];
    for (int j = 0; j < width; ++j) {
      p.head.classifier.weight[i * width + j] = m.head.classifier.weight[perm[i] * width + j];
    }
  }
  const auto after = classify(im, p);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(after[i], before[perm[i]]);
}

TEST(ClassifyTest, TapeInferenceMatchesDirectForward) {
  ClassifierModel m = make_model(toy_config());
  std::mt19937_64 rng(9);
  for (float& v : m.head.bn.running_mean.data()) v = std::uniform_real_distribution<float>(-1, 1)(rng);
  std::vector<Tensor> images{synthetic_image(true, rng), synthetic_image(false, rng)};
  ad::Tape<float> tape;
  auto pass = build_forward<float>(tape, m, images, Mode::kInfer, 1.0f, rng);
  const Tensor& logits = tape.value(pass.logits);
  for (int b = 0; b < 2; ++b) {
    const Tensor direct = forward_logits(images[b], m);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(logits[b * 2 + j], direct[j], 1e-5);
  }
}

TEST(ParamCountTest, TamBranchesAndHead) {
  ClassifierModel m;
  m.tam = TamParams::zeros();
  const ParamCounts empty = param_count(m);
  EXPECT_EQ(empty.tam, 3u * (2 * 7 * 7 + 1));
  EXPECT_EQ(empty.tam, 297u);
  EXPECT_EQ(empty.head, 0u);
  EXPECT_EQ(empty.backbone, 0u);

  const ClassifierModel full = make_model(toy_config());
  const ParamCounts c = param_count(full);
  EXPECT_EQ(c.tam, 297u);
  // backbone (3->4, 4->8, 8->8 conv3x3 + biases)
  EXPECT_EQ(c.backbone, (3 * 4 * 9 + 4) + (4 * 8 * 9 + 8) + (8 * 8 * 9 + 8));
  // dense 8->512, 512->512, BN gamma/beta, classifier 512->2
  EXPECT_EQ(c.head, (8 * 512 + 512) + (512 * 512 + 512) + 2 * 512 + (512 * 2 + 2));
  EXPECT_EQ(c.total, c.backbone + c.tam + c.head);
  EXPECT_EQ(param_count(load_model(save_model(full))).total, c.total);
}

TEST(CheckpointModelTest, RoundTripPreservesEverything) {
  ClassifierModel m = make_model(toy_config());
  m.head.bn.running_var[3] = 2.5f;
  const auto bytes = save_model(m);
  ClassifierModel back = load_model(bytes);
  EXPECT_EQ(back.labels, m.labels);
  EXPECT_EQ(save_model(back), bytes);
  EXPECT_EQ(back.head.bn.running_var[3], 2.5f);
}

TEST(CheckpointModelTest, RejectsDamagedFiles) {
  auto bytes = save_model(make_model(toy_config()));
  auto cut = bytes;
  cut.resize(cut.size() - 4);
  EXPECT_THROW(load_model(cut), FormatError);
  auto extra = bytes;
  extra.push_back(1);
  EXPECT_THROW(load_model(extra), FormatError);
}

TEST(GradientTest, FullModelMatchesFiniteDifferences) {
  const ClassifierModel m = testing::small_gradcheck_model(3);
  const auto report = testing::check_model_gradients(m, testing::random_images(3, 24, 32, 4), {0, 2, 1});
  EXPECT_LE(report.params, 5000u);
  EXPECT_GT(report.checked, report.params / 2);
  EXPECT_GE(report.pass_fraction(), 0.99) << "max rel error " << report.max_rel_error;
}

TEST(TrainTest, SolidVersusCheckerboard) {
  const auto data = solid_vs_checker(12, 100);
  const auto held_out = solid_vs_checker(10, 200);
  TrainConfig tc;
  tc.epochs = 20;
  const TrainResult r = train(data, toy_config(), tc);
  ASSERT_EQ(r.epoch_loss.size(), 20u);
  EXPECT_LT(r.epoch_loss.back(), r.epoch_loss.front());
  EXPECT_GE(accuracy(r.model, data), 0.95);
  EXPECT_GE(accuracy(r.model, held_out), 0.95);
}

TEST(TrainTest, OverfitsOneExamplePerClass) {
  std::mt19937_64 rng(11);
  const std::vector<LabeledImage> data{{synthetic_image(false, rng), 0}, {synthetic_image(true, rng), 1}};
  TrainConfig tc;
  tc.epochs = 60;
  tc.keep_prob = 1.0f;
  const TrainResult r = train(data, toy_config(), tc);
  EXPECT_LT(r.epoch_loss.back(), 0.05);
  EXPECT_EQ(accuracy(r.model, data), 1.0);
}

TEST(TrainTest, ZeroLearningRateLeavesParametersUnchanged) {
  const auto data = solid_vs_checker(3, 5);
  const ClassifierModel init = make_model(toy_config());
  TrainConfig tc;
  tc.learning_rate = 0.0f;
  tc.epochs = 2;
  const TrainResult r = train(init, data, tc);
  std::vector<Tensor> before, after;
  init.for_each_param([&](const std::string&, const Tensor& t) { before.push_back(t); });
  r.model.for_each_param([&](const std::string&, const Tensor& t) { after.push_back(t); });
  EXPECT_EQ(before, after);
}

TEST(TrainTest, FixedSeedIsBitIdentical) {
  const auto data = solid_vs_checker(4, 6);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 3;
  const auto a = train(data, toy_config(), tc);
  const auto b = train(data, toy_config(), tc);
  EXPECT_EQ(save_model(a.model), save_model(b.model));
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
}

TEST(TrainTest, RejectsSingleClassData) {
  std::mt19937_64 rng(12);
  const std::vector<LabeledImage> data{{synthetic_image(false, rng), 0}, {synthetic_image(false, rng), 0}};
  EXPECT_THROW(train(data, toy_config(), TrainConfig{}), DataError);
  const std::vector<LabeledImage> bad_label{{synthetic_image(false, rng), 5}};
  EXPECT_THROW(train(bad_label, toy_config(), TrainConfig{}), DataError);
}

}  // namespace
}  // namespace evs
